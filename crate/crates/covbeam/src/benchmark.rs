//! Communication-only baseline: the cheapest beamformer meeting every user's
//! SINR target, with no sensing consideration.
//!
//! The design minimizes total transmit power subject to per-user SINR
//! constraints expressed as second-order cones, leaving all dedicated
//! sensing columns at zero. It serves both as the comparison baseline for
//! coverage figures and as the feasible starting point for the iterative
//! coverage design.

use nalgebra::DVector;
use thiserror::Error;

use crate::channels::ChannelSet;
use crate::conic::embed::{LayoutError, VariableLayout};
use crate::conic::{
    assemble, solve, AssembleError, ConeKind, ConstraintBlock, SolveStatus, SolverError,
    SolverOptions, SparseRow,
};
use crate::metrics::{BeamformerSet, MetricsError};

#[derive(Debug, Error)]
pub enum BenchmarkError {
    #[error("at least one user is required")]
    NoUsers,
    #[error("got {got} SINR thresholds for {users} users")]
    ThresholdCount { got: usize, users: usize },
    #[error("SINR threshold must be positive, got {0}")]
    NonPositiveThreshold(f64),
    #[error("noise power must be positive, got {0}")]
    NonPositiveNoise(f64),
    #[error("channel {k} has length {got} but expected {want}")]
    ChannelDimension { k: usize, got: usize, want: usize },
    #[error("channel {0} is zero; its SINR target cannot be met")]
    ZeroChannel(usize),
    #[error("SINR targets are jointly unachievable (solver status {0:?})")]
    Unachievable(SolveStatus),
    #[error("minimum power {required:.6e} exceeds the budget {budget:.6e}")]
    PowerBudgetExceeded { required: f64, budget: f64 },
    #[error(
        "solved design misses user {user}'s SINR target: {achieved:.6e} < {required:.6e}"
    )]
    SinrShortfall {
        user: usize,
        achieved: f64,
        required: f64,
    },
    #[error(transparent)]
    Layout(#[from] LayoutError),
    #[error(transparent)]
    Assembly(#[from] AssembleError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
}

/// Name of the embedded complex variable holding user `k`'s column.
pub(crate) fn column_name(k: usize) -> String {
    format!("w{}", k + 1)
}

/// Relative slack when re-verifying solved SINRs; two orders above solver
/// tolerances, so it only fires on genuinely wrong answers.
const SINR_VERIFY_TOLERANCE: f64 = 1e-6;

/// Second-order SINR blocks shared by the baseline and the coverage design.
///
/// For each user `k` the rows bound the stacked received amplitudes and the
/// noise by `sqrt(1 + 1/gamma_k)` times the real part of the own-signal
/// amplitude, which is pinned real by one equality row per user in the
/// trailing zero-cone block.
///
/// Every block is expressed in noise-amplitude units: cones are invariant
/// under positive scaling of a whole block, and dividing by `sigma` moves
/// the rows from the raw channel scale to order one, which keeps the dual
/// variables of the surrounding program well conditioned.
pub(crate) fn sinr_soc_blocks(
    layout: &VariableLayout,
    channels: &ChannelSet,
    gamma_bars: &[f64],
    noise_power: f64,
) -> Result<Vec<ConstraintBlock>, LayoutError> {
    let k_users = channels.n_users();
    let sigma = noise_power.sqrt();
    let mut blocks = Vec::with_capacity(k_users + 1);
    let mut phase_rows = Vec::with_capacity(k_users);
    let mut phase_offsets = Vec::with_capacity(k_users);
    for (k, h_k) in channels.h.iter().enumerate() {
        let radius = (1.0 + 1.0 / gamma_bars[k]).sqrt();
        let (own_re, own_im) = layout.hermitian_rows(&column_name(k), h_k)?;
        let mut rows = vec![own_re.scaled(radius / sigma)];
        let mut offsets = vec![0.0];
        for i in 0..k_users {
            let (re, im) = layout.hermitian_rows(&column_name(i), h_k)?;
            rows.push(re.scaled(1.0 / sigma));
            offsets.push(0.0);
            rows.push(im.scaled(1.0 / sigma));
            offsets.push(0.0);
        }
        rows.push(SparseRow::empty());
        offsets.push(1.0);
        blocks.push(ConstraintBlock::new(
            format!("sinr_{}", k + 1),
            ConeKind::SecondOrder,
            rows,
            offsets,
        ));
        phase_rows.push(own_im.scaled(1.0 / sigma));
        phase_offsets.push(0.0);
    }
    blocks.push(ConstraintBlock::new(
        "phase",
        ConeKind::Zero,
        phase_rows,
        phase_offsets,
    ));
    Ok(blocks)
}

/// Minimum-power beamformer meeting each `gamma_bars[k]` (linear SINR).
///
/// Returns a full transmit matrix whose first `K` columns carry the users
/// and whose remaining columns are zero. Errors if the targets cannot be
/// met jointly or if meeting them needs more than `power_budget`.
pub fn comm_only_beamforming(
    channels: &ChannelSet,
    gamma_bars: &[f64],
    noise_power: f64,
    power_budget: f64,
) -> Result<BeamformerSet, BenchmarkError> {
    let k_users = channels.n_users();
    if k_users == 0 {
        return Err(BenchmarkError::NoUsers);
    }
    if gamma_bars.len() != k_users {
        return Err(BenchmarkError::ThresholdCount {
            got: gamma_bars.len(),
            users: k_users,
        });
    }
    for &g in gamma_bars {
        if !(g > 0.0) {
            return Err(BenchmarkError::NonPositiveThreshold(g));
        }
    }
    if !(noise_power > 0.0) {
        return Err(BenchmarkError::NonPositiveNoise(noise_power));
    }
    let m_t = channels.h[0].len();
    // The constraints are jointly homogeneous in the beamformer and the
    // noise amplitude, so solving with noise scaled by the decoupled
    // matched-filter power estimate keeps the optimum near one regardless
    // of the physical noise floor; the solution scales back exactly.
    let mut unit_sq = 0.0;
    for (k, h) in channels.h.iter().enumerate() {
        if h.len() != m_t {
            return Err(BenchmarkError::ChannelDimension {
                k,
                got: h.len(),
                want: m_t,
            });
        }
        let norm_sq = h.norm_squared();
        if !(norm_sq > 0.0) {
            return Err(BenchmarkError::ZeroChannel(k));
        }
        unit_sq += noise_power * gamma_bars[k] / norm_sq;
    }
    let unit = unit_sq.sqrt();

    // Serving user k alone needs at least noise * gamma_k / ||h_k||^2 watts
    // (matched filtering, interference only raises the cost), so `unit_sq`
    // bounds the total power from below. Hopeless targets are rejected here:
    // past gamma ~ 1e16 the cone radius sqrt(1 + 1/gamma) rounds to exactly
    // 1 and the degenerate cone would let tolerances hide the violation.
    if unit_sq > power_budget * (1.0 + 1e-9) {
        return Err(BenchmarkError::PowerBudgetExceeded {
            required: unit_sq,
            budget: power_budget,
        });
    }

    let mut layout = VariableLayout::new();
    for k in 0..k_users {
        layout.add_complex(&column_name(k), m_t)?;
    }
    layout.add_real("power", 1)?;
    let n = layout.n_reals();
    let power_index = layout.real_index("power", 0)?;
    let mut objective = DVector::zeros(n);
    objective[power_index] = -1.0;

    let mut blocks = sinr_soc_blocks(&layout, channels, gamma_bars, noise_power / unit_sq)?;
    let mut power_rows = vec![SparseRow::unit(power_index)];
    for k in 0..k_users {
        power_rows.extend(layout.component_rows(&column_name(k))?);
    }
    let dim = power_rows.len();
    blocks.push(ConstraintBlock::new(
        "power",
        ConeKind::SecondOrder,
        power_rows,
        vec![0.0; dim],
    ));

    let program = assemble(n, objective, blocks)?;
    let report = solve(&program, &SolverOptions::default())?;
    if report.status != SolveStatus::Optimal {
        return Err(BenchmarkError::Unachievable(report.status));
    }

    let columns: Vec<DVector<_>> = (0..k_users)
        .map(|k| {
            layout
                .unpack_complex(&report.x, &column_name(k))
                .map(|w| w.map(|z| z * unit))
        })
        .collect::<Result<_, _>>()?;
    let required: f64 = columns.iter().map(|c| c.norm_squared()).sum();
    if required > power_budget * (1.0 + 1e-9) {
        return Err(BenchmarkError::PowerBudgetExceeded {
            required,
            budget: power_budget,
        });
    }
    // An interior-point run can stop at a point that cheats a badly scaled
    // cone while still reporting optimal; re-deriving each SINR from the
    // unpacked columns makes any silent shortfall loud.
    for (k, h) in channels.h.iter().enumerate() {
        let mut signal = 0.0;
        let mut interference = 0.0;
        for (j, w) in columns.iter().enumerate() {
            let gain = h.dotc(w).norm_sqr();
            if j == k {
                signal = gain;
            } else {
                interference += gain;
            }
        }
        let achieved = signal / (interference + noise_power);
        if achieved < gamma_bars[k] * (1.0 - SINR_VERIFY_TOLERANCE) {
            return Err(BenchmarkError::SinrShortfall {
                user: k,
                achieved,
                required: gamma_bars[k],
            });
        }
    }
    Ok(BeamformerSet::from_columns(
        &columns,
        k_users,
        m_t,
        power_budget,
    )?)
}
