//! Link-quality metrics: user SINR, sensing SNR, coverage weights,
//! beampattern gain, and grid-wide SNR maps.
//!
//! The central quantity is the bi-static sensing SNR after matched
//! filtering over one coherent processing interval,
//!
//! ```text
//! snr(q) = cpi_gain * beta_t(q) * beta_r(q) * |alpha|^2 * ||a(q)||^2
//!          * ||W^H b(q)||^2 / noise_power
//! ```
//!
//! where `b` and `a` are the transmit and receive steering vectors toward
//! the point `q` and `beta_t`, `beta_r` the two path gains. Grouping the
//! `W`-independent point factors gives the coverage weight
//! `eta(q) = d_t^2 * d_r^2 / ||a(q)||^2`, so designs can compare points by
//! `||W^H b(q)||^2 / eta(q)` alone.

use crate::channels::ChannelSet;
use crate::geometry::{angles_from_positions, upa_steering, CoverageGrid, Position};
use crate::scenario::Scenario;
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;
use thiserror::Error;

/// Relative slack allowed on the power budget at construction; covers
/// accumulated rounding in designs that sit exactly on the budget.
pub const POWER_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error("beamformer matrix must be square, got {rows}x{cols}")]
    NonSquareBeamformer { rows: usize, cols: usize },
    #[error("{k_comm} communication columns exceed {columns} total columns")]
    TooManyCommColumns { k_comm: usize, columns: usize },
    #[error("total power {power} exceeds budget {budget}")]
    PowerBudgetExceeded { power: f64, budget: f64 },
    #[error("power budget must be positive, got {0}")]
    NonPositiveBudget(f64),
    #[error("noise power must be positive, got {0}")]
    NonPositiveNoise(f64),
    #[error("user index {k} is not a communication column (count {k_comm})")]
    UserOutOfRange { k: usize, k_comm: usize },
    #[error("channel vector length {got} does not match {want} antennas")]
    ChannelDimension { got: usize, want: usize },
    #[error("grid has no points")]
    EmptyGrid,
    #[error("grid weights not filled; call eta_weights first")]
    MissingWeights,
    #[error("sensing point coincides with a base station")]
    PointOnBaseStation,
}

/// A transmit design: square matrix whose first `k_comm` columns carry user
/// streams and whose remaining columns carry radar streams.
///
/// Construction enforces the power budget `||W||_F^2 <= p_t` up to
/// [`POWER_TOLERANCE`] relative slack.
#[derive(Debug, Clone)]
pub struct BeamformerSet {
    matrix: DMatrix<Complex64>,
    k_comm: usize,
    power_budget: f64,
}

impl BeamformerSet {
    pub fn new(
        matrix: DMatrix<Complex64>,
        k_comm: usize,
        power_budget: f64,
    ) -> Result<Self, MetricsError> {
        if matrix.nrows() != matrix.ncols() {
            return Err(MetricsError::NonSquareBeamformer {
                rows: matrix.nrows(),
                cols: matrix.ncols(),
            });
        }
        if k_comm > matrix.ncols() {
            return Err(MetricsError::TooManyCommColumns {
                k_comm,
                columns: matrix.ncols(),
            });
        }
        if !(power_budget > 0.0) {
            return Err(MetricsError::NonPositiveBudget(power_budget));
        }
        let power = matrix.norm_squared();
        if power > power_budget * (1.0 + POWER_TOLERANCE) {
            return Err(MetricsError::PowerBudgetExceeded {
                power,
                budget: power_budget,
            });
        }
        Ok(Self {
            matrix,
            k_comm,
            power_budget,
        })
    }

    /// Build from explicit columns, padding the rest with zeros.
    pub fn from_columns(
        columns: &[DVector<Complex64>],
        k_comm: usize,
        m_t: usize,
        power_budget: f64,
    ) -> Result<Self, MetricsError> {
        let mut w = DMatrix::zeros(m_t, m_t);
        for (j, col) in columns.iter().enumerate() {
            if col.len() != m_t {
                return Err(MetricsError::ChannelDimension {
                    got: col.len(),
                    want: m_t,
                });
            }
            w.set_column(j, col);
        }
        Self::new(w, k_comm, power_budget)
    }

    /// Equal power on every stream with no spatial preference:
    /// `sqrt(p_t / m_t) * I`.
    pub fn isotropic(m_t: usize, k_comm: usize, power_budget: f64) -> Result<Self, MetricsError> {
        let scale = (power_budget / m_t as f64).sqrt();
        let w = DMatrix::from_diagonal_element(m_t, m_t, Complex64::new(scale, 0.0));
        Self::new(w, k_comm, power_budget)
    }

    /// All power on a single radar stream steered along `b`.
    pub fn single_beam(b: &DVector<Complex64>, power_budget: f64) -> Result<Self, MetricsError> {
        let col = b * Complex64::new((power_budget).sqrt() / b.norm(), 0.0);
        Self::from_columns(std::slice::from_ref(&col), 0, b.len(), power_budget)
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    pub fn column(&self, j: usize) -> DVector<Complex64> {
        self.matrix.column(j).into_owned()
    }

    pub fn k_comm(&self) -> usize {
        self.k_comm
    }

    pub fn n_antennas(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn power_budget(&self) -> f64 {
        self.power_budget
    }

    /// Total transmit power `||W||_F^2`.
    pub fn total_power(&self) -> f64 {
        self.matrix.norm_squared()
    }
}

/// SINR of user `k` with channel `h_k`: desired-column power over the other
/// communication columns' power plus noise. Radar columns do not interfere;
/// the users cancel them after decoding.
pub fn comm_sinr(
    w: &BeamformerSet,
    h_k: &DVector<Complex64>,
    k: usize,
    noise_power: f64,
) -> Result<f64, MetricsError> {
    if !(noise_power > 0.0) {
        return Err(MetricsError::NonPositiveNoise(noise_power));
    }
    if k >= w.k_comm {
        return Err(MetricsError::UserOutOfRange {
            k,
            k_comm: w.k_comm,
        });
    }
    if h_k.len() != w.n_antennas() {
        return Err(MetricsError::ChannelDimension {
            got: h_k.len(),
            want: w.n_antennas(),
        });
    }
    let products = w.matrix.ad_mul(h_k);
    let signal = products[k].norm_sqr();
    let interference: f64 = (0..w.k_comm)
        .filter(|&i| i != k)
        .map(|i| products[i].norm_sqr())
        .sum();
    Ok(signal / (interference + noise_power))
}

/// SINRs of every served user.
pub fn all_comm_sinrs(
    w: &BeamformerSet,
    channels: &ChannelSet,
    noise_power: f64,
) -> Result<Vec<f64>, MetricsError> {
    channels
        .h
        .iter()
        .enumerate()
        .map(|(k, h)| comm_sinr(w, h, k, noise_power))
        .collect()
}

fn snr_from_parts(
    scenario: &Scenario,
    w: &BeamformerSet,
    tx_steer: &DVector<Complex64>,
    rx_norm_sqr: f64,
    dist_sqr_tx: f64,
    dist_sqr_rx: f64,
) -> f64 {
    let tx_gain = w.matrix.ad_mul(tx_steer).norm_squared();
    let alpha_sqr = scenario.alpha.norm_sqr();
    scenario.cpi_gain() * scenario.beta0 * scenario.beta0 * alpha_sqr * rx_norm_sqr * tx_gain
        / (dist_sqr_tx * dist_sqr_rx * scenario.noise_power)
}

/// Sensing SNR at a single point `q`.
pub fn sensing_snr(
    scenario: &Scenario,
    w: &BeamformerSet,
    q: &Position,
) -> Result<f64, MetricsError> {
    if !(scenario.noise_power > 0.0) {
        return Err(MetricsError::NonPositiveNoise(scenario.noise_power));
    }
    let at = angles_from_positions(&scenario.bs_tx, q)
        .map_err(|_| MetricsError::PointOnBaseStation)?;
    let ar = angles_from_positions(&scenario.bs_rx, q)
        .map_err(|_| MetricsError::PointOnBaseStation)?;
    let b = upa_steering(at, &scenario.tx_array);
    let a = upa_steering(ar, &scenario.rx_array);
    Ok(snr_from_parts(
        scenario,
        w,
        &b,
        a.norm_squared(),
        (q - scenario.bs_tx).norm_squared(),
        (q - scenario.bs_rx).norm_squared(),
    ))
}

/// Sensing SNR at every grid point plus the location of the minimum.
#[derive(Debug, Clone)]
pub struct SnrMap {
    pub values: Vec<f64>,
    pub worst_index: usize,
    pub worst_value: f64,
}

impl SnrMap {
    /// Spread between the best and worst point, decibels.
    pub fn spread_db(&self) -> f64 {
        let best = self.values.iter().cloned().fold(f64::MIN, f64::max);
        crate::scenario::to_db(best) - crate::scenario::to_db(self.worst_value)
    }
}

/// Evaluate the sensing SNR over a coverage grid. Points are independent,
/// so evaluation parallelizes; the result is identical for any thread
/// count, and the worst index is the first minimum in grid order.
pub fn snr_map(
    scenario: &Scenario,
    w: &BeamformerSet,
    grid: &CoverageGrid,
) -> Result<SnrMap, MetricsError> {
    if grid.is_empty() {
        return Err(MetricsError::EmptyGrid);
    }
    if !(scenario.noise_power > 0.0) {
        return Err(MetricsError::NonPositiveNoise(scenario.noise_power));
    }
    let values: Vec<f64> = (0..grid.len())
        .into_par_iter()
        .map(|l| {
            snr_from_parts(
                scenario,
                w,
                &grid.tx_steering[l],
                grid.rx_steering[l].norm_squared(),
                (grid.points[l] - scenario.bs_tx).norm_squared(),
                (grid.points[l] - scenario.bs_rx).norm_squared(),
            )
        })
        .collect();
    let (worst_index, &worst_value) = values
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.partial_cmp(b.1).expect("snr values are finite"))
        .expect("non-empty grid");
    Ok(SnrMap {
        values,
        worst_index,
        worst_value,
    })
}

/// Fill the per-point coverage weights
/// `eta_l = d_t^2 * d_r^2 / ||a_l||^2` into the grid.
///
/// The worst-case sensing SNR over the grid is
/// `cpi_gain * beta0^2 * |alpha|^2 / noise_power * min_l ||W^H b_l||^2 / eta_l`,
/// so `eta` is everything the design problem needs to remember about a point.
pub fn eta_weights(grid: &mut CoverageGrid, scenario: &Scenario) -> Result<(), MetricsError> {
    if grid.is_empty() {
        return Err(MetricsError::EmptyGrid);
    }
    grid.eta = (0..grid.len())
        .map(|l| {
            let dt = (grid.points[l] - scenario.bs_tx).norm_squared();
            let dr = (grid.points[l] - scenario.bs_rx).norm_squared();
            dt * dr / grid.rx_steering[l].norm_squared()
        })
        .collect();
    Ok(())
}

/// Scale factor between the reduced per-point objective
/// `||W^H b_l||^2 / eta_l` and the physical sensing SNR.
pub fn snr_scale(scenario: &Scenario) -> f64 {
    scenario.cpi_gain() * scenario.beta0 * scenario.beta0 * scenario.alpha.norm_sqr()
        / scenario.noise_power
}

/// Transmit beampattern gain toward steering vector `b`:
/// `||W^H b||^2 / trace(W W^H)`. An isotropic design gives 1 everywhere.
pub fn beampattern_gain(w: &BeamformerSet, b: &DVector<Complex64>) -> f64 {
    w.matrix.ad_mul(b).norm_squared() / w.total_power()
}

/// Grid indices whose half-cell neighborhood is crossed by each requested
/// iso-SNR level under isotropic transmission.
///
/// Under isotropic transmission the SNR depends on position only through
/// the product of the two ranges, so each returned set traces a constant
/// range-product locus (a Cassini oval cut by the grid plane). A point
/// belongs to a level exactly when the level's range product falls inside
/// the span of products reachable within half a cell diagonal of the point
/// (sampled over that disk in the grid plane), so the locus passes within
/// half a cell of every member. A plain value tolerance cannot express
/// this: near the equidistant midpoint the product is stationary, where a
/// gradient bound either over-admits far-away levels or rejects loci that
/// genuinely cut the cell.
pub fn cassini_contours(
    scenario: &Scenario,
    grid: &CoverageGrid,
    levels: &[f64],
) -> Result<Vec<Vec<usize>>, MetricsError> {
    let m_t = scenario.tx_array.len();
    let iso = BeamformerSet::isotropic(m_t, 0, scenario.p_t)?;
    let map = snr_map(scenario, &iso, grid)?;
    let half_diag = grid.max_spacing() * std::f64::consts::SQRT_2 / 2.0;
    const RINGS: usize = 4;
    const SPOKES: usize = 32;
    let product = |q: &Position| (q - scenario.bs_tx).norm() * (q - scenario.bs_rx).norm();
    let spans: Vec<(f64, f64)> = grid
        .points
        .iter()
        .map(|q| {
            let center = product(q);
            let mut lo = center;
            let mut hi = center;
            for ring in 1..=RINGS {
                let r = half_diag * ring as f64 / RINGS as f64;
                for spoke in 0..SPOKES {
                    let angle = std::f64::consts::TAU * spoke as f64 / SPOKES as f64;
                    let p = product(&(q + Position::new(r * angle.cos(), r * angle.sin(), 0.0)));
                    lo = lo.min(p);
                    hi = hi.max(p);
                }
            }
            (lo, hi)
        })
        .collect();
    let sets = levels
        .iter()
        .map(|&level| {
            (0..grid.len())
                .filter(|&l| {
                    // snr = K / product^2, so the level's locus has product
                    // `center * sqrt(snr_center / level)`.
                    let target = product(&grid.points[l]) * (map.values[l] / level).sqrt();
                    spans[l].0 <= target && target <= spans[l].1
                })
                .collect()
        })
        .collect();
    Ok(sets)
}
