//! Exact transmit design for the special case of one communication user and
//! one sensing point.
//!
//! With a single user there is no inter-user interference, so the full budget
//! can ride on one column. When the user constraint is loose the best beam
//! points straight at the sensing location; once the constraint tightens, the
//! optimum splits the amplitude between the unit channel direction and the
//! component of the steering vector orthogonal to it, with a phase chosen so
//! the two contributions add coherently at the sensing point. Dedicated
//! radar columns never help here: folding their covariance into the single
//! communication column preserves the objective, the trace, and the user
//! constraint.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use thiserror::Error;

/// Relative margin accepted past the absolute feasibility limit.
const FEASIBILITY_SLACK: f64 = 1e-12;

/// Below this fraction of the steering norm, the orthogonal residual of the
/// steering vector is treated as zero and the full-power steered beam is
/// returned instead of normalizing a vanishing direction.
const NEAR_PARALLEL: f64 = 1e-10;

/// Smallest eigenvalue tolerated when validating a covariance matrix.
const PSD_TOLERANCE: f64 = -1e-10;

#[derive(Debug, Error)]
pub enum ClosedFormError {
    #[error("channel has length {0} but steering vector has length {1}")]
    DimensionMismatch(usize, usize),
    #[error("{0} vector is empty or zero")]
    ZeroVector(&'static str),
    #[error("transmit power and noise power must be positive")]
    NonPositivePower,
    #[error("SINR threshold must be nonnegative, got {0}")]
    NegativeThreshold(f64),
    #[error("SINR threshold {required:.6e} exceeds the feasibility limit {limit:.6e}")]
    InfeasibleThreshold { required: f64, limit: f64 },
    #[error("covariance matrices have shapes {0}x{0} and {1}x{1}")]
    CovarianceShape(usize, usize),
    #[error("covariance matrix deviates from Hermitian symmetry by {0:.3e}")]
    NotHermitian(f64),
    #[error("covariance matrix has negative eigenvalue {0:.3e}")]
    NotPositiveSemidefinite(f64),
}

/// Which constraint pins down the optimal beam.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Regime {
    /// The user constraint is slack; all power is steered at the sensing
    /// point.
    SensingLimited,
    /// The user constraint binds; the beam blends the channel direction with
    /// the orthogonal steering residual.
    CommLimited,
}

/// Optimal single-column transmit beam for one user and one sensing point.
#[derive(Clone, Debug)]
pub struct SinglePointSolution {
    /// The precoding column for the lone user.
    pub w1: DVector<Complex64>,
    /// Which branch produced the beam.
    pub regime: Regime,
    /// Threshold separating the two regimes, in linear SINR units.
    pub boundary_threshold: f64,
}

impl SinglePointSolution {
    /// Transmit power consumed by the beam.
    pub fn total_power(&self) -> f64 {
        self.w1.norm_squared()
    }

    /// Received signal power at the user, `|h1^H w1|^2`.
    pub fn user_signal_power(&self, h1: &DVector<Complex64>) -> f64 {
        h1.dotc(&self.w1).norm_sqr()
    }

    /// Power collected along a steering direction, `|b^H w1|^2`.
    pub fn gain_toward(&self, b: &DVector<Complex64>) -> f64 {
        b.dotc(&self.w1).norm_sqr()
    }
}

/// Computes the optimal beam for one user with channel `h1`, one sensing
/// point with transmit steering vector `b0`, a power budget `p_t`, receiver
/// noise power `noise_power`, and SINR threshold `gamma_bar` (linear).
///
/// The threshold is feasible iff `gamma_bar <= |h1|^2 p_t / noise_power`;
/// beyond that no beam can satisfy the user.
pub fn optimal_single(
    h1: &DVector<Complex64>,
    b0: &DVector<Complex64>,
    p_t: f64,
    noise_power: f64,
    gamma_bar: f64,
) -> Result<SinglePointSolution, ClosedFormError> {
    if h1.len() != b0.len() {
        return Err(ClosedFormError::DimensionMismatch(h1.len(), b0.len()));
    }
    if !(p_t > 0.0) || !(noise_power > 0.0) {
        return Err(ClosedFormError::NonPositivePower);
    }
    if !(gamma_bar >= 0.0) {
        return Err(ClosedFormError::NegativeThreshold(gamma_bar));
    }
    let h_norm = h1.norm();
    let b_norm = b0.norm();
    if h_norm <= 0.0 || !h_norm.is_finite() {
        return Err(ClosedFormError::ZeroVector("channel"));
    }
    if b_norm <= 0.0 || !b_norm.is_finite() {
        return Err(ClosedFormError::ZeroVector("steering"));
    }

    let limit = h_norm * h_norm * p_t / noise_power;
    if gamma_bar > limit * (1.0 + FEASIBILITY_SLACK) {
        return Err(ClosedFormError::InfeasibleThreshold {
            required: gamma_bar,
            limit,
        });
    }

    let b_unit = b0.unscale(b_norm);
    let h_unit = h1.unscale(h_norm);
    let boundary_threshold = h1.dotc(&b_unit).norm_sqr() * p_t / noise_power;

    if gamma_bar <= boundary_threshold {
        return Ok(SinglePointSolution {
            w1: b_unit.map(|z| z * p_t.sqrt()),
            regime: Regime::SensingLimited,
            boundary_threshold,
        });
    }

    // h_unit^H b0; its phase aligns the channel-direction term with the
    // steering residual so the two add coherently at the sensing point.
    let beta = h_unit.dotc(b0);
    let b_perp = b0 - h_unit.map(|z| z * beta);
    let perp_norm = b_perp.norm();
    if perp_norm < NEAR_PARALLEL * b_norm {
        // Channel and steering are (numerically) collinear, so the two branch
        // thresholds coincide and the full-power steered beam stays optimal.
        return Ok(SinglePointSolution {
            w1: b_unit.map(|z| z * p_t.sqrt()),
            regime: Regime::SensingLimited,
            boundary_threshold,
        });
    }

    let phase = if beta.norm() > 0.0 {
        beta.unscale(beta.norm())
    } else {
        Complex64::new(1.0, 0.0)
    };
    let comm_power = noise_power * gamma_bar / (h_norm * h_norm);
    let comm_amp = comm_power.sqrt();
    let sense_amp = (p_t - comm_power).max(0.0).sqrt();
    let w1 = h_unit.map(|z| z * (phase * comm_amp))
        + b_perp.unscale(perp_norm).map(|z| z * sense_amp);

    Ok(SinglePointSolution {
        w1,
        regime: Regime::CommLimited,
        boundary_threshold,
    })
}

/// Folds a dedicated-sensing covariance into the user covariance.
///
/// If `(r1, rp)` is feasible then `(r1 + rp, 0)` is too: the objective and
/// the trace are unchanged, and the user's received power can only grow
/// because `rp` is positive semidefinite. Returns the merged covariance and
/// a zero matrix of the same shape.
pub fn lemma1_collapse(
    r1_hat: &DMatrix<Complex64>,
    rp_hat: &DMatrix<Complex64>,
) -> Result<(DMatrix<Complex64>, DMatrix<Complex64>), ClosedFormError> {
    if !r1_hat.is_square() || !rp_hat.is_square() || r1_hat.nrows() != rp_hat.nrows() {
        return Err(ClosedFormError::CovarianceShape(
            r1_hat.nrows(),
            rp_hat.nrows(),
        ));
    }
    validate_psd(r1_hat)?;
    validate_psd(rp_hat)?;
    let merged = r1_hat + rp_hat;
    let zero = DMatrix::zeros(r1_hat.nrows(), r1_hat.ncols());
    Ok((merged, zero))
}

fn validate_psd(m: &DMatrix<Complex64>) -> Result<(), ClosedFormError> {
    let asymmetry = (m - m.adjoint()).norm();
    if asymmetry > 1e-9 * m.norm().max(1.0) {
        return Err(ClosedFormError::NotHermitian(asymmetry));
    }
    let eigenvalues = m.clone().symmetric_eigenvalues();
    let min = eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    if min < PSD_TOLERANCE {
        return Err(ClosedFormError::NotPositiveSemidefinite(min));
    }
    Ok(())
}
