//! Exhaustive ground truth for tiny instances of the coverage design.
//!
//! With two transmit antennas, a transmit covariance `R = W Wᴴ` has four
//! free real parameters: two nonnegative diagonal entries and one complex
//! off-diagonal entry. Maximizing the worst-case steered power
//! `min_l bₗᴴ R bₗ / ηₗ` subject to the user-power and trace constraints is
//! then small enough for dense grid enumeration, which returns an incumbent
//! guaranteed within one objective cell of the global optimum. Because every
//! positive semidefinite matrix of size `m` factors as `W Wᴴ` with `W` of
//! size `m × m`, the covariance search is exact for the original problem and
//! upper-bounds any transmit matrix the iterative design produces.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;
use thiserror::Error;

/// Relative slack when admitting grid points against the constraints, so
/// boundary optima are not lost to rounding in the coefficient arithmetic.
const ADMISSION_SLACK: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("the exhaustive search supports exactly two antennas, got {0}")]
    UnsupportedDimension(usize),
    #[error("trace budget must be positive, got {0}")]
    NonPositiveBudget(f64),
    #[error("grid step must be positive and at most the trace budget, got {0}")]
    BadStep(f64),
    #[error("no steering vectors supplied")]
    EmptyGrid,
    #[error("steering vector {index} has {got} entries, expected {want}")]
    SteeringDimension {
        index: usize,
        got: usize,
        want: usize,
    },
    #[error("{got} coverage weights for {want} steering vectors")]
    WeightCount { got: usize, want: usize },
    #[error("coverage weight {index} must be positive, got {value}")]
    BadWeight { index: usize, value: f64 },
    #[error("channel has {got} entries, expected {want}")]
    ChannelDimension { got: usize, want: usize },
    #[error("SINR threshold must be nonnegative, got {0}")]
    NegativeThreshold(f64),
    #[error("noise power must be positive, got {0}")]
    NonPositiveNoise(f64),
    #[error("no enumerated covariance satisfies the user-power constraint")]
    Infeasible,
}

/// Enumeration parameters for the covariance search.
#[derive(Clone, Debug)]
pub struct CovarianceGridSpec {
    /// Number of transmit antennas; only 2 is tractable (four real
    /// parameters). Three antennas already need nine, and a dense grid over
    /// nine dimensions is out of reach at any useful resolution.
    pub dimension: usize,
    /// Upper bound on the covariance trace, the transmit power budget.
    pub trace_budget: f64,
    /// Grid step shared by all four real parameters.
    pub step: f64,
}

impl CovarianceGridSpec {
    /// Two-antenna search with the default resolution of one hundred steps
    /// across the power budget, about 2% objective granularity.
    pub fn two_antenna(trace_budget: f64) -> Self {
        Self {
            dimension: 2,
            trace_budget,
            step: trace_budget / 100.0,
        }
    }

    fn validate(&self) -> Result<(), OracleError> {
        if self.dimension != 2 {
            return Err(OracleError::UnsupportedDimension(self.dimension));
        }
        if !(self.trace_budget > 0.0) {
            return Err(OracleError::NonPositiveBudget(self.trace_budget));
        }
        if !(self.step > 0.0) || self.step > self.trace_budget {
            return Err(OracleError::BadStep(self.step));
        }
        Ok(())
    }

    /// Number of steps that fit in the trace budget.
    fn steps(&self) -> i64 {
        ((self.trace_budget * (1.0 + ADMISSION_SLACK)) / self.step).floor() as i64
    }
}

/// Winner of a search: the covariance, its worst-case objective, and how
/// many enumerated matrices passed the constraints.
#[derive(Clone, Debug)]
pub struct OracleReport {
    pub covariance: DMatrix<Complex64>,
    pub objective: f64,
    pub feasible_points: u64,
}

/// The linear functionals the search evaluates: for a 2x2 Hermitian matrix
/// with diagonal `(a, c)` and off-diagonal `b = rb + i·ib`, a quadratic form
/// `vᴴ R v` equals `a·p + c·q + 2(rb·re_t − ib·im_t)` with `p = |v₀|²`,
/// `q = |v₁|²`, and `t = conj(v₀)·v₁`.
#[derive(Clone, Copy)]
struct FormCoefficients {
    p: f64,
    q: f64,
    re_t: f64,
    im_t: f64,
}

impl FormCoefficients {
    fn of(v: &DVector<Complex64>) -> Self {
        let t = v[0].conj() * v[1];
        Self {
            p: v[0].norm_sqr(),
            q: v[1].norm_sqr(),
            re_t: t.re,
            im_t: t.im,
        }
    }

    fn evaluate(&self, a: f64, c: f64, rb: f64, ib: f64) -> f64 {
        a * self.p + c * self.q + 2.0 * (rb * self.re_t - ib * self.im_t)
    }
}

struct SearchInputs {
    user: FormCoefficients,
    /// Objective coefficients with the coverage weight divided in.
    points: Vec<FormCoefficients>,
    required_user_power: f64,
}

fn prepare(
    spec: &CovarianceGridSpec,
    channel: &DVector<Complex64>,
    steering: &[DVector<Complex64>],
    eta: &[f64],
    gamma_bar: f64,
    noise_power: f64,
) -> Result<SearchInputs, OracleError> {
    spec.validate()?;
    if steering.is_empty() {
        return Err(OracleError::EmptyGrid);
    }
    if eta.len() != steering.len() {
        return Err(OracleError::WeightCount {
            got: eta.len(),
            want: steering.len(),
        });
    }
    if channel.len() != spec.dimension {
        return Err(OracleError::ChannelDimension {
            got: channel.len(),
            want: spec.dimension,
        });
    }
    if gamma_bar < 0.0 {
        return Err(OracleError::NegativeThreshold(gamma_bar));
    }
    if !(noise_power > 0.0) {
        return Err(OracleError::NonPositiveNoise(noise_power));
    }
    let mut points = Vec::with_capacity(steering.len());
    for (index, (b, weight)) in steering.iter().zip(eta).enumerate() {
        if b.len() != spec.dimension {
            return Err(OracleError::SteeringDimension {
                index,
                got: b.len(),
                want: spec.dimension,
            });
        }
        if !(*weight > 0.0) {
            return Err(OracleError::BadWeight {
                index,
                value: *weight,
            });
        }
        let mut coeffs = FormCoefficients::of(b);
        coeffs.p /= weight;
        coeffs.q /= weight;
        coeffs.re_t /= weight;
        coeffs.im_t /= weight;
        points.push(coeffs);
    }
    Ok(SearchInputs {
        user: FormCoefficients::of(channel),
        points,
        required_user_power: noise_power * gamma_bar,
    })
}

/// A candidate in grid coordinates together with its enumeration index, the
/// deterministic tie-breaker for the parallel reduction.
#[derive(Clone, Copy)]
struct Incumbent {
    objective: f64,
    index: u64,
    a: f64,
    c: f64,
    rb: f64,
    ib: f64,
}

fn better(lhs: &Option<Incumbent>, rhs: &Option<Incumbent>) -> bool {
    match (lhs, rhs) {
        (Some(l), Some(r)) => {
            l.objective > r.objective || (l.objective == r.objective && l.index < r.index)
        }
        (Some(_), None) => true,
        _ => false,
    }
}

/// Maximizes `min_l bₗᴴ R bₗ / ηₗ` over step-quantized positive semidefinite
/// covariances with `hᴴ R h ≥ σ²γ̄` and `trace(R) ≤ P_t`. Ties go to the
/// lowest enumeration index, so the result does not depend on thread count.
pub fn covariance_grid_search(
    spec: &CovarianceGridSpec,
    channel: &DVector<Complex64>,
    steering: &[DVector<Complex64>],
    eta: &[f64],
    gamma_bar: f64,
    noise_power: f64,
) -> Result<OracleReport, OracleError> {
    let inputs = prepare(spec, channel, steering, eta, gamma_bar, noise_power)?;
    let step = spec.step;
    let n = spec.steps();
    let admit = inputs.required_user_power * (1.0 - ADMISSION_SLACK);
    let trace_cap = spec.trace_budget * (1.0 + ADMISSION_SLACK);
    // Enumeration indices place the off-diagonal components on [-n, n] even
    // though PSD restricts them to half that; the padding only affects the
    // tie-break arithmetic, not the work done.
    let off_span = (2 * n + 1) as u64;

    let per_diagonal = |ia: i64| -> (Option<Incumbent>, u64) {
        let a = ia as f64 * step;
        let mut best: Option<Incumbent> = None;
        let mut feasible = 0u64;
        for ic in 0..=(n - ia) {
            let c = ic as f64 * step;
            if a + c > trace_cap {
                break;
            }
            let ac = a * c;
            let rb_span = ac.sqrt();
            let irb_max = (rb_span / step).floor() as i64;
            for irb in -irb_max..=irb_max {
                let rb = irb as f64 * step;
                let remainder = ac - rb * rb;
                if remainder < 0.0 {
                    continue;
                }
                let iib_max = (remainder.sqrt() / step).floor() as i64;
                for iib in -iib_max..=iib_max {
                    let ib = iib as f64 * step;
                    if inputs.user.evaluate(a, c, rb, ib) < admit {
                        continue;
                    }
                    feasible += 1;
                    let mut objective = f64::INFINITY;
                    for coeffs in &inputs.points {
                        objective = objective.min(coeffs.evaluate(a, c, rb, ib));
                    }
                    let index = (((ia as u64 * (n as u64 + 1) + ic as u64) * off_span
                        + (irb + n) as u64)
                        * off_span)
                        + (iib + n) as u64;
                    let candidate = Some(Incumbent {
                        objective,
                        index,
                        a,
                        c,
                        rb,
                        ib,
                    });
                    if better(&candidate, &best) {
                        best = candidate;
                    }
                }
            }
        }
        (best, feasible)
    };

    let (best, feasible_points) = (0..=n)
        .into_par_iter()
        .map(per_diagonal)
        .reduce(
            || (None, 0),
            |(lb, lf), (rb, rf)| (if better(&lb, &rb) { lb } else { rb }, lf + rf),
        );

    let winner = best.ok_or(OracleError::Infeasible)?;
    let covariance = DMatrix::from_row_slice(
        2,
        2,
        &[
            Complex64::new(winner.a, 0.0),
            Complex64::new(winner.rb, winner.ib),
            Complex64::new(winner.rb, -winner.ib),
            Complex64::new(winner.c, 0.0),
        ],
    );
    Ok(OracleReport {
        covariance,
        objective: winner.objective,
        feasible_points,
    })
}

/// Same search with the covariance split into a user part, which alone must
/// carry the required user power, and a free dedicated part; the objective
/// and the trace budget act on their sum. Collapsing the dedicated part into
/// the user part changes nothing, so this must agree with
/// [`covariance_grid_search`] at equal resolution; the split search exists
/// to demonstrate that numerically.
pub fn covariance_pair_search(
    spec: &CovarianceGridSpec,
    channel: &DVector<Complex64>,
    steering: &[DVector<Complex64>],
    eta: &[f64],
    gamma_bar: f64,
    noise_power: f64,
) -> Result<OracleReport, OracleError> {
    let inputs = prepare(spec, channel, steering, eta, gamma_bar, noise_power)?;
    let step = spec.step;
    let n = spec.steps();
    let admit = inputs.required_user_power * (1.0 - ADMISSION_SLACK);
    let trace_cap = spec.trace_budget * (1.0 + ADMISSION_SLACK);

    // All step-quantized PSD matrices with trace at most the budget, each as
    // (a, c, rb, ib) with its enumeration index.
    let mut matrices: Vec<(f64, f64, f64, f64, u64)> = Vec::new();
    let off_span = (2 * n + 1) as u64;
    for ia in 0..=n {
        let a = ia as f64 * step;
        for ic in 0..=(n - ia) {
            let c = ic as f64 * step;
            if a + c > trace_cap {
                break;
            }
            let ac = a * c;
            let irb_max = (ac.sqrt() / step).floor() as i64;
            for irb in -irb_max..=irb_max {
                let rb = irb as f64 * step;
                let remainder = ac - rb * rb;
                if remainder < 0.0 {
                    continue;
                }
                let iib_max = (remainder.sqrt() / step).floor() as i64;
                for iib in -iib_max..=iib_max {
                    let ib = iib as f64 * step;
                    let index = (((ia as u64 * (n as u64 + 1) + ic as u64) * off_span
                        + (irb + n) as u64)
                        * off_span)
                        + (iib + n) as u64;
                    matrices.push((a, c, rb, ib, index));
                }
            }
        }
    }

    let user_feasible: Vec<usize> = matrices
        .iter()
        .enumerate()
        .filter(|(_, m)| inputs.user.evaluate(m.0, m.1, m.2, m.3) >= admit)
        .map(|(i, _)| i)
        .collect();

    let (best, feasible_points) = user_feasible
        .par_iter()
        .map(|&i| {
            let user_part = matrices[i];
            let budget_left = trace_cap - user_part.0 - user_part.1;
            let mut best: Option<Incumbent> = None;
            let mut feasible = 0u64;
            for dedicated in &matrices {
                if dedicated.0 + dedicated.1 > budget_left {
                    continue;
                }
                let a = user_part.0 + dedicated.0;
                let c = user_part.1 + dedicated.1;
                let rb = user_part.2 + dedicated.2;
                let ib = user_part.3 + dedicated.3;
                feasible += 1;
                let mut objective = f64::INFINITY;
                for coeffs in &inputs.points {
                    objective = objective.min(coeffs.evaluate(a, c, rb, ib));
                }
                let candidate = Some(Incumbent {
                    objective,
                    // Lexicographic pair index keeps the reduction
                    // deterministic.
                    index: user_part.4 * (matrices.len() as u64) + dedicated.4,
                    a,
                    c,
                    rb,
                    ib,
                });
                if better(&candidate, &best) {
                    best = candidate;
                }
            }
            (best, feasible)
        })
        .reduce(
            || (None, 0),
            |(lb, lf), (rb, rf)| (if better(&lb, &rb) { lb } else { rb }, lf + rf),
        );

    let winner = best.ok_or(OracleError::Infeasible)?;
    let covariance = DMatrix::from_row_slice(
        2,
        2,
        &[
            Complex64::new(winner.a, 0.0),
            Complex64::new(winner.rb, winner.ib),
            Complex64::new(winner.rb, -winner.ib),
            Complex64::new(winner.c, 0.0),
        ],
    );
    Ok(OracleReport {
        covariance,
        objective: winner.objective,
        feasible_points,
    })
}

/// How far the worst-case objective can move when every covariance
/// parameter shifts by at most one grid step: the one-cell tolerance for
/// comparisons against analytic optima.
pub fn objective_cell_bound(
    spec: &CovarianceGridSpec,
    steering: &[DVector<Complex64>],
    eta: &[f64],
) -> Result<f64, OracleError> {
    spec.validate()?;
    if steering.is_empty() {
        return Err(OracleError::EmptyGrid);
    }
    if eta.len() != steering.len() {
        return Err(OracleError::WeightCount {
            got: eta.len(),
            want: steering.len(),
        });
    }
    let mut worst: f64 = 0.0;
    for (index, (b, weight)) in steering.iter().zip(eta).enumerate() {
        if b.len() != spec.dimension {
            return Err(OracleError::SteeringDimension {
                index,
                got: b.len(),
                want: spec.dimension,
            });
        }
        if !(*weight > 0.0) {
            return Err(OracleError::BadWeight {
                index,
                value: *weight,
            });
        }
        let coeffs = FormCoefficients::of(b);
        let lipschitz =
            (coeffs.p + coeffs.q + 2.0 * coeffs.re_t.abs() + 2.0 * coeffs.im_t.abs()) / weight;
        worst = worst.max(lipschitz);
    }
    Ok(worst * spec.step)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::closed_form::optimal_single;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha12Rng;

    fn unit_modulus_pair(phase: f64) -> DVector<Complex64> {
        DVector::from_vec(vec![
            Complex64::new(1.0, 0.0),
            Complex64::new(phase.cos(), phase.sin()),
        ])
    }

    fn random_channel(seed: u64) -> DVector<Complex64> {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        DVector::from_fn(2, |_, _| {
            Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)
        })
    }

    #[test]
    fn zero_threshold_puts_all_power_on_the_steering_vector() {
        let p_t = 0.1;
        let spec = CovarianceGridSpec {
            step: p_t / 50.0,
            ..CovarianceGridSpec::two_antenna(p_t)
        };
        let b = unit_modulus_pair(0.7);
        let h = random_channel(5);
        let eta = [2.5];
        let report =
            covariance_grid_search(&spec, &h, std::slice::from_ref(&b), &eta, 0.0, 1e-12).unwrap();
        let cell = objective_cell_bound(&spec, std::slice::from_ref(&b), &eta).unwrap();
        let exact = p_t * b.norm_squared() / eta[0];
        assert!(
            (report.objective - exact).abs() <= cell,
            "oracle {} vs exact {} with cell {}",
            report.objective,
            exact,
            cell
        );
        // A feasible covariance never beats the true optimum.
        assert!(report.objective <= exact * (1.0 + 1e-9));
        assert_relative_eq!(
            report.covariance.trace().re,
            p_t,
            max_relative = 2.0 * spec.step / p_t
        );
    }

    #[test]
    fn orthogonal_channel_splits_the_budget() {
        let p_t = 0.1;
        let noise = 1e-3;
        let spec = CovarianceGridSpec {
            step: p_t / 50.0,
            ..CovarianceGridSpec::two_antenna(p_t)
        };
        let b = unit_modulus_pair(0.4);
        // Orthogonal to b: flip the second entry's sign.
        let h = DVector::from_vec(vec![b[0], -b[1]]);
        let eta = [1.0];
        // Half the budget must go to the user.
        let gamma_bar = 0.5 * p_t * h.norm_squared() / noise;
        let report =
            covariance_grid_search(&spec, &h, std::slice::from_ref(&b), &eta, gamma_bar, noise)
                .unwrap();
        let cell = objective_cell_bound(&spec, std::slice::from_ref(&b), &eta).unwrap();
        let exact = 0.5 * p_t * b.norm_squared();
        assert!(
            (report.objective - exact).abs() <= cell,
            "oracle {} vs exact {} with cell {}",
            report.objective,
            exact,
            cell
        );
    }

    #[test]
    fn matches_the_single_point_solution_across_regimes() {
        let p_t = 0.1;
        let noise = 1e-3;
        let spec = CovarianceGridSpec {
            step: p_t / 50.0,
            ..CovarianceGridSpec::two_antenna(p_t)
        };
        for seed in 0..6u64 {
            let b = unit_modulus_pair(0.3 + 0.4 * seed as f64);
            let h = random_channel(seed + 100);
            let eta = [1.7];
            let limit = h.norm_squared() * p_t / noise;
            // Sweep one threshold per regime plus the unconstrained case.
            for fraction in [0.0, 0.2, 0.7] {
                let gamma_bar = fraction * limit;
                let exact = optimal_single(&h, &b, p_t, noise, gamma_bar).unwrap();
                let exact_objective = exact.gain_toward(&b) / eta[0];
                let report = covariance_grid_search(
                    &spec,
                    &h,
                    std::slice::from_ref(&b),
                    &eta,
                    gamma_bar,
                    noise,
                )
                .unwrap();
                let cell = objective_cell_bound(&spec, std::slice::from_ref(&b), &eta).unwrap();
                assert!(
                    (report.objective - exact_objective).abs() <= cell,
                    "seed {seed} fraction {fraction}: oracle {} vs exact {} with cell {}",
                    report.objective,
                    exact_objective,
                    cell
                );
                assert!(report.objective <= exact_objective * (1.0 + 1e-9));
            }
        }
    }

    #[test]
    fn split_search_agrees_with_the_collapsed_search() {
        let p_t = 0.1;
        let noise = 1e-3;
        let spec = CovarianceGridSpec {
            step: p_t / 10.0,
            ..CovarianceGridSpec::two_antenna(p_t)
        };
        let steering = [unit_modulus_pair(0.5), unit_modulus_pair(2.2)];
        let eta = [1.0, 1.3];
        let h = random_channel(7);
        let gamma_bar = 0.3 * h.norm_squared() * p_t / noise;
        let collapsed =
            covariance_grid_search(&spec, &h, &steering, &eta, gamma_bar, noise).unwrap();
        let split = covariance_pair_search(&spec, &h, &steering, &eta, gamma_bar, noise).unwrap();
        // Sums of step-quantized parts are step-quantized and vice versa, so
        // the two searches range over identical covariances.
        assert_relative_eq!(split.objective, collapsed.objective, max_relative = 1e-12);
    }

    #[test]
    fn refining_the_step_never_loses_ground() {
        let p_t = 0.1;
        let noise = 1e-3;
        let coarse = CovarianceGridSpec {
            step: p_t / 20.0,
            ..CovarianceGridSpec::two_antenna(p_t)
        };
        let fine = CovarianceGridSpec {
            step: p_t / 40.0,
            ..coarse.clone()
        };
        let steering = [unit_modulus_pair(1.1), unit_modulus_pair(2.9)];
        let eta = [1.0, 0.8];
        let h = random_channel(11);
        let gamma_bar = 0.4 * h.norm_squared() * p_t / noise;
        let at_coarse =
            covariance_grid_search(&coarse, &h, &steering, &eta, gamma_bar, noise).unwrap();
        let at_fine = covariance_grid_search(&fine, &h, &steering, &eta, gamma_bar, noise).unwrap();
        // Halving the step keeps every coarse point available.
        assert!(at_fine.objective >= at_coarse.objective * (1.0 - 1e-12));
    }

    #[test]
    fn impossible_threshold_reports_infeasible() {
        let p_t = 0.1;
        let noise = 1e-3;
        let spec = CovarianceGridSpec::two_antenna(p_t);
        let b = unit_modulus_pair(0.2);
        let h = random_channel(3);
        let gamma_bar = 2.0 * h.norm_squared() * p_t / noise;
        let err = covariance_grid_search(&spec, &h, std::slice::from_ref(&b), &[1.0], gamma_bar, noise)
            .unwrap_err();
        assert!(matches!(err, OracleError::Infeasible));
    }

    #[test]
    fn inputs_are_validated() {
        let p_t = 0.1;
        let b = unit_modulus_pair(0.2);
        let h = random_channel(1);
        let good = CovarianceGridSpec::two_antenna(p_t);

        let three = CovarianceGridSpec {
            dimension: 3,
            ..good.clone()
        };
        assert!(matches!(
            covariance_grid_search(&three, &h, std::slice::from_ref(&b), &[1.0], 0.0, 1e-3),
            Err(OracleError::UnsupportedDimension(3))
        ));

        let coarse = CovarianceGridSpec {
            step: p_t * 2.0,
            ..good.clone()
        };
        assert!(matches!(
            covariance_grid_search(&coarse, &h, std::slice::from_ref(&b), &[1.0], 0.0, 1e-3),
            Err(OracleError::BadStep(_))
        ));

        assert!(matches!(
            covariance_grid_search(&good, &h, &[], &[], 0.0, 1e-3),
            Err(OracleError::EmptyGrid)
        ));
        assert!(matches!(
            covariance_grid_search(&good, &h, std::slice::from_ref(&b), &[1.0, 2.0], 0.0, 1e-3),
            Err(OracleError::WeightCount { got: 2, want: 1 })
        ));
        assert!(matches!(
            covariance_grid_search(&good, &h, std::slice::from_ref(&b), &[0.0], 0.0, 1e-3),
            Err(OracleError::BadWeight { index: 0, .. })
        ));
        assert!(matches!(
            covariance_grid_search(&good, &h, std::slice::from_ref(&b), &[1.0], -1.0, 1e-3),
            Err(OracleError::NegativeThreshold(_))
        ));
        assert!(matches!(
            covariance_grid_search(&good, &h, std::slice::from_ref(&b), &[1.0], 0.0, 0.0),
            Err(OracleError::NonPositiveNoise(_))
        ));
    }

    #[test]
    fn winners_are_positive_semidefinite_and_within_budget() {
        let p_t = 0.1;
        let noise = 1e-3;
        let spec = CovarianceGridSpec {
            step: p_t / 25.0,
            ..CovarianceGridSpec::two_antenna(p_t)
        };
        for seed in 0..5u64 {
            let b = unit_modulus_pair(seed as f64);
            let h = random_channel(seed + 40);
            let gamma_bar = 0.5 * h.norm_squared() * p_t / noise;
            let report = covariance_grid_search(
                &spec,
                &h,
                std::slice::from_ref(&b),
                &[1.0],
                gamma_bar,
                noise,
            )
            .unwrap();
            let r = &report.covariance;
            assert!(r.trace().re <= p_t * (1.0 + 1e-12));
            let det = (r[(0, 0)] * r[(1, 1)] - r[(0, 1)] * r[(1, 0)]).re;
            assert!(det >= -1e-15, "determinant {det}");
            assert!(r[(0, 0)].re >= 0.0 && r[(1, 1)].re >= 0.0);
            // The user-power constraint holds at the winner.
            let user_power = (h.adjoint() * r * &h)[(0, 0)].re;
            assert!(user_power >= noise * gamma_bar * (1.0 - 1e-9));
        }
    }
}
