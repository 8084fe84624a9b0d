//! Waveform-level Monte Carlo check of the matched-filter sensing chain.
//!
//! The rest of the crate scores a transmit design through a closed-form
//! post-integration SNR. This module rebuilds that number from first
//! principles: it synthesizes one coherent processing interval of baseband
//! streams, propagates them through the bi-static target reflection, adds
//! receiver noise sample by sample, runs the per-stream matched filters,
//! combines the stacked outputs with the analytic receive filter, and
//! measures the resulting signal-to-noise ratio. Agreement with the formula
//! validates the modeling assumptions behind the design objective: mutually
//! orthogonal probing streams, unit-power symbols, and peak-aligned
//! filtering. Delays are zero by construction (the filter output is read at
//! its peak) and the direct path between the two stations is absent, as it
//! is removed in practice from knowledge of the transmitted signal.
//!
//! The sample count `N` stands in for the time-bandwidth product: with `N`
//! samples per interval the measured SNR matches the analytic value whose
//! integration gain equals `N`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use thiserror::Error;

use crate::geometry::{angles_from_positions, upa_steering, GeometryError, Position};
use crate::metrics::BeamformerSet;
use crate::scenario::Scenario;

/// Errors from waveform generation and the simulated receive chain.
#[derive(Debug, Error)]
pub enum WavesimError {
    #[error("{k_comm} user streams do not fit in {m_t} transmit streams")]
    TooManyCommStreams { k_comm: usize, m_t: usize },
    #[error("{needed} samples are required per stream, got {got}")]
    InsufficientLength { needed: usize, got: usize },
    #[error("ensemble carries {got} streams but the design drives {want}")]
    StreamCountMismatch { got: usize, want: usize },
    #[error("ensemble has {got} user streams but the design has {want}")]
    CommStreamMismatch { got: usize, want: usize },
    #[error("transmit array has {got} elements but the design has {want} rows")]
    AntennaMismatch { got: usize, want: usize },
    #[error("at least one noise trial is required")]
    NoTrials,
    #[error("noise power must be nonnegative, got {0}")]
    NegativeNoise(f64),
    #[error("the design radiates no power toward the target; the receive filter is undefined")]
    ZeroGain,
    #[error("receive filter has {got} entries, expected {want}")]
    CombinerDimension { got: usize, want: usize },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// One coherent processing interval of baseband transmit streams.
///
/// The first `k_comm` streams carry random user symbols; the rest are
/// deterministic probing sequences known to the receiver.
#[derive(Debug, Clone)]
pub struct WaveformEnsemble {
    /// Samples per stream over the interval.
    pub n_samples: usize,
    /// `k_comm x n_samples` unit-modulus random user symbols, so each
    /// stream has sample power exactly one in every realization.
    pub comm_streams: DMatrix<Complex64>,
    /// `(m_t - k_comm) x n_samples` mutually orthogonal probing streams
    /// with unit average sample power: their Gram matrix over the interval
    /// is `n_samples` times the identity.
    pub radar_streams: DMatrix<Complex64>,
    /// Seed the streams were drawn from.
    pub seed: u64,
}

impl WaveformEnsemble {
    /// Number of user streams.
    pub fn k_comm(&self) -> usize {
        self.comm_streams.nrows()
    }

    /// Total number of streams, user plus probing.
    pub fn n_streams(&self) -> usize {
        self.comm_streams.nrows() + self.radar_streams.nrows()
    }

    /// All streams stacked into one matrix, user rows first.
    pub fn stacked(&self) -> DMatrix<Complex64> {
        let k = self.comm_streams.nrows();
        let r = self.radar_streams.nrows();
        let mut s = DMatrix::zeros(k + r, self.n_samples);
        s.rows_mut(0, k).copy_from(&self.comm_streams);
        s.rows_mut(k, r).copy_from(&self.radar_streams);
        s
    }
}

/// One quadrature symbol with unit modulus, so per-sample power is exact.
fn qpsk_symbol<R: Rng>(rng: &mut R) -> Complex64 {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let re = if rng.gen::<bool>() { s } else { -s };
    let im = if rng.gen::<bool>() { s } else { -s };
    Complex64::new(re, im)
}

/// Draw the transmit streams for one interval.
///
/// User streams are independent unit-modulus quadrature symbols. Probing
/// streams come from orthonormalizing Gaussian draws and rescaling, so
/// their Gram matrix over the interval equals `n_samples` times the
/// identity to machine precision. Orthogonalizing `m_t - k_comm` streams
/// needs at least that many samples.
pub fn generate_waveforms(
    k_comm: usize,
    m_t: usize,
    n_samples: usize,
    seed: u64,
) -> Result<WaveformEnsemble, WavesimError> {
    if k_comm > m_t {
        return Err(WavesimError::TooManyCommStreams { k_comm, m_t });
    }
    let n_radar = m_t - k_comm;
    let needed = n_radar.max(1);
    if n_samples < needed {
        return Err(WavesimError::InsufficientLength {
            needed,
            got: n_samples,
        });
    }
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let comm_streams = DMatrix::from_fn(k_comm, n_samples, |_, _| qpsk_symbol(&mut rng));
    let mut radar_streams = DMatrix::from_fn(n_radar, n_samples, |_, _| {
        Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    });
    // Modified Gram-Schmidt, applied twice to reach machine-precision
    // orthogonality regardless of how close the raw draws are.
    for _ in 0..2 {
        for i in 0..n_radar {
            for j in 0..i {
                let prior = radar_streams.row(j).into_owned();
                let overlap = prior.dotc(&radar_streams.row(i));
                let mut row = radar_streams.row_mut(i);
                row -= prior * overlap;
            }
            let norm = radar_streams.row(i).norm();
            radar_streams.row_mut(i).unscale_mut(norm);
        }
    }
    radar_streams.scale_mut((n_samples as f64).sqrt());
    Ok(WaveformEnsemble {
        n_samples,
        comm_streams,
        radar_streams,
        seed,
    })
}

/// Geometry-dependent pieces of the receive chain at one target point.
struct Chain {
    /// Receive-array response at the target.
    rx_steering: DVector<Complex64>,
    /// Transmit gains toward the target, one per stream.
    tx_gain: DVector<Complex64>,
    /// Stream Gram matrix over the interval.
    gram: DMatrix<Complex64>,
    /// Complex amplitude of the filtered echo per unit stream correlation.
    peak_scale: Complex64,
}

fn prepare_chain(
    w: &BeamformerSet,
    q: &Position,
    ensemble: &WaveformEnsemble,
    scenario: &Scenario,
) -> Result<Chain, WavesimError> {
    let m_t = w.n_antennas();
    if ensemble.n_streams() != m_t {
        return Err(WavesimError::StreamCountMismatch {
            got: ensemble.n_streams(),
            want: m_t,
        });
    }
    if ensemble.k_comm() != w.k_comm() {
        return Err(WavesimError::CommStreamMismatch {
            got: ensemble.k_comm(),
            want: w.k_comm(),
        });
    }
    if scenario.tx_array.len() != m_t {
        return Err(WavesimError::AntennaMismatch {
            got: scenario.tx_array.len(),
            want: m_t,
        });
    }
    if scenario.noise_power < 0.0 {
        return Err(WavesimError::NegativeNoise(scenario.noise_power));
    }
    let tx_angles = angles_from_positions(&scenario.bs_tx, q)?;
    let rx_angles = angles_from_positions(&scenario.bs_rx, q)?;
    let b = upa_steering(tx_angles, &scenario.tx_array);
    let rx_steering = upa_steering(rx_angles, &scenario.rx_array);
    let gain_tx = scenario.beta0 / (q - scenario.bs_tx).norm_squared();
    let gain_rx = scenario.beta0 / (q - scenario.bs_rx).norm_squared();
    let streams = ensemble.stacked();
    let gram = &streams * streams.adjoint();
    let tx_gain = w.matrix().ad_mul(&b);
    let peak_scale =
        scenario.alpha * ((scenario.cpi_duration * gain_tx * gain_rx).sqrt() / ensemble.n_samples as f64);
    Ok(Chain {
        rx_steering,
        tx_gain,
        gram,
        peak_scale,
    })
}

/// The analytic receive filter: the outer product structure of the echo
/// across receive antennas and filter outputs, each factor normalized.
pub fn matched_combiner(
    w: &BeamformerSet,
    q: &Position,
    scenario: &Scenario,
) -> Result<DVector<Complex64>, WavesimError> {
    let m_t = w.n_antennas();
    if scenario.tx_array.len() != m_t {
        return Err(WavesimError::AntennaMismatch {
            got: scenario.tx_array.len(),
            want: m_t,
        });
    }
    let tx_angles = angles_from_positions(&scenario.bs_tx, q)?;
    let rx_angles = angles_from_positions(&scenario.bs_rx, q)?;
    let b = upa_steering(tx_angles, &scenario.tx_array);
    let a = upa_steering(rx_angles, &scenario.rx_array);
    let tx_gain = w.matrix().ad_mul(&b);
    let gain_norm = tx_gain.norm();
    if !(gain_norm > 0.0) {
        return Err(WavesimError::ZeroGain);
    }
    Ok(combiner_from_parts(&a, &tx_gain, gain_norm))
}

fn combiner_from_parts(
    a: &DVector<Complex64>,
    tx_gain: &DVector<Complex64>,
    gain_norm: f64,
) -> DVector<Complex64> {
    let m_r = a.len();
    let m_t = tx_gain.len();
    let a_norm = a.norm();
    let mut v = DVector::zeros(m_r * m_t);
    for m in 0..m_r {
        let lead = a[m].conj() / Complex64::new(a_norm, 0.0);
        for k in 0..m_t {
            v[m * m_t + k] = lead * tx_gain[k] / Complex64::new(gain_norm, 0.0);
        }
    }
    v
}

/// Matched-filter output matrix at the aligned peak with noise disabled.
///
/// Row `m` is receive antenna `m`; column `k` is the filter matched to
/// stream `k`. With probing streams only the Gram matrix is diagonal, so
/// column `k` responds to transmit column `k` alone; user streams add
/// cross terms that shrink as `1/sqrt(n_samples)` in amplitude.
pub fn noiseless_peak(
    w: &BeamformerSet,
    q: &Position,
    ensemble: &WaveformEnsemble,
    scenario: &Scenario,
) -> Result<DMatrix<Complex64>, WavesimError> {
    let chain = prepare_chain(w, q, ensemble, scenario)?;
    let g = &chain.gram * &chain.tx_gain;
    Ok(&chain.rx_steering * g.adjoint() * chain.peak_scale)
}

/// Result of a Monte Carlo matched-filter run.
#[derive(Debug, Clone)]
pub struct MatchedFilterReport {
    /// Measured post-combining SNR, linear. Zero when the design puts no
    /// power toward the target, infinite on a saturated noise-free run.
    pub empirical_snr: f64,
    /// Post-combining echo power at the filter peak.
    pub signal_power: f64,
    /// Mean post-combining noise power across the trials.
    pub noise_power: f64,
    /// The design radiates nothing toward the target; the SNR is pinned
    /// to zero and the receive filter is arbitrary.
    pub zero_signal: bool,
    /// No noise reached the combiner, so the ratio is not informative.
    pub saturated: bool,
}

/// Measure the post-combining SNR at `q` with the analytic receive filter.
///
/// The echo is propagated exactly through the stream Gram matrix; the
/// noise is drawn per sample at the receive array, matched-filtered, and
/// combined, over `trials` independent realizations with seeds derived
/// from `noise_seed`. Trials evaluate in parallel and reduce in trial
/// order, so the result does not depend on the thread count. The expected
/// value is the analytic SNR whose integration gain equals the ensemble
/// sample count.
pub fn matched_filter_snr(
    w: &BeamformerSet,
    q: &Position,
    ensemble: &WaveformEnsemble,
    scenario: &Scenario,
    noise_seed: u64,
    trials: usize,
) -> Result<MatchedFilterReport, WavesimError> {
    let chain = prepare_chain(w, q, ensemble, scenario)?;
    if trials == 0 {
        return Err(WavesimError::NoTrials);
    }
    let gain_norm = chain.tx_gain.norm();
    if !(gain_norm > 0.0) {
        return Ok(MatchedFilterReport {
            empirical_snr: 0.0,
            signal_power: 0.0,
            noise_power: 0.0,
            zero_signal: true,
            saturated: false,
        });
    }
    let combiner = combiner_from_parts(&chain.rx_steering, &chain.tx_gain, gain_norm);
    Ok(run_chain(&chain, ensemble, scenario, noise_seed, trials, &combiner))
}

/// Same measurement with a caller-supplied receive filter.
///
/// The ratio is invariant to the filter's scale. Useful for probing how
/// far a filter sits from the matched one.
pub fn matched_filter_snr_with_combiner(
    w: &BeamformerSet,
    q: &Position,
    ensemble: &WaveformEnsemble,
    scenario: &Scenario,
    noise_seed: u64,
    trials: usize,
    combiner: &DVector<Complex64>,
) -> Result<MatchedFilterReport, WavesimError> {
    let chain = prepare_chain(w, q, ensemble, scenario)?;
    if trials == 0 {
        return Err(WavesimError::NoTrials);
    }
    let want = chain.rx_steering.len() * chain.tx_gain.len();
    if combiner.len() != want {
        return Err(WavesimError::CombinerDimension {
            got: combiner.len(),
            want,
        });
    }
    Ok(run_chain(&chain, ensemble, scenario, noise_seed, trials, combiner))
}

fn run_chain(
    chain: &Chain,
    ensemble: &WaveformEnsemble,
    scenario: &Scenario,
    noise_seed: u64,
    trials: usize,
    combiner: &DVector<Complex64>,
) -> MatchedFilterReport {
    let m_r = chain.rx_steering.len();
    let m_t = chain.tx_gain.len();
    // Stacked echo at the peak: receive antenna m contributes its steering
    // phase times the Gram-filtered transmit gains.
    let g = &chain.gram * &chain.tx_gain;
    let scale = chain.peak_scale.conj();
    let mut echo = DVector::zeros(m_r * m_t);
    for m in 0..m_r {
        let lead = chain.rx_steering[m].conj() * scale;
        for k in 0..m_t {
            echo[m * m_t + k] = lead * g[k];
        }
    }
    let signal_power = combiner.dotc(&echo).norm_sqr();
    let streams = ensemble.stacked();
    let noise_samples: Vec<f64> = (0..trials)
        .into_par_iter()
        .map(|trial| {
            let mut rng = ChaCha12Rng::seed_from_u64(noise_seed);
            rng.set_stream(trial as u64 + 1);
            let filtered = filtered_noise(
                &mut rng,
                &streams,
                m_r,
                scenario.noise_power,
                scenario.cpi_duration,
            );
            let mut stacked = DVector::zeros(m_r * m_t);
            for m in 0..m_r {
                for k in 0..m_t {
                    stacked[m * m_t + k] = filtered[(m, k)].conj();
                }
            }
            combiner.dotc(&stacked).norm_sqr()
        })
        .collect();
    let noise_power = noise_samples.iter().sum::<f64>() / trials as f64;
    let saturated = !(noise_power > 0.0);
    let empirical_snr = if !saturated {
        signal_power / noise_power
    } else if signal_power > 0.0 {
        f64::INFINITY
    } else {
        0.0
    };
    MatchedFilterReport {
        empirical_snr,
        signal_power,
        noise_power,
        zero_signal: false,
        saturated,
    }
}

/// One realization of receiver noise pushed through the matched filters:
/// per-sample circular Gaussian noise of the given power at each receive
/// antenna, correlated against every stream with the peak normalization.
/// Output entry `(m, k)` is the filtered noise at antenna `m`, stream `k`;
/// its variance is the interval duration times the noise power over the
/// sample count, matching the analytic post-filter noise floor.
fn filtered_noise<R: Rng>(
    rng: &mut R,
    streams: &DMatrix<Complex64>,
    m_r: usize,
    noise_power: f64,
    cpi_duration: f64,
) -> DMatrix<Complex64> {
    let n = streams.ncols();
    let component = (noise_power / 2.0).sqrt();
    let raw = DMatrix::from_fn(m_r, n, |_, _| {
        Complex64::new(
            component * rng.sample::<f64, _>(StandardNormal),
            component * rng.sample::<f64, _>(StandardNormal),
        )
    });
    raw * streams.adjoint() * Complex64::new(cpi_duration.sqrt() / n as f64, 0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::ArrayGeometry;
    use crate::metrics::sensing_snr;
    use crate::scenario::Seeds;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::Rng;

    fn test_scenario(m_x: usize, m_z: usize, n_samples: usize) -> Scenario {
        Scenario {
            bs_tx: Position::new(0.0, 0.0, 10.0),
            bs_rx: Position::new(0.0, 100.0, 10.0),
            tx_array: ArrayGeometry::half_wavelength(m_x, m_z).unwrap(),
            rx_array: ArrayGeometry::half_wavelength(m_x, m_z).unwrap(),
            p_t: 0.1,
            noise_power: 1e-12,
            // The integration gain of the analytic SNR equals the simulated
            // sample count under this pairing.
            bandwidth: n_samples as f64,
            cpi_duration: 1.0,
            beta0: 1e-4,
            alpha: Complex64::new(0.8, 0.6),
            rician_factor: 10.0,
            ues: Vec::new(),
            seeds: Seeds::default(),
        }
    }

    fn target() -> Position {
        Position::new(12.0, 43.0, 0.0)
    }

    #[test]
    fn comm_only_ensemble_has_no_radar_streams() {
        let e = generate_waveforms(3, 3, 64, 7).unwrap();
        assert_eq!(e.radar_streams.nrows(), 0);
        assert_eq!(e.comm_streams.shape(), (3, 64));
        for s in e.comm_streams.iter() {
            assert_relative_eq!(s.norm(), 1.0, max_relative = 1e-15);
        }
        // Unit modulus makes each stream's sample power exactly one.
        for k in 0..3 {
            let power = e.comm_streams.row(k).norm_squared() / 64.0;
            assert_relative_eq!(power, 1.0, max_relative = 1e-15);
        }
    }

    #[test]
    fn radar_gram_is_the_sample_count_times_identity() {
        let e = generate_waveforms(2, 6, 128, 3).unwrap();
        assert_eq!(e.radar_streams.shape(), (4, 128));
        let gram = &e.radar_streams * e.radar_streams.adjoint();
        for i in 0..4 {
            for j in 0..4 {
                let want = if i == j { 128.0 } else { 0.0 };
                assert!(
                    (gram[(i, j)] - Complex64::new(want, 0.0)).norm() <= 128.0 * 1e-12,
                    "gram[{i},{j}] = {}",
                    gram[(i, j)]
                );
            }
        }
    }

    #[test]
    fn short_windows_and_bad_stream_counts_are_rejected() {
        assert!(matches!(
            generate_waveforms(1, 5, 3, 0),
            Err(WavesimError::InsufficientLength { needed: 4, got: 3 })
        ));
        assert!(matches!(
            generate_waveforms(2, 1, 64, 0),
            Err(WavesimError::TooManyCommStreams { k_comm: 2, m_t: 1 })
        ));
        assert!(matches!(
            generate_waveforms(2, 2, 0, 0),
            Err(WavesimError::InsufficientLength { needed: 1, got: 0 })
        ));
    }

    #[test]
    fn stacked_streams_keep_user_rows_first() {
        let e = generate_waveforms(1, 3, 32, 5).unwrap();
        let s = e.stacked();
        assert_eq!(s.shape(), (3, 32));
        assert_eq!(s.row(0), e.comm_streams.row(0));
        assert_eq!(s.row(1), e.radar_streams.row(0));
        assert_eq!(s.row(2), e.radar_streams.row(1));
    }

    #[test]
    fn probing_only_peak_has_no_cross_stream_response() {
        let scenario = test_scenario(2, 2, 256);
        let e = generate_waveforms(0, 4, 256, 11).unwrap();
        // Zero first column: its matched filter must stay exactly silent.
        let mut w = BeamformerSet::isotropic(4, 0, scenario.p_t).unwrap().matrix().clone();
        w.column_mut(0).fill(Complex64::new(0.0, 0.0));
        let w = BeamformerSet::new(w, 0, scenario.p_t).unwrap();
        let peak = noiseless_peak(&w, &target(), &e, &scenario).unwrap();
        // Orthogonalization residue bounds the leakage at machine level.
        assert!(peak.column(0).norm() <= 1e-10 * peak.column(1).norm());
        assert!(peak.column(1).norm() > 0.0);
    }

    #[test]
    fn user_stream_leakage_shrinks_with_the_window() {
        let n = 4096;
        let e = generate_waveforms(1, 4, n, 2).unwrap();
        let s = e.stacked();
        let gram = &s * s.adjoint();
        // Power leaking from the user stream into each probing filter is
        // a random correlation of order 1/n.
        for k in 1..4 {
            let leak = gram[(0, k)].norm_sqr() / (n as f64 * n as f64);
            assert!(leak < 3.0 / n as f64, "leak {leak} at column {k}");
        }
    }

    #[test]
    fn noiseless_probing_peak_matches_the_echo_model() {
        let n = 1024;
        let mut scenario = test_scenario(2, 2, n);
        scenario.noise_power = 0.0;
        let q = target();
        let e = generate_waveforms(0, 4, n, 9).unwrap();
        let tx_angles = angles_from_positions(&scenario.bs_tx, &q).unwrap();
        let b = upa_steering(tx_angles, &scenario.tx_array);
        let w = BeamformerSet::single_beam(&b, scenario.p_t).unwrap();
        let report = matched_filter_snr(&w, &q, &e, &scenario, 4, 1).unwrap();
        assert!(report.saturated);
        assert!(!report.zero_signal);
        assert_eq!(report.empirical_snr, f64::INFINITY);
        let rx_angles = angles_from_positions(&scenario.bs_rx, &q).unwrap();
        let a = upa_steering(rx_angles, &scenario.rx_array);
        let gain_tx = scenario.beta0 / (q - scenario.bs_tx).norm_squared();
        let gain_rx = scenario.beta0 / (q - scenario.bs_rx).norm_squared();
        let expected = scenario.cpi_duration
            * gain_tx
            * gain_rx
            * scenario.alpha.norm_sqr()
            * a.norm_squared()
            * w.matrix().ad_mul(&b).norm_squared();
        // Probing streams are exactly orthogonal, so the peak is exact.
        assert_relative_eq!(report.signal_power, expected, max_relative = 1e-9);
    }

    #[test]
    fn noiseless_mixed_peak_is_within_a_percent_of_the_echo_model() {
        let n = 4096;
        let mut scenario = test_scenario(2, 2, n);
        scenario.noise_power = 0.0;
        let q = target();
        let e = generate_waveforms(1, 4, n, 13).unwrap();
        let w = BeamformerSet::isotropic(4, 1, scenario.p_t).unwrap();
        let report = matched_filter_snr(&w, &q, &e, &scenario, 4, 1).unwrap();
        let tx_angles = angles_from_positions(&scenario.bs_tx, &q).unwrap();
        let b = upa_steering(tx_angles, &scenario.tx_array);
        let rx_angles = angles_from_positions(&scenario.bs_rx, &q).unwrap();
        let a = upa_steering(rx_angles, &scenario.rx_array);
        let gain_tx = scenario.beta0 / (q - scenario.bs_tx).norm_squared();
        let gain_rx = scenario.beta0 / (q - scenario.bs_rx).norm_squared();
        let expected = scenario.cpi_duration
            * gain_tx
            * gain_rx
            * scenario.alpha.norm_sqr()
            * a.norm_squared()
            * w.matrix().ad_mul(&b).norm_squared();
        // Finite-window user-stream cross terms perturb the peak slightly.
        assert_relative_eq!(report.signal_power, expected, max_relative = 1e-2);
    }

    #[test]
    fn isotropic_design_matches_the_analytic_snr() {
        let n = 1024;
        let scenario = test_scenario(2, 2, n);
        let q = target();
        let e = generate_waveforms(0, 4, n, 21).unwrap();
        let w = BeamformerSet::isotropic(4, 0, scenario.p_t).unwrap();
        let report = matched_filter_snr(&w, &q, &e, &scenario, 17, 200).unwrap();
        assert!(!report.saturated && !report.zero_signal);
        let analytic = sensing_snr(&scenario, &w, &q).unwrap();
        let gap_db = 10.0 * (report.empirical_snr / analytic).log10();
        assert!(gap_db.abs() <= 0.5, "gap {gap_db} dB");
    }

    #[test]
    fn doubling_the_window_doubles_the_snr() {
        let q = target();
        let w = BeamformerSet::isotropic(4, 0, 0.1).unwrap();
        let mut measured = Vec::new();
        for n in [512, 1024] {
            let scenario = test_scenario(2, 2, n);
            let e = generate_waveforms(0, 4, n, 33).unwrap();
            let report = matched_filter_snr(&w, &q, &e, &scenario, 29, 400).unwrap();
            measured.push(report.empirical_snr);
        }
        let ratio_db = 10.0 * (measured[1] / measured[0]).log10();
        assert!(
            (ratio_db - 10.0 * 2.0f64.log10()).abs() <= 0.5,
            "ratio {ratio_db} dB"
        );
    }

    #[test]
    fn filtered_noise_covariance_matches_the_design_floor() {
        let n = 128;
        let trials = 2000;
        let noise_power = 0.5;
        let cpi_duration = 2.0;
        let e = generate_waveforms(0, 2, n, 41).unwrap();
        let streams = e.stacked();
        let m_r = 2;
        // Per-filter noise across receive antennas should be white with
        // variance cpi_duration * noise_power / n.
        let floor = cpi_duration * noise_power / n as f64;
        let mut cov = DMatrix::<Complex64>::zeros(m_r, m_r);
        let mut rng = ChaCha12Rng::seed_from_u64(55);
        for _ in 0..trials {
            let filtered = filtered_noise(&mut rng, &streams, m_r, noise_power, cpi_duration);
            let col = filtered.column(0).into_owned();
            cov += &col * col.adjoint();
        }
        cov.unscale_mut(trials as f64);
        for i in 0..m_r {
            for j in 0..m_r {
                let want = if i == j { floor } else { 0.0 };
                assert!(
                    (cov[(i, j)] - Complex64::new(want, 0.0)).norm() <= 0.1 * floor,
                    "cov[{i},{j}] = {} vs {want}",
                    cov[(i, j)]
                );
            }
        }
    }

    #[test]
    fn perturbed_combiners_never_beat_the_matched_one() {
        let n = 512;
        let scenario = test_scenario(2, 2, n);
        let q = target();
        let e = generate_waveforms(0, 4, n, 3).unwrap();
        let tx_angles = angles_from_positions(&scenario.bs_tx, &q).unwrap();
        let b = upa_steering(tx_angles, &scenario.tx_array);
        let w = BeamformerSet::single_beam(&b, scenario.p_t).unwrap();
        let v = matched_combiner(&w, &q, &scenario).unwrap();
        let baseline = matched_filter_snr_with_combiner(&w, &q, &e, &scenario, 61, 800, &v)
            .unwrap()
            .empirical_snr;
        let mut rng = ChaCha12Rng::seed_from_u64(71);
        for _ in 0..12 {
            let mut delta = DVector::from_fn(v.len(), |_, _| {
                Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
            });
            delta.unscale_mut(delta.norm());
            let perturbed = (&v + delta * Complex64::new(0.5, 0.0)).normalize();
            let trial = matched_filter_snr_with_combiner(&w, &q, &e, &scenario, 61, 800, &perturbed)
                .unwrap()
                .empirical_snr;
            assert!(
                trial <= baseline * (1.0 + 1e-9),
                "perturbed {trial} beats matched {baseline}"
            );
        }
    }

    #[test]
    fn zero_design_reports_a_warning_not_an_error() {
        let scenario = test_scenario(1, 2, 64);
        let e = generate_waveforms(1, 2, 64, 4).unwrap();
        let w = BeamformerSet::new(DMatrix::zeros(2, 2), 1, scenario.p_t).unwrap();
        let report = matched_filter_snr(&w, &target(), &e, &scenario, 5, 3).unwrap();
        assert!(report.zero_signal);
        assert!(!report.saturated);
        assert_eq!(report.empirical_snr, 0.0);
        assert_eq!(report.signal_power, 0.0);
        assert!(matches!(
            matched_combiner(&w, &target(), &scenario),
            Err(WavesimError::ZeroGain)
        ));
    }

    #[test]
    fn mismatched_inputs_are_rejected() {
        let scenario = test_scenario(1, 2, 64);
        let e = generate_waveforms(1, 2, 64, 4).unwrap();
        let w = BeamformerSet::isotropic(2, 1, scenario.p_t).unwrap();
        let wide = BeamformerSet::isotropic(3, 1, scenario.p_t).unwrap();
        assert!(matches!(
            matched_filter_snr(&wide, &target(), &e, &scenario, 5, 3),
            Err(WavesimError::StreamCountMismatch { got: 2, want: 3 })
        ));
        let comm_heavy = generate_waveforms(2, 2, 64, 4).unwrap();
        assert!(matches!(
            matched_filter_snr(&w, &target(), &comm_heavy, &scenario, 5, 3),
            Err(WavesimError::CommStreamMismatch { got: 2, want: 1 })
        ));
        assert!(matches!(
            matched_filter_snr(&w, &target(), &e, &scenario, 5, 0),
            Err(WavesimError::NoTrials)
        ));
        let mut negative = test_scenario(1, 2, 64);
        negative.noise_power = -1.0;
        assert!(matches!(
            matched_filter_snr(&w, &target(), &e, &negative, 5, 3),
            Err(WavesimError::NegativeNoise(_))
        ));
        let bad_filter = DVector::zeros(3);
        assert!(matches!(
            matched_filter_snr_with_combiner(&w, &target(), &e, &scenario, 5, 3, &bad_filter),
            Err(WavesimError::CombinerDimension { got: 3, want: 4 })
        ));
    }

    proptest! {
        #[test]
        fn generated_streams_satisfy_their_power_contracts(
            m_t in 1usize..6,
            k_frac in 0usize..6,
            seed in any::<u64>(),
        ) {
            let k_comm = k_frac % (m_t + 1);
            let n = 48;
            let e = generate_waveforms(k_comm, m_t, n, seed).unwrap();
            for s in e.comm_streams.iter() {
                prop_assert!((s.norm() - 1.0).abs() <= 1e-12);
            }
            let gram = &e.radar_streams * e.radar_streams.adjoint();
            for i in 0..gram.nrows() {
                for j in 0..gram.ncols() {
                    let want = if i == j { n as f64 } else { 0.0 };
                    prop_assert!((gram[(i, j)] - Complex64::new(want, 0.0)).norm() <= n as f64 * 1e-12);
                }
            }
        }
    }
}
