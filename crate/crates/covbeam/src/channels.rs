//! User channels and sensing link gains.
//!
//! Downlink user channels follow a Rician model: a line-of-sight component
//! given by the transmit array's steering vector toward the user, plus
//! isotropic scatter, mixed by the Rician K-factor and scaled by
//! squared-distance path loss. Draws are reproducible: user `k` reads from
//! stream `k` of a counter-based RNG, so adding a user never perturbs the
//! channels of earlier ones and results are identical across platforms.

use crate::geometry::{upa_steering, Position};
use crate::scenario::Scenario;
use nalgebra::DVector;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ChannelError {
    #[error("scenario has no users to draw channels for")]
    NoUsers,
    #[error("a sensing point must not coincide with a base station")]
    PointOnBaseStation,
}

/// One channel vector per user, in user order.
#[derive(Debug, Clone)]
pub struct ChannelSet {
    pub h: Vec<DVector<Complex64>>,
}

impl ChannelSet {
    pub fn n_users(&self) -> usize {
        self.h.len()
    }
}

/// Draw the Rician user channels for `scenario` from `seed`.
///
/// User `k` gets `sqrt(beta0 / d_k^2) * (sqrt(G / (G + 1)) * b_k +
/// sqrt(1 / (G + 1)) * g_k)` where `b_k` is the steering vector toward the
/// user, `g_k` has i.i.d. unit-variance circular Gaussian entries, and `G`
/// is the Rician factor. `G = 0` is pure scatter; large `G` approaches the
/// deterministic line-of-sight channel.
pub fn generate_rician_channels(scenario: &Scenario, seed: u64) -> Result<ChannelSet, ChannelError> {
    if scenario.ues.is_empty() {
        return Err(ChannelError::NoUsers);
    }
    let g = scenario.rician_factor;
    let los_mix = (g / (g + 1.0)).sqrt();
    let scatter_mix = (1.0 / (g + 1.0)).sqrt();
    let mut h = Vec::with_capacity(scenario.ues.len());
    for (k, ue) in scenario.ues.iter().enumerate() {
        let path = (scenario.beta0 / (ue.range * ue.range)).sqrt();
        let los = upa_steering(ue.angles, &scenario.tx_array);
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        rng.set_stream(k as u64);
        let scatter = standard_complex_gaussian(&mut rng, scenario.tx_array.len());
        h.push(DVector::from_fn(scenario.tx_array.len(), |i, _| {
            path * (los_mix * los[i] + scatter_mix * scatter[i])
        }));
    }
    Ok(ChannelSet { h })
}

/// Vector of i.i.d. CN(0, 1) entries: real and imaginary parts are
/// independent N(0, 1/2).
pub fn standard_complex_gaussian<R: Rng>(rng: &mut R, len: usize) -> DVector<Complex64> {
    let scale = 0.5_f64.sqrt();
    DVector::from_fn(len, |_, _| {
        let re: f64 = sample_standard_normal(rng);
        let im: f64 = sample_standard_normal(rng);
        Complex64::new(scale * re, scale * im)
    })
}

/// Box-Muller draw of one N(0, 1) sample. Uses two uniform draws per call
/// so the stream layout stays simple and portable.
fn sample_standard_normal<R: Rng>(rng: &mut R) -> f64 {
    let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
    let u2: f64 = rng.gen::<f64>();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

/// Path gains of the transmit and receive sensing legs toward point `q`:
/// `beta0 / ||q - bs||^2` for each base station.
pub fn sensing_link_gains(q: &Position, scenario: &Scenario) -> Result<(f64, f64), ChannelError> {
    let dt = (q - scenario.bs_tx).norm_squared();
    let dr = (q - scenario.bs_rx).norm_squared();
    if dt == 0.0 || dr == 0.0 {
        return Err(ChannelError::PointOnBaseStation);
    }
    Ok((scenario.beta0 / dt, scenario.beta0 / dr))
}
