//! Physical constants, placements, and seeds for one experiment.
//!
//! A [`Scenario`] fixes everything the design and analysis code needs:
//! where the two base stations sit, their array shapes, link-budget
//! constants, the served users, and the RNG seeds that make runs
//! reproducible. Functions across the crate borrow a scenario rather than
//! threading a dozen loose parameters.

use crate::geometry::{ArrayGeometry, DirectionAngles, Position};
use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ScenarioError {
    #[error("transmit power must be positive, got {0} W")]
    NonPositivePower(f64),
    #[error("noise power must be positive, got {0} W")]
    NonPositiveNoise(f64),
    #[error("time-bandwidth product must be at least 1, got {0}")]
    DegenerateCpi(f64),
    #[error("reference path gain must be positive, got {0}")]
    NonPositivePathGain(f64),
    #[error("Rician factor must be non-negative, got {0}")]
    NegativeRicianFactor(f64),
    #[error("user {index} needs a positive SINR threshold, got {value}")]
    NonPositiveSinrThreshold { index: usize, value: f64 },
    #[error("user {index} needs a positive range, got {value} m")]
    NonPositiveRange { index: usize, value: f64 },
    #[error("{users} users exceed the {antennas} transmit antennas")]
    TooManyUsers { users: usize, antennas: usize },
    #[error("base stations must be separated for a bi-static geometry")]
    CoincidentBaseStations,
}

/// A served downlink user: placement relative to the transmit array plus
/// its SINR requirement (linear scale).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UePlacement {
    pub angles: DirectionAngles,
    pub range: f64,
    pub sinr_threshold: f64,
}

impl UePlacement {
    pub fn new(theta_deg: f64, phi_deg: f64, range: f64, sinr_threshold_db: f64) -> Self {
        Self {
            angles: DirectionAngles::from_degrees(theta_deg, phi_deg),
            range,
            sinr_threshold: from_db(sinr_threshold_db),
        }
    }
}

/// RNG seeds for the three independent sources of randomness.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Seeds {
    pub channel: u64,
    pub waveform: u64,
    pub noise: u64,
}

impl Default for Seeds {
    fn default() -> Self {
        Self {
            channel: 1,
            waveform: 2,
            noise: 3,
        }
    }
}

/// Complete physical description of one bi-static sensing-and-communication
/// deployment.
#[derive(Debug, Clone)]
pub struct Scenario {
    /// Transmitting base station position, meters.
    pub bs_tx: Position,
    /// Receiving (listening) base station position, meters.
    pub bs_rx: Position,
    pub tx_array: ArrayGeometry,
    pub rx_array: ArrayGeometry,
    /// Transmit power budget, watts.
    pub p_t: f64,
    /// Receiver noise power over the signal bandwidth, watts. Applies to
    /// both the users and the sensing receiver.
    pub noise_power: f64,
    /// Signal bandwidth, hertz.
    pub bandwidth: f64,
    /// Coherent processing interval, seconds.
    pub cpi_duration: f64,
    /// Path gain at 1 m reference distance (linear).
    pub beta0: f64,
    /// Target reflection coefficient.
    pub alpha: Complex64,
    /// Rician K-factor of the user channels (linear).
    pub rician_factor: f64,
    pub ues: Vec<UePlacement>,
    pub seeds: Seeds,
}

impl Scenario {
    /// Coherent processing gain: the time-bandwidth product.
    pub fn cpi_gain(&self) -> f64 {
        self.bandwidth * self.cpi_duration
    }

    /// Number of served users.
    pub fn n_users(&self) -> usize {
        self.ues.len()
    }

    /// Position of user `k` in world coordinates.
    pub fn ue_position(&self, k: usize) -> Position {
        crate::geometry::position_from_spherical(&self.bs_tx, self.ues[k].angles, self.ues[k].range)
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        if !(self.p_t > 0.0) {
            return Err(ScenarioError::NonPositivePower(self.p_t));
        }
        if !(self.noise_power > 0.0) {
            return Err(ScenarioError::NonPositiveNoise(self.noise_power));
        }
        if !(self.cpi_gain() >= 1.0) {
            return Err(ScenarioError::DegenerateCpi(self.cpi_gain()));
        }
        if !(self.beta0 > 0.0) {
            return Err(ScenarioError::NonPositivePathGain(self.beta0));
        }
        if !(self.rician_factor >= 0.0) {
            return Err(ScenarioError::NegativeRicianFactor(self.rician_factor));
        }
        for (index, ue) in self.ues.iter().enumerate() {
            if !(ue.sinr_threshold > 0.0) {
                return Err(ScenarioError::NonPositiveSinrThreshold {
                    index,
                    value: ue.sinr_threshold,
                });
            }
            if !(ue.range > 0.0) {
                return Err(ScenarioError::NonPositiveRange {
                    index,
                    value: ue.range,
                });
            }
        }
        if self.ues.len() > self.tx_array.len() {
            return Err(ScenarioError::TooManyUsers {
                users: self.ues.len(),
                antennas: self.tx_array.len(),
            });
        }
        if self.bs_tx == self.bs_rx {
            return Err(ScenarioError::CoincidentBaseStations);
        }
        Ok(())
    }

    /// Full-scale deployment: 8x8 arrays on both stations, 100 MHz over a
    /// 1 ms interval, 20 dBm budget, -90 dBm noise, -40 dB reference path
    /// gain, Rician factor 10, two users at 20 dB thresholds.
    pub fn full_scale(inter_bs_distance: f64) -> Self {
        Self {
            bs_tx: Position::new(0.0, 0.0, 10.0),
            bs_rx: Position::new(0.0, inter_bs_distance, 10.0),
            tx_array: ArrayGeometry::half_wavelength(8, 8).expect("static size"),
            rx_array: ArrayGeometry::half_wavelength(8, 8).expect("static size"),
            p_t: 0.1,
            noise_power: 1e-12,
            bandwidth: 1e8,
            cpi_duration: 1e-3,
            beta0: 1e-4,
            alpha: Complex64::new(1.0, 0.0),
            rician_factor: 10.0,
            ues: vec![
                UePlacement::new(135.0, 30.0, 30.0, 20.0),
                UePlacement::new(135.0, 150.0, 30.0, 20.0),
            ],
            seeds: Seeds::default(),
        }
    }

    /// Same link budget as [`Scenario::full_scale`] with 4x4 arrays, sized
    /// so the full design pipeline runs in seconds on one core.
    pub fn desk_scale(inter_bs_distance: f64) -> Self {
        let mut s = Self::full_scale(inter_bs_distance);
        s.tx_array = ArrayGeometry::half_wavelength(4, 4).expect("static size");
        s.rx_array = ArrayGeometry::half_wavelength(4, 4).expect("static size");
        s
    }
}

/// Decibels to linear scale.
pub fn from_db(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Linear scale to decibels.
pub fn to_db(linear: f64) -> f64 {
    10.0 * linear.log10()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn defaults_validate_and_derive_cpi_gain() {
        let s = Scenario::full_scale(100.0);
        s.validate().unwrap();
        assert_relative_eq!(s.cpi_gain(), 1e5);
        assert_eq!(s.tx_array.len(), 64);
        assert_eq!(s.n_users(), 2);
        assert_relative_eq!(s.ues[0].sinr_threshold, 100.0);
    }

    #[test]
    fn ue_positions_sit_at_the_requested_range() {
        let s = Scenario::full_scale(100.0);
        let p = s.ue_position(1);
        assert_relative_eq!((p - s.bs_tx).norm(), 30.0, epsilon = 1e-12);
    }

    #[test]
    fn invalid_parameters_are_rejected() {
        let mut s = Scenario::desk_scale(100.0);
        s.p_t = 0.0;
        assert_eq!(s.validate(), Err(ScenarioError::NonPositivePower(0.0)));

        let mut s = Scenario::desk_scale(100.0);
        s.bandwidth = 1.0;
        assert!(matches!(s.validate(), Err(ScenarioError::DegenerateCpi(_))));

        let mut s = Scenario::desk_scale(100.0);
        s.ues = vec![UePlacement::new(90.0, 0.0, 30.0, 20.0); 17];
        assert!(matches!(
            s.validate(),
            Err(ScenarioError::TooManyUsers { users: 17, .. })
        ));

        let mut s = Scenario::desk_scale(100.0);
        s.ues[0].sinr_threshold = 0.0;
        assert!(matches!(
            s.validate(),
            Err(ScenarioError::NonPositiveSinrThreshold { index: 0, .. })
        ));
    }

    #[test]
    fn db_conversions_round_trip() {
        assert_relative_eq!(from_db(20.0), 100.0);
        assert_relative_eq!(to_db(from_db(-37.3)), -37.3, epsilon = 1e-12);
    }
}
