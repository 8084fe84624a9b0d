//! Transmit beamforming for a bi-static sensing link that shares its
//! waveform with downlink communication users.
//!
//! One base station transmits with an antenna array; a second, spatially
//! separated base station listens for reflections from a surveillance
//! region. The transmit matrix carries both user data streams and dedicated
//! radar streams. This crate computes transmit designs that maximize the
//! worst-case sensing SNR over the region while every user keeps a minimum
//! SINR, and provides the analysis tooling around that design problem:
//!
//! - [`geometry`]: array steering vectors, angle conventions, coverage grids
//! - [`scenario`]: physical constants, placements, seeds for one experiment
//! - [`channels`]: Rician user channels and sensing link gains
//! - [`metrics`]: SINR, sensing SNR, beampattern, coverage weights
//! - [`conic`]: a small self-contained second-order cone solver
//! - [`closed_form`]: the single-point, single-user optimal beamformer
//! - [`sca`]: the iterative design for general grids and user counts
//! - [`benchmark`]: communication-only power minimization baseline
//! - [`oracle`]: brute-force covariance search for small instances
//! - [`wavesim`]: symbol-level waveform simulation of the sensing receiver

pub mod benchmark;
pub mod channels;
pub mod closed_form;
pub mod conic;
pub mod geometry;
pub mod metrics;
pub mod oracle;
pub mod sca;
pub mod scenario;
pub mod wavesim;

pub use num_complex::Complex64;
