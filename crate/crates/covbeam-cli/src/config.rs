//! One TOML file configures a run; every field is optional.
//!
//! Omitted fields take the documented defaults, and each defaulted field is
//! listed in the run manifest, so the exact inputs of an experiment can be
//! reconstructed from its artifacts alone. Validation collects every
//! offending field before reporting, rather than stopping at the first.

use std::fmt::Display;
use std::path::Path;

use covbeam::geometry::{ArrayGeometry, DirectionAngles, RegionSpec};
use covbeam::scenario::{Scenario, Seeds, UePlacement};
use covbeam::sca::ScaConfig;
use num_complex::Complex64;
use serde::Deserialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Unreadable {
        path: String,
        source: std::io::Error,
    },
    #[error("cannot parse {path}: {source}")]
    Unparseable {
        path: String,
        source: Box<toml::de::Error>,
    },
    #[error("invalid configuration:\n  {}", .0.join("\n  "))]
    Invalid(Vec<String>),
}

/// Raw file contents; unknown keys are rejected so typos surface as errors.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    stations: Option<StationsSection>,
    arrays: Option<ArraysSection>,
    link: Option<LinkSection>,
    users: Option<Vec<UserSection>>,
    region: Option<RegionSection>,
    sca: Option<ScaSection>,
    seeds: Option<SeedsSection>,
    single: Option<SingleSection>,
    wavesim: Option<WavesimSection>,
    cassini: Option<CassiniSection>,
    oracle: Option<OracleSection>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct StationsSection {
    /// Height of both stations, meters.
    height: Option<f64>,
    /// Distance from the transmitter to the listener along +y, meters.
    separation: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ArraysSection {
    /// Transmit elements along x and z.
    tx: Option<[usize; 2]>,
    /// Receive elements along x and z.
    rx: Option<[usize; 2]>,
    /// Element spacing in carrier wavelengths.
    spacing: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct LinkSection {
    /// Transmit power budget, watts.
    power: Option<f64>,
    /// Receiver noise power, watts.
    noise_power: Option<f64>,
    /// Signal bandwidth, hertz.
    bandwidth: Option<f64>,
    /// Coherent processing interval, seconds.
    cpi_duration: Option<f64>,
    /// Reference path gain at one meter, linear.
    beta0: Option<f64>,
    /// Target reflection coefficient as [re, im].
    alpha: Option<[f64; 2]>,
    /// Rician factor of the user channels, linear.
    rician_factor: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct UserSection {
    theta_deg: f64,
    phi_deg: f64,
    /// Range from the transmitter, meters.
    range: Option<f64>,
    /// Required SINR, decibels.
    sinr_db: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RegionSection {
    /// Region center in the ground plane, [x, y] meters.
    center: Option<[f64; 2]>,
    /// Region height, meters.
    height: Option<f64>,
    /// Region side lengths, [x, y] meters.
    extent: Option<[f64; 2]>,
    /// Evaluation lattice counts, [nx, ny].
    grid: Option<[usize; 2]>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScaSection {
    /// Relative objective-improvement stopping threshold.
    epsilon: Option<f64>,
    max_iterations: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct SeedsSection {
    channel: Option<u64>,
    waveform: Option<u64>,
    noise: Option<u64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct SingleSection {
    sensing_theta_deg: Option<f64>,
    sensing_phi_deg: Option<f64>,
    sensing_range: Option<f64>,
    ue_theta_deg: Option<f64>,
    ue_phi_deg: Option<f64>,
    ue_range: Option<f64>,
    /// SINR thresholds to sweep, decibels.
    gamma_db: Option<Vec<f64>>,
    /// Azimuth samples of each beampattern cut.
    sweep_points: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct WavesimSection {
    /// Samples per stream; stands in for the time-bandwidth product.
    n_samples: Option<usize>,
    /// Independent noise realizations.
    trials: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct CassiniSection {
    /// SNR contour levels, decibels. Omitted: five levels evenly spaced
    /// across the interior of the map's dynamic range.
    levels_db: Option<Vec<f64>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct OracleSection {
    /// Number of seeded two-antenna instances.
    instances: Option<usize>,
    /// Search step as a fraction of the power budget.
    step_fraction: Option<f64>,
    /// User SINR threshold, decibels.
    gamma_db: Option<f64>,
}

/// Default sizing, switchable with `--full`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scale {
    /// 4x4 arrays and a 9x9 lattice: the whole pipeline runs in seconds.
    Desk,
    /// 8x8 arrays and a 50x50 lattice.
    Full,
}

impl Scale {
    pub fn name(&self) -> &'static str {
        match self {
            Scale::Desk => "desk",
            Scale::Full => "full",
        }
    }
}

/// Settings for the single-user, single-point study.
#[derive(Debug, Clone)]
pub struct SingleSettings {
    pub sensing_angles: DirectionAngles,
    pub sensing_range: f64,
    pub ue: UePlacement,
    pub gamma_db: Vec<f64>,
    pub sweep_points: usize,
}

#[derive(Debug, Clone)]
pub struct WavesimSettings {
    pub n_samples: usize,
    pub trials: usize,
}

#[derive(Debug, Clone)]
pub struct CassiniSettings {
    pub levels_db: Option<Vec<f64>>,
}

#[derive(Debug, Clone)]
pub struct OracleSettings {
    pub instances: usize,
    pub step_fraction: f64,
    pub gamma_db: f64,
}

/// Everything a subcommand needs, with defaults applied and recorded.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub scenario: Scenario,
    pub region: RegionSpec,
    pub grid_counts: (usize, usize),
    pub sca: ScaConfig,
    pub single: SingleSettings,
    pub wavesim: WavesimSettings,
    pub cassini: CassiniSettings,
    pub oracle: OracleSettings,
    pub scale: Scale,
    /// Dotted key paths that fell back to their defaults, sorted.
    pub defaulted: Vec<String>,
}

/// Read a config file, or produce the all-defaults configuration.
pub fn load(path: Option<&Path>) -> Result<FileConfig, ConfigError> {
    match path {
        None => Ok(FileConfig::default()),
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|source| ConfigError::Unreadable {
                path: p.display().to_string(),
                source,
            })?;
            toml::from_str(&text).map_err(|source| ConfigError::Unparseable {
                path: p.display().to_string(),
                source: Box::new(source),
            })
        }
    }
}

struct Tracker {
    defaulted: Vec<String>,
}

impl Tracker {
    fn new() -> Self {
        Self {
            defaulted: Vec::new(),
        }
    }

    fn take<T>(&mut self, key: &str, value: Option<T>, default: T) -> T {
        match value {
            Some(v) => v,
            None => {
                self.defaulted.push(key.to_string());
                default
            }
        }
    }
}

fn check(problems: &mut Vec<String>, ok: bool, message: impl Display) {
    if !ok {
        problems.push(message.to_string());
    }
}

/// Apply defaults, validate every invariant, and assemble the scenario.
///
/// `full` switches the array and lattice defaults to publication scale;
/// explicit config values always win. `seed` overrides all three seed
/// sources with consecutive values.
pub fn resolve(
    file: FileConfig,
    full: bool,
    seed_override: Option<u64>,
) -> Result<Resolved, ConfigError> {
    let scale = if full { Scale::Full } else { Scale::Desk };
    let (array_default, grid_default) = match scale {
        Scale::Desk => ([4usize, 4usize], [9usize, 9usize]),
        Scale::Full => ([8, 8], [50, 50]),
    };
    let mut t = Tracker::new();
    let mut problems = Vec::new();

    let stations = file.stations.unwrap_or_default();
    let height = t.take("stations.height", stations.height, 10.0);
    let separation = t.take("stations.separation", stations.separation, 100.0);

    let arrays = file.arrays.unwrap_or_default();
    let tx_counts = t.take("arrays.tx", arrays.tx, array_default);
    let rx_counts = t.take("arrays.rx", arrays.rx, array_default);
    let spacing = t.take("arrays.spacing", arrays.spacing, 0.5);

    let link = file.link.unwrap_or_default();
    let power = t.take("link.power", link.power, 0.1);
    let noise_power = t.take("link.noise_power", link.noise_power, 1e-12);
    let bandwidth = t.take("link.bandwidth", link.bandwidth, 1e8);
    let cpi_duration = t.take("link.cpi_duration", link.cpi_duration, 1e-3);
    let beta0 = t.take("link.beta0", link.beta0, 1e-4);
    let alpha = t.take("link.alpha", link.alpha, [1.0, 0.0]);
    let rician_factor = t.take("link.rician_factor", link.rician_factor, 10.0);

    let users = match file.users {
        Some(list) => list
            .into_iter()
            .enumerate()
            .map(|(i, u)| {
                let range = t.take(&format!("users[{i}].range"), u.range, 30.0);
                let sinr_db = t.take(&format!("users[{i}].sinr_db"), u.sinr_db, 20.0);
                UePlacement::new(u.theta_deg, u.phi_deg, range, sinr_db)
            })
            .collect(),
        None => {
            t.defaulted.push("users".to_string());
            vec![
                UePlacement::new(135.0, 30.0, 30.0, 20.0),
                UePlacement::new(135.0, 150.0, 30.0, 20.0),
            ]
        }
    };

    let region_section = file.region.unwrap_or_default();
    let center = t.take("region.center", region_section.center, [0.0, 50.0]);
    let region_height = t.take("region.height", region_section.height, 10.0);
    let extent = t.take("region.extent", region_section.extent, [50.0, 50.0]);
    let grid = t.take("region.grid", region_section.grid, grid_default);

    let sca_section = file.sca.unwrap_or_default();
    let sca_defaults = ScaConfig::default();
    let epsilon = t.take("sca.epsilon", sca_section.epsilon, sca_defaults.epsilon);
    let max_iterations = t.take(
        "sca.max_iterations",
        sca_section.max_iterations,
        sca_defaults.max_outer_iterations,
    );

    let seeds_section = file.seeds.unwrap_or_default();
    let seeds = match seed_override {
        Some(s) => Seeds {
            channel: s,
            waveform: s.wrapping_add(1),
            noise: s.wrapping_add(2),
        },
        None => Seeds {
            channel: t.take("seeds.channel", seeds_section.channel, 1),
            waveform: t.take("seeds.waveform", seeds_section.waveform, 2),
            noise: t.take("seeds.noise", seeds_section.noise, 3),
        },
    };

    let single_section = file.single.unwrap_or_default();
    let single = SingleSettings {
        sensing_angles: DirectionAngles::from_degrees(
            t.take(
                "single.sensing_theta_deg",
                single_section.sensing_theta_deg,
                90.0,
            ),
            t.take(
                "single.sensing_phi_deg",
                single_section.sensing_phi_deg,
                90.0,
            ),
        ),
        sensing_range: t.take("single.sensing_range", single_section.sensing_range, 50.0),
        ue: UePlacement::new(
            t.take("single.ue_theta_deg", single_section.ue_theta_deg, 135.0),
            t.take("single.ue_phi_deg", single_section.ue_phi_deg, 150.0),
            t.take("single.ue_range", single_section.ue_range, 30.0),
            20.0,
        ),
        gamma_db: t.take(
            "single.gamma_db",
            single_section.gamma_db,
            vec![5.0, 10.0, 20.0, 30.0],
        ),
        sweep_points: t.take("single.sweep_points", single_section.sweep_points, 361),
    };

    let wavesim_section = file.wavesim.unwrap_or_default();
    let wavesim = WavesimSettings {
        n_samples: t.take("wavesim.n_samples", wavesim_section.n_samples, 4096),
        trials: t.take("wavesim.trials", wavesim_section.trials, 100),
    };

    let cassini = CassiniSettings {
        levels_db: file.cassini.unwrap_or_default().levels_db,
    };

    let oracle_section = file.oracle.unwrap_or_default();
    let oracle = OracleSettings {
        instances: t.take("oracle.instances", oracle_section.instances, 3),
        step_fraction: t.take(
            "oracle.step_fraction",
            oracle_section.step_fraction,
            0.025,
        ),
        gamma_db: t.take("oracle.gamma_db", oracle_section.gamma_db, 10.0),
    };

    check(
        &mut problems,
        tx_counts[0] >= 1 && tx_counts[1] >= 1,
        "arrays.tx needs at least one element per axis",
    );
    check(
        &mut problems,
        rx_counts[0] >= 1 && rx_counts[1] >= 1,
        "arrays.rx needs at least one element per axis",
    );
    check(
        &mut problems,
        spacing > 0.0,
        format!("arrays.spacing must be positive, got {spacing}"),
    );
    check(
        &mut problems,
        power > 0.0,
        format!("link.power must be positive, got {power}"),
    );
    check(
        &mut problems,
        noise_power > 0.0,
        format!("link.noise_power must be positive, got {noise_power}"),
    );
    check(
        &mut problems,
        bandwidth * cpi_duration >= 1.0,
        format!(
            "link.bandwidth * link.cpi_duration must be at least 1, got {}",
            bandwidth * cpi_duration
        ),
    );
    check(
        &mut problems,
        beta0 > 0.0,
        format!("link.beta0 must be positive, got {beta0}"),
    );
    check(
        &mut problems,
        rician_factor >= 0.0,
        format!("link.rician_factor must be nonnegative, got {rician_factor}"),
    );
    check(
        &mut problems,
        separation != 0.0,
        "stations.separation must be nonzero for a bi-static geometry",
    );
    let m_t = tx_counts[0] * tx_counts[1];
    check(
        &mut problems,
        users.len() <= m_t,
        format!(
            "{} users exceed the {m_t} transmit antennas",
            users.len()
        ),
    );
    for (i, u) in users.iter().enumerate() {
        check(
            &mut problems,
            u.range > 0.0,
            format!("users[{i}].range must be positive, got {}", u.range),
        );
        check(
            &mut problems,
            u.sinr_threshold > 0.0,
            format!("users[{i}].sinr_db must be finite (threshold came out nonpositive)"),
        );
    }
    check(
        &mut problems,
        grid[0] >= 1 && grid[1] >= 1,
        "region.grid needs at least one point per axis",
    );
    check(
        &mut problems,
        (grid[0] == 1 || extent[0] > 0.0) && (grid[1] == 1 || extent[1] > 0.0),
        "region.extent must be positive along any axis with more than one grid point",
    );
    check(
        &mut problems,
        epsilon > 0.0,
        format!("sca.epsilon must be positive, got {epsilon}"),
    );
    check(
        &mut problems,
        max_iterations >= 1,
        "sca.max_iterations must be at least 1",
    );
    check(
        &mut problems,
        single.sensing_range > 0.0,
        format!(
            "single.sensing_range must be positive, got {}",
            single.sensing_range
        ),
    );
    check(
        &mut problems,
        single.ue.range > 0.0,
        format!("single.ue_range must be positive, got {}", single.ue.range),
    );
    check(
        &mut problems,
        !single.gamma_db.is_empty(),
        "single.gamma_db needs at least one threshold",
    );
    check(
        &mut problems,
        single.sweep_points >= 2,
        "single.sweep_points must be at least 2",
    );
    check(
        &mut problems,
        wavesim.n_samples >= m_t,
        format!(
            "wavesim.n_samples must be at least the {m_t} transmit antennas, got {}",
            wavesim.n_samples
        ),
    );
    check(
        &mut problems,
        wavesim.trials >= 1,
        "wavesim.trials must be at least 1",
    );
    if let Some(levels) = &cassini.levels_db {
        check(
            &mut problems,
            !levels.is_empty(),
            "cassini.levels_db must not be empty when given",
        );
    }
    check(
        &mut problems,
        oracle.instances >= 1,
        "oracle.instances must be at least 1",
    );
    check(
        &mut problems,
        oracle.step_fraction > 0.0 && oracle.step_fraction <= 0.5,
        format!(
            "oracle.step_fraction must lie in (0, 0.5], got {}",
            oracle.step_fraction
        ),
    );

    if !problems.is_empty() {
        return Err(ConfigError::Invalid(problems));
    }

    let tx_array = ArrayGeometry::new(tx_counts[0], tx_counts[1], spacing)
        .expect("counts and spacing validated above");
    let rx_array = ArrayGeometry::new(rx_counts[0], rx_counts[1], spacing)
        .expect("counts and spacing validated above");
    let scenario = Scenario {
        bs_tx: covbeam::geometry::Position::new(0.0, 0.0, height),
        bs_rx: covbeam::geometry::Position::new(0.0, separation, height),
        tx_array,
        rx_array,
        p_t: power,
        noise_power,
        bandwidth,
        cpi_duration,
        beta0,
        alpha: Complex64::new(alpha[0], alpha[1]),
        rician_factor,
        ues: users,
        seeds,
    };
    if let Err(e) = scenario.validate() {
        return Err(ConfigError::Invalid(vec![e.to_string()]));
    }

    let mut defaulted = t.defaulted;
    defaulted.sort();
    Ok(Resolved {
        scenario,
        region: RegionSpec {
            center_x: center[0],
            center_y: center[1],
            height: region_height,
            extent_x: extent[0],
            extent_y: extent[1],
        },
        grid_counts: (grid[0], grid[1]),
        sca: ScaConfig {
            epsilon,
            max_outer_iterations: max_iterations,
            ..ScaConfig::default()
        },
        single,
        wavesim,
        cassini,
        oracle,
        scale,
        defaulted,
    })
}
