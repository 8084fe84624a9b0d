//! One runner per subcommand, each turning a resolved configuration into
//! CSV artifacts plus manifest entries.
//!
//! Failures map onto three exit classes: bad input (2), a well-posed but
//! unsatisfiable design problem (3), and numerical failure inside a solve
//! (4). The distinction matters for scripting sweeps: infeasible settings
//! are data, solver failures are bugs.

use covbeam::benchmark::{comm_only_beamforming, BenchmarkError};
use covbeam::channels::generate_rician_channels;
use covbeam::closed_form::{optimal_single, ClosedFormError, Regime};
use covbeam::conic::SolveStatus;
use covbeam::geometry::{
    angles_from_positions, build_coverage_grid, position_from_spherical, upa_steering,
    ArrayGeometry, CoverageGrid, DirectionAngles, Position,
};
use covbeam::metrics::{
    all_comm_sinrs, beampattern_gain, cassini_contours, eta_weights, sensing_snr, snr_map,
    BeamformerSet, SnrMap,
};
use covbeam::oracle::{covariance_grid_search, CovarianceGridSpec, OracleError};
use covbeam::sca::{implied_zeta, initialize, run_sca, ScaError, Termination};
use covbeam::scenario::{from_db, to_db, Scenario};
use thiserror::Error;
use toml::value::Value;

use crate::config::Resolved;
use crate::output::{float, Csv, Manifest, OutDir};

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] crate::config::ConfigError),
    #[error("invalid input: {0}")]
    Validation(String),
    #[error("no design satisfies the constraints: {0}")]
    Infeasible(String),
    #[error("solver failure: {0}")]
    Solver(String),
    #[error("i/o failure: {0}")]
    Io(#[from] std::io::Error),
}

impl RunError {
    /// 2 = bad input, 3 = infeasible problem, 4 = numerical failure.
    pub fn exit_code(&self) -> u8 {
        match self {
            RunError::Config(_) | RunError::Validation(_) | RunError::Io(_) => 2,
            RunError::Infeasible(_) => 3,
            RunError::Solver(_) => 4,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            RunError::Config(_) => "config",
            RunError::Validation(_) => "validation",
            RunError::Infeasible(_) => "infeasible",
            RunError::Solver(_) => "solver",
            RunError::Io(_) => "io",
        }
    }
}

fn validation(e: impl std::fmt::Display) -> RunError {
    RunError::Validation(e.to_string())
}

fn benchmark_error(e: BenchmarkError) -> RunError {
    match &e {
        BenchmarkError::Unachievable(_) | BenchmarkError::PowerBudgetExceeded { .. } => {
            RunError::Infeasible(e.to_string())
        }
        BenchmarkError::Solver(_) | BenchmarkError::SinrShortfall { .. } => {
            RunError::Solver(e.to_string())
        }
        _ => RunError::Validation(e.to_string()),
    }
}

fn sca_error(e: ScaError) -> RunError {
    let message = e.to_string();
    match e {
        ScaError::InfeasibleStart(inner) => benchmark_error(inner),
        ScaError::SubproblemNotOptimal {
            status: SolveStatus::Infeasible,
            ..
        } => RunError::Infeasible(message),
        ScaError::SubproblemNotOptimal { .. } | ScaError::Solver(_) => RunError::Solver(message),
        _ => RunError::Validation(message),
    }
}

fn closed_form_error(e: ClosedFormError) -> RunError {
    match &e {
        ClosedFormError::InfeasibleThreshold { .. } => RunError::Infeasible(e.to_string()),
        _ => RunError::Validation(e.to_string()),
    }
}

fn oracle_error(e: OracleError) -> RunError {
    match &e {
        OracleError::Infeasible => RunError::Infeasible(e.to_string()),
        _ => RunError::Validation(e.to_string()),
    }
}

/// Decibel value as a filename fragment: `.` becomes `p`, `-` becomes `m`.
fn db_label(db: f64) -> String {
    float(db).replace('.', "p").replace('-', "m")
}

/// Transmit-gain cut over azimuth `[0, 180]` degrees at fixed polar angle.
fn beampattern_cut(
    w: &BeamformerSet,
    scenario: &Scenario,
    theta_deg: f64,
    points: usize,
) -> Vec<(f64, f64)> {
    (0..points)
        .map(|i| {
            let phi = 180.0 * i as f64 / (points - 1) as f64;
            let b = upa_steering(
                DirectionAngles::from_degrees(theta_deg, phi),
                &scenario.tx_array,
            );
            (phi, to_db(beampattern_gain(w, &b)))
        })
        .collect()
}

fn write_cut(
    out: &OutDir,
    name: &str,
    w: &BeamformerSet,
    scenario: &Scenario,
    theta_deg: f64,
    points: usize,
) -> Result<(), RunError> {
    let mut csv = Csv::new(&["phi_deg", "gain_db"]);
    for (phi, gain) in beampattern_cut(w, scenario, theta_deg, points) {
        csv.row(vec![float(phi), float(gain)]);
    }
    out.write_atomic(name, &csv.finish())?;
    Ok(())
}

fn write_snr_map(
    out: &OutDir,
    name: &str,
    grid: &CoverageGrid,
    map: &SnrMap,
) -> Result<(), RunError> {
    let mut csv = Csv::new(&["x", "y", "snr_db"]);
    for (l, q) in grid.points.iter().enumerate() {
        csv.row(vec![float(q.x), float(q.y), float(to_db(map.values[l]))]);
    }
    out.write_atomic(name, &csv.finish())?;
    Ok(())
}

fn write_design(out: &OutDir, name: &str, w: &BeamformerSet) -> Result<(), RunError> {
    let mut csv = Csv::new(&["row", "col", "re", "im"]);
    let m = w.matrix();
    for row in 0..m.nrows() {
        for col in 0..m.ncols() {
            csv.row(vec![
                row.to_string(),
                col.to_string(),
                float(m[(row, col)].re),
                float(m[(row, col)].im),
            ]);
        }
    }
    out.write_atomic(name, &csv.finish())?;
    Ok(())
}

fn sinr_rows(csv: &mut Csv, design: &str, sinrs: &[f64], thresholds: &[f64]) {
    for (k, &v) in sinrs.iter().enumerate() {
        csv.row(vec![
            design.to_string(),
            k.to_string(),
            float(to_db(v)),
            float(to_db(thresholds[k])),
        ]);
    }
}

/// Polar angle (degrees) from the transmitter toward the region center.
fn center_theta_deg(r: &Resolved) -> Result<f64, RunError> {
    let center = Position::new(r.region.center_x, r.region.center_y, r.region.height);
    let angles = angles_from_positions(&r.scenario.bs_tx, &center).map_err(validation)?;
    Ok(angles.theta.to_degrees())
}

fn build_grid(r: &Resolved, counts: (usize, usize)) -> Result<CoverageGrid, RunError> {
    let s = &r.scenario;
    let mut grid = build_coverage_grid(
        &r.region,
        counts,
        (&s.bs_tx, &s.tx_array),
        (&s.bs_rx, &s.rx_array),
    )
    .map_err(validation)?;
    eta_weights(&mut grid, s).map_err(validation)?;
    Ok(grid)
}

/// Closed-form design for one user and one sensing point, swept over the
/// configured SINR thresholds; one beampattern cut per threshold.
pub fn run_single(r: &Resolved, out: &OutDir, manifest: &mut Manifest) -> Result<(), RunError> {
    let mut scenario = r.scenario.clone();
    scenario.ues = vec![r.single.ue];
    scenario.validate().map_err(validation)?;
    let channels =
        generate_rician_channels(&scenario, scenario.seeds.channel).map_err(validation)?;
    let h = &channels.h[0];
    let b0 = upa_steering(r.single.sensing_angles, &scenario.tx_array);
    let q = position_from_spherical(
        &scenario.bs_tx,
        r.single.sensing_angles,
        r.single.sensing_range,
    );
    let theta_deg = r.single.sensing_angles.theta.to_degrees();

    let mut summary = Csv::new(&[
        "gamma_db",
        "regime",
        "boundary_gamma_db",
        "sensing_snr_db",
        "achieved_sinr_db",
        "transmit_power",
    ]);
    let mut boundary_db = f64::NAN;
    for &gamma_db in &r.single.gamma_db {
        let solution = optimal_single(
            h,
            &b0,
            scenario.p_t,
            scenario.noise_power,
            from_db(gamma_db),
        )
        .map_err(closed_form_error)?;
        let w = BeamformerSet::from_columns(
            std::slice::from_ref(&solution.w1),
            1,
            scenario.tx_array.len(),
            scenario.p_t,
        )
        .map_err(validation)?;
        write_cut(
            out,
            &format!("single_beampattern_{}.csv", db_label(gamma_db)),
            &w,
            &scenario,
            theta_deg,
            r.single.sweep_points,
        )?;
        let snr = sensing_snr(&scenario, &w, &q).map_err(validation)?;
        let sinr = all_comm_sinrs(&w, &channels, scenario.noise_power).map_err(validation)?[0];
        boundary_db = to_db(solution.boundary_threshold);
        summary.row(vec![
            float(gamma_db),
            match solution.regime {
                Regime::SensingLimited => "sensing_limited".to_string(),
                Regime::CommLimited => "comm_limited".to_string(),
            },
            float(boundary_db),
            float(to_db(snr)),
            float(to_db(sinr)),
            float(w.total_power()),
        ]);
    }
    out.write_atomic("single_summary.csv", &summary.finish())?;

    let results = manifest.results();
    results.insert(
        "thresholds_db".into(),
        Value::Array(r.single.gamma_db.iter().map(|&g| Value::Float(g)).collect()),
    );
    results.insert("boundary_gamma_db".into(), Value::Float(boundary_db));
    Ok(())
}

/// Worst-case coverage design compared against the communication-only
/// baseline on the same grid, channels, and budget.
pub fn run_coverage(r: &Resolved, out: &OutDir, manifest: &mut Manifest) -> Result<(), RunError> {
    let s = &r.scenario;
    let grid = build_grid(r, r.grid_counts)?;
    let channels = generate_rician_channels(s, s.seeds.channel).map_err(validation)?;
    let thresholds: Vec<f64> = s.ues.iter().map(|u| u.sinr_threshold).collect();
    let benchmark = comm_only_beamforming(&channels, &thresholds, s.noise_power, s.p_t)
        .map_err(benchmark_error)?;
    let init = initialize(&channels, &grid, s).map_err(sca_error)?;
    let trace = run_sca(&init, &channels, &grid, s, &r.sca).map_err(sca_error)?;
    let proposed = &trace.final_set;

    let mut csv = Csv::new(&["iteration", "zeta", "worst_snr_db", "solver_iterations"]);
    for i in 0..trace.zetas.len() {
        let solver_iters = if i == 0 {
            0
        } else {
            trace.solver_iterations[i - 1]
        };
        csv.row(vec![
            i.to_string(),
            float(trace.zetas[i]),
            float(to_db(trace.worst_snrs[i])),
            solver_iters.to_string(),
        ]);
    }
    out.write_atomic("sca_trace.csv", &csv.finish())?;

    let map_proposed = snr_map(s, proposed, &grid).map_err(validation)?;
    let map_benchmark = snr_map(s, &benchmark, &grid).map_err(validation)?;
    write_snr_map(out, "snr_map_proposed.csv", &grid, &map_proposed)?;
    write_snr_map(out, "snr_map_benchmark.csv", &grid, &map_benchmark)?;

    let theta_deg = center_theta_deg(r)?;
    write_cut(
        out,
        "beampattern_proposed.csv",
        proposed,
        s,
        theta_deg,
        r.single.sweep_points,
    )?;
    write_cut(
        out,
        "beampattern_benchmark.csv",
        &benchmark,
        s,
        theta_deg,
        r.single.sweep_points,
    )?;
    write_design(out, "design_proposed.csv", proposed)?;

    let sinrs_proposed = all_comm_sinrs(proposed, &channels, s.noise_power).map_err(validation)?;
    let sinrs_benchmark =
        all_comm_sinrs(&benchmark, &channels, s.noise_power).map_err(validation)?;
    let mut csv = Csv::new(&["design", "user", "sinr_db", "threshold_db"]);
    sinr_rows(&mut csv, "proposed", &sinrs_proposed, &thresholds);
    sinr_rows(&mut csv, "benchmark", &sinrs_benchmark, &thresholds);
    out.write_atomic("coverage_sinrs.csv", &csv.finish())?;

    let results = manifest.results();
    results.insert(
        "proposed_worst_snr_db".into(),
        Value::Float(to_db(map_proposed.worst_value)),
    );
    results.insert(
        "proposed_spread_db".into(),
        Value::Float(map_proposed.spread_db()),
    );
    results.insert(
        "benchmark_worst_snr_db".into(),
        Value::Float(to_db(map_benchmark.worst_value)),
    );
    results.insert(
        "benchmark_spread_db".into(),
        Value::Float(map_benchmark.spread_db()),
    );
    results.insert("solves".into(), Value::Integer(trace.solves() as i64));
    results.insert(
        "termination".into(),
        Value::String(
            match trace.termination {
                Termination::Converged => "converged",
                Termination::MaxIterations => "max_iterations",
            }
            .to_string(),
        ),
    );
    results.insert("final_zeta".into(), Value::Float(trace.final_zeta()));
    manifest.timing().insert(
        "solve_seconds".into(),
        Value::Array(
            trace
                .solve_seconds
                .iter()
                .map(|&t| Value::Float(t))
                .collect(),
        ),
    );
    Ok(())
}

/// Communication-only baseline on its own: minimum power to meet every
/// SINR target, evaluated for sensing coverage it was never designed for.
pub fn run_benchmark(r: &Resolved, out: &OutDir, manifest: &mut Manifest) -> Result<(), RunError> {
    let s = &r.scenario;
    let grid = build_grid(r, r.grid_counts)?;
    let channels = generate_rician_channels(s, s.seeds.channel).map_err(validation)?;
    let thresholds: Vec<f64> = s.ues.iter().map(|u| u.sinr_threshold).collect();
    let benchmark = comm_only_beamforming(&channels, &thresholds, s.noise_power, s.p_t)
        .map_err(benchmark_error)?;

    let map = snr_map(s, &benchmark, &grid).map_err(validation)?;
    write_snr_map(out, "snr_map_benchmark.csv", &grid, &map)?;
    write_cut(
        out,
        "beampattern_benchmark.csv",
        &benchmark,
        s,
        center_theta_deg(r)?,
        r.single.sweep_points,
    )?;
    write_design(out, "design_benchmark.csv", &benchmark)?;
    let sinrs = all_comm_sinrs(&benchmark, &channels, s.noise_power).map_err(validation)?;
    let mut csv = Csv::new(&["design", "user", "sinr_db", "threshold_db"]);
    sinr_rows(&mut csv, "benchmark", &sinrs, &thresholds);
    out.write_atomic("benchmark_sinrs.csv", &csv.finish())?;

    let results = manifest.results();
    results.insert(
        "benchmark_worst_snr_db".into(),
        Value::Float(to_db(map.worst_value)),
    );
    results.insert("benchmark_spread_db".into(), Value::Float(map.spread_db()));
    results.insert(
        "transmit_power".into(),
        Value::Float(benchmark.total_power()),
    );
    Ok(())
}

/// Constant range-product loci of the isotropic-transmission SNR map.
pub fn run_cassini(r: &Resolved, out: &OutDir, manifest: &mut Manifest) -> Result<(), RunError> {
    let s = &r.scenario;
    let grid = build_grid(r, r.grid_counts)?;
    let iso = BeamformerSet::isotropic(s.tx_array.len(), 0, s.p_t).map_err(validation)?;
    let map = snr_map(s, &iso, &grid).map_err(validation)?;

    let levels_db: Vec<f64> = match &r.cassini.levels_db {
        Some(levels) => levels.clone(),
        None => {
            // Five levels strictly inside the map's dynamic range; the
            // extremes are single cells and trace no useful locus.
            let worst_db = to_db(map.worst_value);
            let spread = map.spread_db();
            (1..=5)
                .map(|k| worst_db + spread * k as f64 / 6.0)
                .collect()
        }
    };
    let levels_linear: Vec<f64> = levels_db.iter().map(|&d| from_db(d)).collect();
    let member_sets = cassini_contours(s, &grid, &levels_linear).map_err(validation)?;

    let range_product =
        |q: &Position| -> f64 { (q - s.bs_tx).norm() * (q - s.bs_rx).norm() };
    let mut csv = Csv::new(&["x", "y", "snr_db", "range_product"]);
    for (l, q) in grid.points.iter().enumerate() {
        csv.row(vec![
            float(q.x),
            float(q.y),
            float(to_db(map.values[l])),
            float(range_product(q)),
        ]);
    }
    out.write_atomic("cassini_map.csv", &csv.finish())?;

    for (i, (level_db, members)) in levels_db.iter().zip(&member_sets).enumerate() {
        let mut csv = Csv::new(&["level_db", "x", "y", "snr_db", "range_product"]);
        for &l in members {
            let q = &grid.points[l];
            csv.row(vec![
                float(*level_db),
                float(q.x),
                float(q.y),
                float(to_db(map.values[l])),
                float(range_product(q)),
            ]);
        }
        out.write_atomic(&format!("cassini_level_{i}.csv"), &csv.finish())?;
    }

    let results = manifest.results();
    results.insert(
        "levels_db".into(),
        Value::Array(levels_db.iter().map(|&d| Value::Float(d)).collect()),
    );
    results.insert(
        "members_per_level".into(),
        Value::Array(
            member_sets
                .iter()
                .map(|set| Value::Integer(set.len() as i64))
                .collect(),
        ),
    );
    Ok(())
}

/// Discrete-waveform matched-filter check: empirical SNR of a simulated
/// echo against the analytic value, for an unsteered and a steered design.
pub fn run_wavesim(r: &Resolved, out: &OutDir, manifest: &mut Manifest) -> Result<(), RunError> {
    let s = &r.scenario;
    let m_t = s.tx_array.len();
    let n = r.wavesim.n_samples;
    // The simulated window carries an integration gain of exactly
    // n_samples, so the analytic reference pins its time-bandwidth product
    // to the same value.
    let mut sim = s.clone();
    sim.bandwidth = n as f64 / sim.cpi_duration;
    sim.validate().map_err(validation)?;

    let ensemble =
        covbeam::wavesim::generate_waveforms(0, m_t, n, s.seeds.waveform).map_err(validation)?;
    let q = position_from_spherical(&s.bs_tx, r.single.sensing_angles, r.single.sensing_range);
    let b = upa_steering(r.single.sensing_angles, &s.tx_array);
    let designs = [
        (
            "isotropic",
            BeamformerSet::isotropic(m_t, 0, s.p_t).map_err(validation)?,
        ),
        (
            "steered",
            BeamformerSet::single_beam(&b, s.p_t).map_err(validation)?,
        ),
    ];

    let mut csv = Csv::new(&["design", "analytic_snr_db", "empirical_snr_db", "gap_db"]);
    let mut gaps = Vec::new();
    for (name, w) in &designs {
        let analytic = sensing_snr(&sim, w, &q).map_err(validation)?;
        let report = covbeam::wavesim::matched_filter_snr(
            w,
            &q,
            &ensemble,
            &sim,
            s.seeds.noise,
            r.wavesim.trials,
        )
        .map_err(validation)?;
        let gap = to_db(report.empirical_snr) - to_db(analytic);
        csv.row(vec![
            name.to_string(),
            float(to_db(analytic)),
            float(to_db(report.empirical_snr)),
            float(gap),
        ]);
        gaps.push((*name, gap));
    }
    out.write_atomic("wavesim.csv", &csv.finish())?;

    let results = manifest.results();
    results.insert("n_samples".into(), Value::Integer(n as i64));
    results.insert("trials".into(), Value::Integer(r.wavesim.trials as i64));
    for (name, gap) in gaps {
        results.insert(format!("{name}_gap_db"), Value::Float(gap));
    }
    Ok(())
}

/// Two-antenna study where an exhaustive covariance search is tractable:
/// the iterative design and (for one grid point) the closed form are scored
/// against the search optimum.
pub fn run_oracle(r: &Resolved, out: &OutDir, manifest: &mut Manifest) -> Result<(), RunError> {
    let base = &r.scenario;
    let mut placement = *base.ues.first().ok_or_else(|| {
        RunError::Validation("the oracle study needs at least one configured user".into())
    })?;
    placement.sinr_threshold = from_db(r.oracle.gamma_db);
    let mut scenario = base.clone();
    scenario.tx_array = ArrayGeometry::new(2, 1, 0.5).expect("static size");
    scenario.ues = vec![placement];
    scenario.validate().map_err(validation)?;
    let gamma_bar = placement.sinr_threshold;
    let spec = CovarianceGridSpec {
        dimension: 2,
        trace_budget: scenario.p_t,
        step: scenario.p_t * r.oracle.step_fraction,
    };

    let mut csv = Csv::new(&[
        "instance",
        "points",
        "search_objective",
        "iterative_objective",
        "ratio",
        "closed_form_objective",
    ]);
    let mut worst_ratio = f64::INFINITY;
    for instance in 0..r.oracle.instances {
        let mut trial = scenario.clone();
        trial.seeds.channel = scenario.seeds.channel.wrapping_add(instance as u64);
        let channels =
            generate_rician_channels(&trial, trial.seeds.channel).map_err(validation)?;
        for points in 1..=3usize {
            let mut grid = build_coverage_grid(
                &r.region,
                (points, 1),
                (&trial.bs_tx, &trial.tx_array),
                (&trial.bs_rx, &trial.rx_array),
            )
            .map_err(validation)?;
            eta_weights(&mut grid, &trial).map_err(validation)?;
            let search = covariance_grid_search(
                &spec,
                &channels.h[0],
                &grid.tx_steering,
                &grid.eta,
                gamma_bar,
                trial.noise_power,
            )
            .map_err(oracle_error)?;
            let init = initialize(&channels, &grid, &trial).map_err(sca_error)?;
            let trace = run_sca(&init, &channels, &grid, &trial, &r.sca).map_err(sca_error)?;
            let iterative = implied_zeta(&trace.final_set, &grid).map_err(sca_error)?;
            let ratio = iterative / search.objective;
            worst_ratio = worst_ratio.min(ratio);
            let closed_form = if points == 1 {
                let solution = optimal_single(
                    &channels.h[0],
                    &grid.tx_steering[0],
                    trial.p_t,
                    trial.noise_power,
                    gamma_bar,
                )
                .map_err(closed_form_error)?;
                solution.gain_toward(&grid.tx_steering[0]) / grid.eta[0]
            } else {
                f64::NAN
            };
            csv.row(vec![
                instance.to_string(),
                points.to_string(),
                float(search.objective),
                float(iterative),
                float(ratio),
                float(closed_form),
            ]);
        }
    }
    out.write_atomic("oracle.csv", &csv.finish())?;

    let results = manifest.results();
    results.insert(
        "instances".into(),
        Value::Integer(r.oracle.instances as i64),
    );
    results.insert("search_step".into(), Value::Float(spec.step));
    results.insert("worst_ratio".into(), Value::Float(worst_ratio));
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{resolve, FileConfig};

    fn desk() -> Resolved {
        resolve(FileConfig::default(), false, None).unwrap()
    }

    #[test]
    fn exit_codes_separate_the_failure_classes() {
        assert_eq!(RunError::Validation("x".into()).exit_code(), 2);
        assert_eq!(RunError::Infeasible("x".into()).exit_code(), 3);
        assert_eq!(RunError::Solver("x".into()).exit_code(), 4);
        let io = RunError::Io(std::io::Error::new(std::io::ErrorKind::Other, "x"));
        assert_eq!(io.exit_code(), 2);
    }

    #[test]
    fn infeasible_library_errors_map_to_exit_three() {
        let e = benchmark_error(BenchmarkError::PowerBudgetExceeded {
            required: 2.0,
            budget: 1.0,
        });
        assert_eq!(e.exit_code(), 3);
        let e = sca_error(ScaError::InfeasibleStart(BenchmarkError::Unachievable(
            SolveStatus::Infeasible,
        )));
        assert_eq!(e.exit_code(), 3);
        let e = closed_form_error(ClosedFormError::InfeasibleThreshold {
            required: 2.0,
            limit: 1.0,
        });
        assert_eq!(e.exit_code(), 3);
        let e = oracle_error(OracleError::Infeasible);
        assert_eq!(e.exit_code(), 3);
    }

    #[test]
    fn solver_breakdowns_map_to_exit_four() {
        let e = sca_error(ScaError::SubproblemNotOptimal {
            iteration: 3,
            status: SolveStatus::Unbounded,
        });
        assert_eq!(e.exit_code(), 4);
    }

    #[test]
    fn labels_are_filename_safe() {
        assert_eq!(db_label(5.0), "5p0");
        assert_eq!(db_label(-2.5), "m2p5");
        assert_eq!(db_label(30.0), "30p0");
    }

    #[test]
    fn beampattern_cut_spans_the_half_plane() {
        let r = desk();
        let w = BeamformerSet::isotropic(16, 0, r.scenario.p_t).unwrap();
        let cut = beampattern_cut(&w, &r.scenario, 90.0, 5);
        assert_eq!(cut.len(), 5);
        assert_eq!(cut[0].0, 0.0);
        assert_eq!(cut[4].0, 180.0);
        // Isotropic transmission has gain 1 in every direction.
        for (_, g) in cut {
            assert!(g.abs() < 1e-9, "gain {g} dB");
        }
    }
}
