//! Temporary probe: residual behavior of the stalled subproblem.

use covbeam::channels::generate_rician_channels;
use covbeam::conic::SolverOptions;
use covbeam::geometry::{build_coverage_grid, ArrayGeometry, RegionSpec};
use covbeam::metrics::eta_weights;
use covbeam::scenario::{Scenario, Seeds, UePlacement};
use covbeam::sca::{initialize, run_sca, ScaConfig};
use nalgebra::Vector3;

#[test]
#[ignore]
fn probe_stalled_instance() {
    let ues = vec![
        UePlacement::new(135.0, 30.0, 30.0, 13.0),
        UePlacement::new(135.0, 150.0, 30.0, 13.0),
    ];
    let scenario = Scenario {
        bs_tx: Vector3::new(0.0, 0.0, 10.0),
        bs_rx: Vector3::new(0.0, 100.0, 10.0),
        tx_array: ArrayGeometry::half_wavelength(2, 2).unwrap(),
        rx_array: ArrayGeometry::half_wavelength(2, 2).unwrap(),
        p_t: 0.1,
        noise_power: 1e-12,
        bandwidth: 1e8,
        cpi_duration: 1e-3,
        beta0: 1e-4,
        alpha: num_complex::Complex64::new(1.0, 0.0),
        rician_factor: 10.0,
        ues,
        seeds: Seeds::default(),
    };
    let region = RegionSpec {
        center_x: 0.0,
        center_y: 50.0,
        height: 10.0,
        extent_x: 10.0,
        extent_y: 10.0,
    };
    let mut grid = build_coverage_grid(
        &region,
        (3, 3),
        (&scenario.bs_tx, &scenario.tx_array),
        (&scenario.bs_rx, &scenario.rx_array),
    )
    .unwrap();
    eta_weights(&mut grid, &scenario).unwrap();
    let channels = generate_rician_channels(&scenario, scenario.seeds.channel).unwrap();
    let start = initialize(&channels, &grid, &scenario).unwrap();
    for max_iter in [100usize, 200, 400, 800, 1600] {
        let config = ScaConfig {
            epsilon: 1e-6,
            solver: SolverOptions {
                max_iter,
                ..SolverOptions::default()
            },
            ..ScaConfig::default()
        };
        match run_sca(&start, &channels, &grid, &scenario, &config) {
            Ok(trace) => {
                eprintln!(
                    "max_iter {max_iter}: converged, solves {}, final zeta {:.6e}",
                    trace.solves(),
                    trace.final_zeta()
                );
                break;
            }
            Err(e) => eprintln!("max_iter {max_iter}: {e}"),
        }
    }
}
