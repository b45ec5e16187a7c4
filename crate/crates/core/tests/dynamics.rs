//! Time integration, characteristics and the scenario pipeline.

use dgh::characteristics::{advect, equispaced_seeds, is_monotone, verify_density_transport};
use dgh::cli::config::Config;
use dgh::grid::PeriodicGrid;
use dgh::model::ModelParams;
use dgh::scenario::{build_initial_data, run_scenario, solve_amplitude, Scenario};
use dgh::timestepper::{run, SimConfig, Termination};

const STEEPENING: &str = include_str!("../../../configs/steepening.conf");
const POSITIVE_DENSITY: &str = include_str!("../../../configs/positive-density.conf");
const ZERO_MEAN: &str = include_str!("../../../configs/zero-mean.conf");

fn preset(text: &str, overrides: &[(&str, &str)]) -> Scenario {
    let mut c = Config::parse(text).unwrap();
    for (k, v) in overrides {
        c.set(*k, *v);
    }
    c.to_scenario().unwrap()
}

#[test]
fn characteristic_jacobian_matches_seed_differences() {
    let sc = preset(POSITIVE_DENSITY, &[("sim.t_end", "0.5"), ("sim.snapshot_times", "")]);
    let grid = PeriodicGrid::new(sc.sim.n).unwrap();
    let s0 = build_initial_data(&sc.family, &grid, &sc.params).unwrap();
    let seeds = equispaced_seeds(512);
    let tracked = advect(&seeds, &s0, &sc.params, &sc.sim).unwrap();
    let e = &tracked.ensemble;
    let (q, qx) = (e.q.last().unwrap(), e.qx.last().unwrap());
    let k = seeds.len();
    let h = 1.0 / k as f64;
    let mut worst: f64 = 0.0;
    for j in 0..k {
        // Unwrap the neighbours across the period.
        let next = if j + 1 == k { q[0] + 1.0 } else { q[j + 1] };
        let prev = if j == 0 { q[k - 1] - 1.0 } else { q[j - 1] };
        worst = worst.max(((next - prev) / (2.0 * h) - qx[j]).abs());
    }
    assert!(worst < 1e-4, "{worst:e}");
    assert!(is_monotone(e));
}

#[test]
fn density_transport_improves_with_resolution() {
    let mut residuals = Vec::new();
    for n in ["64", "128"] {
        let sc = preset(POSITIVE_DENSITY, &[("sim.t_end", "0.5"), ("sim.n", n), ("sim.snapshot_times", "")]);
        let grid = PeriodicGrid::new(sc.sim.n).unwrap();
        let s0 = build_initial_data(&sc.family, &grid, &sc.params).unwrap();
        let tracked = advect(&equispaced_seeds(32), &s0, &sc.params, &sc.sim).unwrap();
        residuals.push(verify_density_transport(&tracked.ensemble, &tracked.rho_frames, &s0.rho).unwrap());
    }
    assert!(residuals[1] < 1e-8, "{residuals:?}");
    assert!(residuals[1] <= residuals[0] + 1e-12, "{residuals:?}");
}

#[test]
fn halving_the_cfl_number_barely_moves_the_solution() {
    let sc = preset(POSITIVE_DENSITY, &[("sim.t_end", "0.5"), ("sim.n", "64"), ("sim.snapshot_times", "")]);
    let grid = PeriodicGrid::new(sc.sim.n).unwrap();
    let s0 = build_initial_data(&sc.family, &grid, &sc.params).unwrap();
    let coarse = run(&s0, &sc.params, &sc.sim).unwrap();
    let fine_cfg = SimConfig {
        cfl: sc.sim.cfl / 2.0,
        slope_dt_factor: sc.sim.slope_dt_factor / 2.0,
        ..sc.sim.clone()
    };
    let fine = run(&s0, &sc.params, &fine_cfg).unwrap();
    assert_eq!(coarse.termination, Termination::ReachedEnd);
    assert_eq!(fine.termination, Termination::ReachedEnd);
    assert!((coarse.final_time - 0.5).abs() < 1e-12);
    let d = coarse.final_state.sup_distance(&fine.final_state);
    assert!(d < 1e-6, "{d:e}");
}

#[test]
fn runs_are_deterministic() {
    let sc = preset(POSITIVE_DENSITY, &[("sim.t_end", "0.2"), ("sim.n", "64"), ("sim.snapshot_times", "")]);
    let a = run_scenario(&sc).unwrap();
    let b = run_scenario(&sc).unwrap();
    assert_eq!(a.result.final_state, b.result.final_state);
    assert_eq!(a.result.dts, b.result.dts);
    assert_eq!(a.report, b.report);
}

#[test]
fn amplitude_bisection_takes_at_most_twenty_steps() {
    let p = ModelParams::new(1.0, 0.5).unwrap();
    for n in [64, 512] {
        let grid = PeriodicGrid::new(n).unwrap();
        for (b, zero_mean) in [(1.0, false), (0.0, false), (1.0, true), (2.0, true)] {
            let (a, steps) = solve_amplitude(&grid, &p, 1.05, b, zero_mean).unwrap();
            assert!(steps <= 20, "n = {n}, b = {b}: {steps} steps");
            assert!(a > 0.0);
        }
    }
}

#[test]
fn amplitude_bisection_rejects_degenerate_requests() {
    let grid = PeriodicGrid::new(64).unwrap();
    // With gamma = A and no density the threshold is zero at a = 0.
    let p = ModelParams::new(1.0, 1.0).unwrap();
    assert!(solve_amplitude(&grid, &p, 1.05, 0.0, false).is_err());
    assert!(solve_amplitude(&grid, &p, 1.0, 1.0, false).is_err());
}

#[test]
fn steepening_preset_blows_up_before_the_bound() {
    let sc = preset(STEEPENING, &[("sim.n", "256")]);
    let o = run_scenario(&sc).unwrap();
    let bound = o.report.riccati_t.expect("initial data must satisfy a blow-up criterion");
    let t = o.t_sim().expect("blow-up must be detected");
    assert!(matches!(o.result.termination, Termination::BlowupDetected { .. }));
    assert!(t <= bound, "detected at {t}, bound {bound}");
    assert!(!o.numerical_fault());
    assert!(o.report.m0 < 0.0);
}

#[test]
fn zero_mean_preset_blows_up_before_the_bound() {
    let sc = preset(ZERO_MEAN, &[("sim.n", "256")]);
    let o = run_scenario(&sc).unwrap();
    let bound = o.report.riccati_t.expect("initial data must satisfy a blow-up criterion");
    let t = o.t_sim().expect("blow-up must be detected");
    assert!(t <= bound, "detected at {t}, bound {bound}");
}
