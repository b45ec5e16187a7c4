//! Invariants over random inputs.

use proptest::prelude::*;

use dgh::cli::config::{scenario_config, Config};
use dgh::criteria::{
    blowup_time_bound, k_mean_aware, k_sobolev, k_zero_mean, poincare_check, riccati_bound,
    sobolev_sharp_check, threshold_mean_aware, threshold_sobolev, threshold_zero_mean,
    SOBOLEV_CONSTANT,
};
use dgh::grid::PeriodicGrid;
use dgh::model::{energy_e0, local_form_residual, mean_u, rhs, ModelParams, State};
use dgh::oracle::BandLimited;

fn band_limited(modes: usize) -> impl Strategy<Value = BandLimited> {
    (
        -1.0..1.0f64,
        prop::collection::vec(-1.0..1.0f64, modes),
        prop::collection::vec(-1.0..1.0f64, modes),
    )
        .prop_map(|(mean, cos, sin)| {
            let decay = |v: Vec<f64>| v.iter().enumerate().map(|(k, a)| a / (k + 1) as f64).collect();
            BandLimited {
                mean,
                cos: decay(cos),
                sin: decay(sin),
            }
        })
}

fn params() -> impl Strategy<Value = ModelParams> {
    (0.1..2.0f64, -2.0..2.0f64).prop_map(|(shear, gamma)| ModelParams::new(shear, gamma).unwrap())
}

fn state(n: usize, u: &BandLimited, rho: &BandLimited) -> State {
    let grid = PeriodicGrid::new(n).unwrap();
    State::new(u.sample(&grid), rho.sample(&grid)).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn spectrum_round_trips(f in band_limited(30), n in prop::sample::select(vec![8usize, 16, 64, 128])) {
        let grid = PeriodicGrid::new(n).unwrap();
        let field = f.sample(&grid);
        let back = field.spectrum().to_field();
        prop_assert!(back.sup_distance(&field) < 1e-13);
    }

    #[test]
    fn rhs_preserves_means(u in band_limited(8), rho in band_limited(8), p in params()) {
        let s = state(64, &u, &rho);
        let (du, drho) = rhs(&s, &p).unwrap();
        prop_assert!(du.integral().abs() < 1e-12);
        prop_assert!(drho.integral().abs() < 1e-12);
    }

    #[test]
    fn rhs_satisfies_the_local_form(u in band_limited(6), rho in band_limited(6), p in params()) {
        // Modes up to 6 keep every product resolved on 64 points.
        let s = state(64, &u, &rho);
        let (du, _) = rhs(&s, &p).unwrap();
        prop_assert!(local_form_residual(&s, &p, &du) < 1e-9);
    }

    #[test]
    fn rhs_commutes_with_translation(
        u in band_limited(8),
        rho in band_limited(8),
        p in params(),
        shift in 0usize..64,
    ) {
        let s = state(64, &u, &rho);
        let moved = State::new(s.u.shifted(shift), s.rho.shifted(shift)).unwrap();
        let (du, drho) = rhs(&s, &p).unwrap();
        let (du_m, drho_m) = rhs(&moved, &p).unwrap();
        prop_assert!(du.shifted(shift).sup_distance(&du_m) < 1e-10);
        prop_assert!(drho.shifted(shift).sup_distance(&drho_m) < 1e-10);
    }

    #[test]
    fn invariants_are_translation_invariant(u in band_limited(8), rho in band_limited(8), shift in 0usize..64) {
        let s = state(64, &u, &rho);
        let moved = State::new(s.u.shifted(shift), s.rho.shifted(shift)).unwrap();
        prop_assert!((energy_e0(&s) - energy_e0(&moved)).abs() < 1e-12 * energy_e0(&s).max(1.0));
        prop_assert!((mean_u(&s) - mean_u(&moved)).abs() < 1e-14);
    }

    #[test]
    fn sobolev_ratio_never_exceeds_sharp_constant(f in band_limited(12)) {
        let grid = PeriodicGrid::new(128).unwrap();
        let field = f.sample(&grid);
        prop_assume!(field.max_abs() > 1e-9);
        prop_assert!(sobolev_sharp_check(&field).unwrap() <= SOBOLEV_CONSTANT + 1e-12);
    }

    #[test]
    fn poincare_margin_is_nonnegative(f in band_limited(12), eps in 0.01..50.0f64) {
        let grid = PeriodicGrid::new(128).unwrap();
        prop_assert!(poincare_check(&f.sample(&grid), eps).unwrap() >= -1e-9);
    }

    #[test]
    fn thresholds_square_to_twice_k(
        e0 in 0.0..20.0f64,
        a0 in -5.0..5.0f64,
        eps in 0.01..20.0f64,
        gamma in -3.0..3.0f64,
        shear in 0.1..3.0f64,
    ) {
        let close = |t: f64, k: f64| (t * t - 2.0 * k).abs() <= 1e-12 * (2.0 * k).max(1.0);
        prop_assert!(threshold_sobolev(e0, gamma, shear) <= 0.0);
        prop_assert!(close(threshold_sobolev(e0, gamma, shear), k_sobolev(e0, gamma, shear)));
        prop_assert!(close(threshold_zero_mean(e0, gamma, shear), k_zero_mean(e0, gamma, shear)));
        prop_assert!(close(
            threshold_mean_aware(e0, a0, eps, gamma, shear).unwrap(),
            k_mean_aware(e0, a0, eps, gamma, shear).unwrap(),
        ));
        // The zero-mean constant is never worse than the general one.
        prop_assert!(k_zero_mean(e0, gamma, shear) <= k_sobolev(e0, gamma, shear) + 1e-12);
    }

    #[test]
    fn blowup_bound_is_the_riccati_bound_with_half(k in 0.0..10.0f64, gap in 0.01..5.0f64) {
        let m0 = -(2.0 * k).sqrt() - gap;
        let a = blowup_time_bound(m0, k).unwrap();
        let b = riccati_bound(0.5, k, m0).unwrap();
        prop_assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));
        prop_assert!(a > 0.0);
    }

    #[test]
    fn bound_shrinks_with_steeper_slope(k in 0.0..10.0f64, gap in 0.01..5.0f64, extra in 0.01..5.0f64) {
        let m0 = -(2.0 * k).sqrt() - gap;
        prop_assert!(blowup_time_bound(m0 - extra, k).unwrap() < blowup_time_bound(m0, k).unwrap());
    }

    #[test]
    fn config_render_round_trips(
        a in 0.01..3.0f64,
        b in 0.0..2.0f64,
        gamma in -2.0..2.0f64,
        n in prop::sample::select(vec![16usize, 32, 64]),
        t_end in 0.01..5.0f64,
    ) {
        let mut c = Config::default();
        c.set("scenario.family", "steepening");
        c.set("scenario.a", a.to_string());
        c.set("scenario.b", b.to_string());
        c.set("model.gamma", gamma.to_string());
        c.set("sim.n", n.to_string());
        c.set("sim.t_end", t_end.to_string());
        let sc = c.to_scenario().unwrap();
        let rendered = scenario_config(&sc).render();
        let again = Config::parse(&rendered).unwrap().to_scenario().unwrap();
        prop_assert_eq!(&sc, &again);
        prop_assert_eq!(scenario_config(&again).render(), rendered);
    }
}
