//! Initial-data families and single-scenario orchestration.
//!
//! | family             | `u0`                                         | `rho0`                    |
//! |--------------------|----------------------------------------------|---------------------------|
//! | `constant`         | `c`                                          | `r`                       |
//! | `steepening`       | `a sin(2 pi x) / (2 pi)`                     | `b sin^2(pi (x - 1/2))`   |
//! | `positive-density` | `ru sin(2 pi x) / (2 pi)`                    | `r0 + sin(2 pi x)`        |
//! | `zero-mean`        | `a sin(2 pi x)/(2 pi) + a sin(6 pi x)/(24 pi)` | `b sin^2(pi (x - 1/2))` |
//! | `custom-fourier`   | cosine/sine series                           | cosine/sine series        |
//!
//! For `steepening` and `zero-mean` the steepest point of `u0` is `x = 1/2`,
//! exactly where `rho0` vanishes, with `min u0' = -a` and `-5a/4`
//! respectively. With [`Amplitude::Auto`] the amplitude is chosen by
//! bisection so that `min u0'` sits a given factor beyond the relevant
//! blow-up threshold; the threshold depends on `a` through `E0`.

use std::f64::consts::PI;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::characteristics::{
    advect, density_sign_preserved, equispaced_seeds, is_monotone, verify_density_transport,
    CharacteristicEnsemble,
};
use crate::criteria::{
    estimate_blowup_rate, evaluate_criteria, lyapunov_trace, threshold_sobolev,
    threshold_zero_mean, CriterionReport, LyapunovTrace, RateEstimate,
};
use crate::error::{invalid, Error, Result};
use crate::grid::{Field, PeriodicGrid};
use crate::model::{energy_e0, ModelParams, State};
use crate::timestepper::{run, SimConfig, SimResult, Termination};

/// Bisection tolerance on the amplitude (relative once it exceeds 1).
pub const AMPLITUDE_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Amplitude {
    Fixed(f64),
    /// `min u0' = factor * threshold`.
    Auto { factor: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Family {
    Constant { u: f64, rho: f64 },
    Steepening { a: Amplitude, b: f64 },
    PositiveDensity { r0: f64, ru: f64 },
    ZeroMean { a: Amplitude, b: f64 },
    /// `f(x) = cos[0] + sum_k cos[k] cos(2 pi k x) + sin[k-1] sin(2 pi k x)`.
    CustomFourier {
        u_cos: Vec<f64>,
        u_sin: Vec<f64>,
        rho_cos: Vec<f64>,
        rho_sin: Vec<f64>,
    },
}

impl Family {
    pub fn id(&self) -> &'static str {
        match self {
            Family::Constant { .. } => "constant",
            Family::Steepening { .. } => "steepening",
            Family::PositiveDensity { .. } => "positive-density",
            Family::ZeroMean { .. } => "zero-mean",
            Family::CustomFourier { .. } => "custom-fourier",
        }
    }
}

fn notch(b: f64) -> impl Fn(f64) -> f64 {
    move |x| {
        let s = (PI * (x - 0.5)).sin();
        b * s * s
    }
}

fn steepening_u(a: f64) -> impl Fn(f64) -> f64 {
    move |x| a * (2.0 * PI * x).sin() / (2.0 * PI)
}

fn zero_mean_u(a: f64) -> impl Fn(f64) -> f64 {
    move |x| a * (2.0 * PI * x).sin() / (2.0 * PI) + a * (6.0 * PI * x).sin() / (24.0 * PI)
}

fn fourier<'a>(cos: &'a [f64], sin: &'a [f64]) -> impl Fn(f64) -> f64 + 'a {
    move |x| {
        let c: f64 = cos
            .iter()
            .enumerate()
            .map(|(k, a)| a * (2.0 * PI * k as f64 * x).cos())
            .sum();
        let s: f64 = sin
            .iter()
            .enumerate()
            .map(|(k, b)| b * (2.0 * PI * (k + 1) as f64 * x).sin())
            .sum();
        c + s
    }
}

fn check_finite(name: &'static str, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(invalid(name, "must be finite"))
    }
}

fn gap_threshold_at_zero(grid: &Arc<PeriodicGrid>, params: &ModelParams, b: f64, zero_mean: bool) -> f64 {
    let s = State {
        u: Field::zeros(grid),
        rho: Field::from_fn(grid, notch(b)),
    };
    let e0 = energy_e0(&s);
    if zero_mean {
        threshold_zero_mean(e0, params.gamma, params.shear).abs()
    } else {
        threshold_sobolev(e0, params.gamma, params.shear).abs()
    }
}

/// Amplitude `a` solving `slope_per_a * a = factor * |threshold(E0(a))|`.
/// Returns the amplitude and the number of bisection steps.
pub fn solve_amplitude(
    grid: &Arc<PeriodicGrid>,
    params: &ModelParams,
    factor: f64,
    b: f64,
    zero_mean: bool,
) -> Result<(f64, usize)> {
    if !(factor > 1.0) {
        return Err(invalid("factor", "must exceed 1"));
    }
    let slope_per_a = if zero_mean { 1.25 } else { 1.0 };
    let gap = |a: f64| {
        let u = if zero_mean {
            Field::from_fn(grid, zero_mean_u(a))
        } else {
            Field::from_fn(grid, steepening_u(a))
        };
        let s = State {
            u,
            rho: Field::from_fn(grid, notch(b)),
        };
        let e0 = energy_e0(&s);
        let thr = if zero_mean {
            threshold_zero_mean(e0, params.gamma, params.shear)
        } else {
            threshold_sobolev(e0, params.gamma, params.shear)
        };
        slope_per_a * a - factor * thr.abs()
    };
    // |threshold| grows with E0, which grows with a, so the zero-amplitude
    // threshold gives a lower bracket.
    let mut lo = (factor * gap_threshold_at_zero(grid, params, b, zero_mean) / slope_per_a)
        .max(AMPLITUDE_TOL);
    if gap(lo) >= 0.0 {
        return Err(invalid(
            "a",
            "no positive amplitude sits on the threshold; use b > 0 or gamma != A",
        ));
    }
    let mut hi = 1.25 * lo;
    let mut growths = 0;
    while gap(hi) <= 0.0 {
        lo = hi;
        hi *= 1.25;
        growths += 1;
        if growths > 200 {
            return Err(invalid("factor", "no amplitude reaches the requested threshold factor"));
        }
    }
    let mut steps = 0;
    while hi - lo > 2.0 * AMPLITUDE_TOL * lo.max(1.0) {
        let mid = 0.5 * (lo + hi);
        if gap(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
        steps += 1;
    }
    Ok((0.5 * (lo + hi), steps))
}

/// `family` with every [`Amplitude::Auto`] replaced by the amplitude it
/// resolves to on `grid`.
pub fn resolve_family(
    family: &Family,
    grid: &Arc<PeriodicGrid>,
    params: &ModelParams,
) -> Result<Family> {
    let resolve = |a: &Amplitude, b: f64, zero_mean: bool| -> Result<Amplitude> {
        check_finite("b", b)?;
        match *a {
            Amplitude::Fixed(a) => {
                check_finite("a", a)?;
                Ok(Amplitude::Fixed(a))
            }
            Amplitude::Auto { factor } => {
                solve_amplitude(grid, params, factor, b, zero_mean).map(|(a, _)| Amplitude::Fixed(a))
            }
        }
    };
    Ok(match family {
        Family::Steepening { a, b } => Family::Steepening {
            a: resolve(a, *b, false)?,
            b: *b,
        },
        Family::ZeroMean { a, b } => Family::ZeroMean {
            a: resolve(a, *b, true)?,
            b: *b,
        },
        other => other.clone(),
    })
}

fn fixed(a: &Amplitude) -> f64 {
    match a {
        Amplitude::Fixed(a) => *a,
        Amplitude::Auto { .. } => unreachable!("amplitudes are resolved before building"),
    }
}

/// Builds `(u0, rho0)` for a family on `grid`.
pub fn build_initial_data(
    family: &Family,
    grid: &Arc<PeriodicGrid>,
    params: &ModelParams,
) -> Result<State> {
    let family = resolve_family(family, grid, params)?;
    let state = match &family {
        Family::Constant { u, rho } => {
            check_finite("u", *u)?;
            check_finite("rho", *rho)?;
            State::constant(grid, *u, *rho)
        }
        Family::Steepening { a, b } => {
            let a = fixed(a);
            State::new(
                Field::from_fn(grid, steepening_u(a)),
                Field::from_fn(grid, notch(*b)),
            )?
        }
        Family::PositiveDensity { r0, ru } => {
            check_finite("ru", *ru)?;
            if !(*r0 > 1.0 && r0.is_finite()) {
                return Err(invalid("r0", format!("must exceed 1, got {r0}")));
            }
            let (r0, ru) = (*r0, *ru);
            State::new(
                Field::from_fn(grid, steepening_u(ru)),
                Field::from_fn(grid, move |x| r0 + (2.0 * PI * x).sin()),
            )?
        }
        Family::ZeroMean { a, b } => {
            let a = fixed(a);
            State::new(
                Field::from_fn(grid, zero_mean_u(a)),
                Field::from_fn(grid, notch(*b)),
            )?
        }
        Family::CustomFourier {
            u_cos,
            u_sin,
            rho_cos,
            rho_sin,
        } => {
            // Sine lists start at k = 1, cosine lists at k = 0; the highest
            // mode must stay below the Nyquist wavenumber.
            let lists: [(&'static str, usize); 4] = [
                ("u_cos", u_cos.len().saturating_sub(1)),
                ("u_sin", u_sin.len()),
                ("rho_cos", rho_cos.len().saturating_sub(1)),
                ("rho_sin", rho_sin.len()),
            ];
            for (name, top) in lists {
                if top >= grid.n() / 2 {
                    return Err(invalid(name, format!("mode {top} is not resolved on {} nodes", grid.n())));
                }
            }
            for v in u_cos.iter().chain(u_sin).chain(rho_cos).chain(rho_sin) {
                check_finite("custom-fourier", *v)?;
            }
            State::new(
                Field::from_fn(grid, fourier(u_cos, u_sin)),
                Field::from_fn(grid, fourier(rho_cos, rho_sin)),
            )?
        }
    };
    Ok(state)
}

/// Everything needed to reproduce one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub name: String,
    pub family: Family,
    pub params: ModelParams,
    pub sim: SimConfig,
    pub eps_list: Vec<f64>,
    pub characteristics: bool,
    pub seeds: usize,
}

impl Scenario {
    pub fn new(name: impl Into<String>, family: Family, params: ModelParams, sim: SimConfig) -> Self {
        Self {
            name: name.into(),
            family,
            params,
            sim,
            eps_list: vec![0.1, 1.0, 10.0],
            characteristics: false,
            seeds: crate::characteristics::DEFAULT_SEEDS,
        }
    }
}

/// Characteristic diagnostics of a tracked run.
#[derive(Debug, Clone)]
pub struct TransportCheck {
    pub ensemble: CharacteristicEnsemble,
    pub residual: f64,
    pub monotone: bool,
    pub sign_preserved: bool,
}

/// In-memory result of [`run_scenario`].
#[derive(Debug, Clone)]
pub struct Outcome {
    /// The family with automatic amplitudes resolved.
    pub family: Family,
    pub initial: State,
    pub report: CriterionReport,
    pub result: SimResult,
    pub rate: Option<std::result::Result<RateEstimate, Error>>,
    pub lyapunov: Option<std::result::Result<LyapunovTrace, Error>>,
    pub transport: Option<TransportCheck>,
}

impl Outcome {
    /// Detection time when the run ended in blow-up.
    pub fn t_sim(&self) -> Option<f64> {
        match self.result.termination {
            Termination::BlowupDetected { t } => Some(t),
            _ => None,
        }
    }

    /// A non-finite state that was not preceded by steepening.
    pub fn numerical_fault(&self) -> bool {
        matches!(self.result.termination, Termination::NonFiniteState { .. })
            && !self.result.in_blowup_approach()
    }
}

pub fn run_scenario(sc: &Scenario) -> Result<Outcome> {
    let grid = PeriodicGrid::new(sc.sim.n)?;
    let family = resolve_family(&sc.family, &grid, &sc.params)?;
    let s0 = build_initial_data(&family, &grid, &sc.params)?;
    let report = evaluate_criteria(&s0.u, &s0.rho, &sc.params, &sc.eps_list)?;

    let (result, transport) = if sc.characteristics {
        if sc.seeds == 0 {
            return Err(invalid("seeds", "must be at least 1"));
        }
        let tracked = advect(&equispaced_seeds(sc.seeds), &s0, &sc.params, &sc.sim)?;
        let zero_tol = 1e-10 * s0.rho.max_abs().max(1e-300);
        let check = TransportCheck {
            residual: verify_density_transport(&tracked.ensemble, &tracked.rho_frames, &s0.rho)?,
            monotone: is_monotone(&tracked.ensemble),
            sign_preserved: density_sign_preserved(
                &tracked.ensemble,
                &tracked.rho_frames,
                &s0.rho,
                zero_tol,
            ),
            ensemble: tracked.ensemble,
        };
        (tracked.result, Some(check))
    } else {
        (run(&s0, &sc.params, &sc.sim)?, None)
    };

    let rate = matches!(result.termination, Termination::BlowupDetected { .. })
        .then(|| estimate_blowup_rate(&result.slope_trace));
    let lyapunov = report.predicts_global().then(|| {
        lyapunov_trace(&result.slope_trace, &s0.rho, &s0.u, report.e0, &sc.params)
    });

    Ok(Outcome {
        family,
        initial: s0,
        report,
        result,
        rate,
        lyapunov,
        transport,
    })
}
