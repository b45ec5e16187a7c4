//! Blow-up thresholds, Riccati comparison bounds, the blow-up rate fit and
//! the Lyapunov monitor for non-vanishing density.
//!
//! Every threshold has the form `-sqrt(2K)` where `K` bounds the forcing in
//! the slope inequality `m' <= -m^2/2 + K` for `m(t) = min_x u_x(t, x)`.
//! Three variants of `K` are provided, differing in how `|u|` is bounded:
//!
//! * [`k_sobolev`] uses the sharp embedding `max f^2 <= C ||f||_{H^1}^2`
//!   with `C = (e + 1) / (2 (e - 1))`;
//! * [`k_mean_aware`] uses the mean-aware bound with a free parameter `eps`
//!   and the mean `a0 / 2` of `u0`;
//! * [`k_zero_mean`] is the `a0 = 0`, `eps -> 0` limit of the previous one.

use std::f64::consts::E;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::grid::{Field, Spectrum};
use crate::model::{energy_e0, ModelParams, State};

/// Sharp constant `(e + 1) / (2 (e - 1))`; also equals `G(0)`.
pub const SOBOLEV_CONSTANT: f64 = (E + 1.0) / (2.0 * (E - 1.0));

/// Relative tolerance for "rho0 vanishes at the steepest point".
pub const VANISHING_TOL: f64 = 1e-10;

/// Minimum number of samples for [`estimate_blowup_rate`].
pub const MIN_FIT_SAMPLES: usize = 10;

/// Steepest-descent point of `u_x`: `m = u_x(xi)` and `alpha = rho(xi)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlopeSample {
    pub m: f64,
    pub xi: f64,
    pub alpha: f64,
}

/// Locates `min_x u_x`: the minimizing node, refined by a parabola through it
/// and its two neighbours. The refined point is kept only if the
/// interpolated slope there is lower than the node value, so `m` never
/// exceeds `u_x` at any node. Flat slopes resolve to the first node.
pub fn track_slope(s: &State) -> SlopeSample {
    let ux_hat = s.u.spectrum().derivative(1);
    let ux = ux_hat.to_field();
    let (xi, m) = refined_min(&ux, &ux_hat);
    SlopeSample {
        m,
        xi,
        alpha: s.rho.interpolate(xi),
    }
}

fn refined_min(f: &Field, spec: &Spectrum) -> (f64, f64) {
    let v = f.values();
    let n = v.len();
    let h = 1.0 / n as f64;
    let (lo, hi) = (f.min(), f.max());
    let tol = 64.0 * f64::EPSILON * f.max_abs().max(1.0);
    if hi - lo <= tol {
        return (0.0, v[0]);
    }
    let j = v.iter().position(|&x| x == lo).unwrap_or(0);
    let fm = v[(j + n - 1) % n];
    let fp = v[(j + 1) % n];
    let curv = fm - 2.0 * lo + fp;
    if curv <= tol {
        return (j as f64 * h, lo);
    }
    let delta = (0.5 * (fm - fp) / curv).clamp(-0.5, 0.5);
    let x = ((j as f64 + delta) * h).rem_euclid(1.0);
    let val = spec.eval(x);
    if val < lo {
        (x, val)
    } else {
        (j as f64 * h, lo)
    }
}

/// Time series of [`SlopeSample`]s.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SlopeTrace {
    pub times: Vec<f64>,
    pub m: Vec<f64>,
    pub xi: Vec<f64>,
    pub alpha: Vec<f64>,
}

impl SlopeTrace {
    pub fn push(&mut self, t: f64, s: SlopeSample) {
        self.times.push(t);
        self.m.push(s.m);
        self.xi.push(s.xi);
        self.alpha.push(s.alpha);
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn sample(&self, i: usize) -> SlopeSample {
        SlopeSample {
            m: self.m[i],
            xi: self.xi[i],
            alpha: self.alpha[i],
        }
    }
}

fn check_e0(e0: f64) {
    assert!(e0 >= 0.0, "energy must be non-negative, got {e0}");
}

/// `K = C E0 / 2 + 2 |gamma - A| sqrt(C) sqrt(E0)` with the sharp constant `C`.
pub fn k_sobolev(e0: f64, gamma: f64, shear: f64) -> f64 {
    check_e0(e0);
    let c = SOBOLEV_CONSTANT;
    0.5 * c * e0 + 2.0 * (gamma - shear).abs() * c.sqrt() * e0.sqrt()
}

/// `-sqrt(2C E0 + |gamma - A| sqrt(16 C) sqrt(E0))`, i.e. `-sqrt(2 K)`.
pub fn threshold_sobolev(e0: f64, gamma: f64, shear: f64) -> f64 {
    check_e0(e0);
    let r = (E + 1.0) / (E - 1.0);
    -((0.5 * r * e0) + (gamma - shear).abs() * (8.0 * r).sqrt() * e0.sqrt()).sqrt()
}

fn check_eps(eps: f64) -> Result<()> {
    if eps > 0.0 && eps.is_finite() {
        Ok(())
    } else {
        Err(invalid("eps", format!("must be positive and finite, got {eps}")))
    }
}

/// Mean-aware `K`; `a0` is twice the mean of `u0`.
pub fn k_mean_aware(e0: f64, a0: f64, eps: f64, gamma: f64, shear: f64) -> Result<f64> {
    check_e0(e0);
    check_eps(eps)?;
    let q = eps + 2.0;
    let a2 = a0 * a0;
    Ok(q / 48.0 * e0
        + q / (8.0 * eps) * a2
        + (gamma - shear).abs() * (q / 6.0 * e0 + q / eps * a2).sqrt())
}

/// Mean-aware threshold, evaluated in its own closed form (not via `K`).
pub fn threshold_mean_aware(e0: f64, a0: f64, eps: f64, gamma: f64, shear: f64) -> Result<f64> {
    check_e0(e0);
    check_eps(eps)?;
    let q = eps + 2.0;
    let a2 = a0 * a0;
    let inner = 2.0 * q / 3.0 * e0 + 4.0 * q / eps * a2;
    Ok(-(q / 24.0 * e0 + q / (4.0 * eps) * a2 + (gamma - shear).abs() * inner.sqrt()).sqrt())
}

/// `K` of the zero-mean limit: `E0 / 24 + |gamma - A| sqrt(E0 / 3)`.
pub fn k_zero_mean(e0: f64, gamma: f64, shear: f64) -> f64 {
    check_e0(e0);
    e0 / 24.0 + (gamma - shear).abs() * (e0 / 3.0).sqrt()
}

/// `-sqrt(E0 / 12 + 2 |gamma - A| sqrt(E0 / 3))`.
pub fn threshold_zero_mean(e0: f64, gamma: f64, shear: f64) -> f64 {
    check_e0(e0);
    -(e0 / 12.0 + 2.0 * (gamma - shear).abs() * (e0 / 3.0).sqrt()).sqrt()
}

/// Time before which a solution of `y' <= -C y^2 + K`, `y(0) = y0`, reaches
/// `-infinity`: `1 / (-C y0 + K / y0)`. Requires `y0 < -sqrt(K / C)`.
pub fn riccati_bound(c: f64, k: f64, y0: f64) -> Result<f64> {
    if !(c > 0.0) {
        return Err(invalid("c", format!("must be positive, got {c}")));
    }
    if !(k >= 0.0) {
        return Err(invalid("k", format!("must be non-negative, got {k}")));
    }
    if !(y0 < -(k / c).sqrt()) {
        return Err(Error::HypothesisViolated(format!(
            "y0 = {y0} is not below -sqrt(K/C) = {}",
            -(k / c).sqrt()
        )));
    }
    Ok(1.0 / (-c * y0 + k / y0))
}

/// Blow-up time bound `2 m0 / (2K - m0^2)` for `m' <= -m^2/2 + K`.
pub fn blowup_time_bound(m0: f64, k: f64) -> Result<f64> {
    if !(k >= 0.0) {
        return Err(invalid("k", format!("must be non-negative, got {k}")));
    }
    if !(m0 < -(2.0 * k).sqrt()) {
        return Err(Error::HypothesisViolated(format!(
            "initial slope {m0} is not below -sqrt(2K) = {}",
            -(2.0 * k).sqrt()
        )));
    }
    Ok(2.0 * m0 / (2.0 * k - m0 * m0))
}

/// Least-squares fit of `-1/m(t)` against `t` near blow-up.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateEstimate {
    /// Root of the fitted line.
    pub t_blowup: f64,
    /// `lim (T - t) m(t)`; the asymptotic theory predicts `-2`.
    pub rate: f64,
    /// Coefficient of determination of the linear fit.
    pub fit_quality: f64,
    pub samples: usize,
}

/// Fits `y = -1/m` on the trailing samples where `m` lies within one decade
/// of its final value (`m <= m_end / 10`, all negative). If `y ~ s (T - t)`
/// then `T` is the root of the fit and the rate is `-1/s`.
pub fn estimate_blowup_rate(trace: &SlopeTrace) -> Result<RateEstimate> {
    let insufficient = |found| Error::InsufficientWindow {
        found,
        needed: MIN_FIT_SAMPLES,
    };
    let m_end = match trace.m.last() {
        Some(&m) if m < 0.0 => m,
        _ => return Err(insufficient(0)),
    };
    let cut = m_end / 10.0;
    let start = trace
        .m
        .iter()
        .rposition(|&m| !(m < 0.0 && m <= cut))
        .map_or(0, |i| i + 1);
    let count = trace.len() - start;
    if count < MIN_FIT_SAMPLES {
        return Err(insufficient(count));
    }
    let t = &trace.times[start..];
    let y: Vec<f64> = trace.m[start..].iter().map(|m| -1.0 / m).collect();
    let nf = count as f64;
    let t_mean = t.iter().sum::<f64>() / nf;
    let y_mean = y.iter().sum::<f64>() / nf;
    let (mut stt, mut sty, mut syy) = (0.0, 0.0, 0.0);
    for (ti, yi) in t.iter().zip(&y) {
        let (dt, dy) = (ti - t_mean, yi - y_mean);
        stt += dt * dt;
        sty += dt * dy;
        syy += dy * dy;
    }
    let slope = sty / stt;
    let t_blowup = t_mean - y_mean / slope;
    let fit_quality = if syy > 0.0 {
        sty * sty / (stt * syy)
    } else {
        1.0
    };
    Ok(RateEstimate {
        t_blowup,
        rate: 1.0 / slope,
        fit_quality,
        samples: count,
    })
}

/// Lyapunov function `w(t) = a0 a(t) + (a0 / a(t)) (1 + m(t)^2)` along a
/// slope trace, with `a(t) = rho(t, xi(t))`, and the growth envelope
/// `c2 / (2 beta) exp((c1 + 1/2) t)` that bounds `|m(t)|`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LyapunovTrace {
    pub times: Vec<f64>,
    pub w: Vec<f64>,
    pub envelope: Vec<f64>,
    pub beta: f64,
    pub c1: f64,
    pub c2: f64,
    /// Indices where `|m| > envelope`.
    pub violations: Vec<usize>,
}

impl LyapunovTrace {
    pub fn holds(&self) -> bool {
        self.violations.is_empty()
    }
}

/// `c1 = C E0 + 2 |gamma - A| sqrt(C E0) + G(0) E0`, the growth rate of the
/// Lyapunov function apart from the `1/2` contributed by `w` itself.
pub fn lyapunov_c1(e0: f64, gamma: f64, shear: f64) -> f64 {
    check_e0(e0);
    let c = SOBOLEV_CONSTANT;
    let g_max = 0.5f64.cosh() / (2.0 * 0.5f64.sinh());
    c * e0 + 2.0 * (gamma - shear).abs() * c.sqrt() * e0.sqrt() + g_max * e0
}

pub fn lyapunov_trace(
    trace: &SlopeTrace,
    rho0: &Field,
    u0: &Field,
    e0: f64,
    params: &ModelParams,
) -> Result<LyapunovTrace> {
    rho0.same_grid(u0)?;
    let beta = rho0.values().iter().fold(f64::INFINITY, |m, v| m.min(v.abs()));
    if !(beta > 0.0) {
        return Err(Error::HypothesisViolated(
            "initial density vanishes at a node".into(),
        ));
    }
    if trace.is_empty() {
        return Err(Error::InsufficientWindow { found: 0, needed: 1 });
    }
    let c1 = lyapunov_c1(e0, params.gamma, params.shear);
    let ux0 = u0.derivative(1);
    let c2 = rho0.max_abs().powi(2) + 1.0 + ux0.max_abs().powi(2);
    let a0 = trace.alpha[0];
    let mut w = Vec::with_capacity(trace.len());
    let mut envelope = Vec::with_capacity(trace.len());
    let mut violations = Vec::new();
    for i in 0..trace.len() {
        let (t, a, m) = (trace.times[i], trace.alpha[i], trace.m[i]);
        if !(a * a0 > 0.0) {
            return Err(Error::SignChange { t });
        }
        w.push(a0 * a + a0 / a * (1.0 + m * m));
        let env = c2 / (2.0 * beta) * ((c1 + 0.5) * t).exp();
        if m.abs() > env {
            violations.push(i);
        }
        envelope.push(env);
    }
    Ok(LyapunovTrace {
        times: trace.times.clone(),
        w,
        envelope,
        beta,
        c1,
        c2,
        violations,
    })
}

/// `max f^2 / ||f||_{H^1}^2` for the piecewise-linear interpolant of the
/// samples. That interpolant attains its maximum at a node and its `H^1`
/// norm is exact, so the ratio never exceeds [`SOBOLEV_CONSTANT`] for any
/// sample vector, and it converges to the constant at second order for
/// samples of the Green's kernel.
pub fn sobolev_sharp_check(f: &Field) -> Result<f64> {
    let v = f.values();
    let n = v.len();
    let mut l2 = 0.0;
    let mut dx2 = 0.0;
    for j in 0..n {
        let (a, b) = (v[j], v[(j + 1) % n]);
        l2 += (a * a + a * b + b * b) / 3.0;
        dx2 += (b - a) * (b - a);
    }
    let norm = l2 / n as f64 + dx2 * n as f64;
    if norm == 0.0 {
        return Err(Error::ZeroField);
    }
    Ok(f.max_abs().powi(2) / norm)
}

/// Margin `(eps+2)/24 int f_x^2 + (eps+2)/(4 eps) a0^2 - max f^2` with
/// `a0 = 2 int f`. Non-negative for every periodic `f`.
///
/// `int f_x^2` is exact for the trigonometric interpolant; `max f^2` is taken
/// over the nodes with a parabolic refinement.
pub fn poincare_check(f: &Field, eps: f64) -> Result<f64> {
    check_eps(eps)?;
    let spec = f.spectrum();
    let grid = f.grid();
    let fx = grid.pad(&spec.derivative(1));
    let fx2 = fx.iter().map(|v| v * v).sum::<f64>() / fx.len() as f64;
    let a0 = 2.0 * f.integral();
    let q = eps + 2.0;
    let rhs = q / 24.0 * fx2 + q / (4.0 * eps) * a0 * a0;
    Ok(rhs - refined_max_sq(f, &spec))
}

fn refined_max_sq(f: &Field, spec: &Spectrum) -> f64 {
    let sq = f.map(|v| -v * v);
    let (x, _) = refined_min(&sq, &sq.spectrum());
    f.max_abs().powi(2).max(spec.eval(x).powi(2))
}

/// Which conclusion a criterion supports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Prediction {
    BlowupPredicted,
    GlobalPredicted,
    NoPrediction,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub criterion: String,
    pub hypothesis_met: bool,
    pub predicted: Prediction,
    /// Upper bound on the blow-up time when a blow-up hypothesis holds.
    pub time_bound: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanAwareThreshold {
    pub eps: f64,
    pub threshold: f64,
    pub k: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    pub sobolev: f64,
    pub zero_mean: f64,
    pub mean_aware: Vec<MeanAwareThreshold>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KValues {
    pub sobolev: f64,
    pub zero_mean: f64,
}

/// Thresholds, constants and per-criterion verdicts for one initial datum.
///
/// `a0` follows the convention `int u0 = a0 / 2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriterionReport {
    pub e0: f64,
    pub a0: f64,
    /// Refined `min u0'` and its location.
    pub m0: f64,
    pub xi0: f64,
    pub rho0_at_xi0: f64,
    pub min_abs_rho0: f64,
    pub thresholds: Thresholds,
    pub k_values: KValues,
    /// Smallest time bound among the blow-up criteria whose hypotheses hold.
    pub riccati_t: Option<f64>,
    pub verdicts: Vec<Verdict>,
}

impl CriterionReport {
    pub fn verdict(&self, criterion: &str) -> Option<&Verdict> {
        self.verdicts.iter().find(|v| v.criterion == criterion)
    }

    pub fn predicts_blowup(&self) -> bool {
        self.verdicts
            .iter()
            .any(|v| v.predicted == Prediction::BlowupPredicted)
    }

    pub fn predicts_global(&self) -> bool {
        self.verdicts
            .iter()
            .any(|v| v.predicted == Prediction::GlobalPredicted)
    }
}

pub const SOBOLEV: &str = "sobolev";
pub const ZERO_MEAN: &str = "zero_mean";
pub const NONVANISHING_DENSITY: &str = "nonvanishing_density";

pub fn mean_aware_name(eps: f64) -> String {
    format!("mean_aware(eps={eps})")
}

/// Evaluates all thresholds for `(u0, rho0)` and checks each hypothesis:
/// `rho0` vanishing at the steepest point of `u0`, the slope being below the
/// threshold, a zero mean where required, and `rho0` never vanishing.
pub fn evaluate_criteria(
    u0: &Field,
    rho0: &Field,
    params: &ModelParams,
    eps_list: &[f64],
) -> Result<CriterionReport> {
    for &eps in eps_list {
        check_eps(eps)?;
    }
    let s0 = State::new(u0.clone(), rho0.clone())?;
    let (gamma, shear) = (params.gamma, params.shear);
    let e0 = energy_e0(&s0);
    let a0 = 2.0 * u0.integral();
    let slope = track_slope(&s0);
    let m0 = slope.m;
    let rho_max = rho0.max_abs();
    let vanishes = slope.alpha.abs() <= VANISHING_TOL * rho_max;
    let min_abs_rho0 = rho0.values().iter().fold(f64::INFINITY, |m, v| m.min(v.abs()));
    let one_signed = rho0.values().iter().all(|&v| v > 0.0)
        || rho0.values().iter().all(|&v| v < 0.0);
    let nonvanishing = one_signed && min_abs_rho0 > VANISHING_TOL * rho_max;
    let zero_mean = a0.abs() <= VANISHING_TOL * u0.max_abs().max(1.0);

    let blowup_verdict = |name: String, threshold: f64, k: f64, extra: bool| {
        let met = extra && vanishes && m0 < threshold;
        Verdict {
            criterion: name,
            hypothesis_met: met,
            predicted: if met {
                Prediction::BlowupPredicted
            } else {
                Prediction::NoPrediction
            },
            time_bound: if met {
                blowup_time_bound(m0, k).ok()
            } else {
                None
            },
        }
    };

    let sobolev = threshold_sobolev(e0, gamma, shear);
    let k_sob = k_sobolev(e0, gamma, shear);
    let zm = threshold_zero_mean(e0, gamma, shear);
    let k_zm = k_zero_mean(e0, gamma, shear);
    let mut verdicts = vec![blowup_verdict(SOBOLEV.into(), sobolev, k_sob, true)];
    let mut mean_aware = Vec::with_capacity(eps_list.len());
    for &eps in eps_list {
        let threshold = threshold_mean_aware(e0, a0, eps, gamma, shear)?;
        let k = k_mean_aware(e0, a0, eps, gamma, shear)?;
        mean_aware.push(MeanAwareThreshold { eps, threshold, k });
        verdicts.push(blowup_verdict(mean_aware_name(eps), threshold, k, true));
    }
    verdicts.push(blowup_verdict(ZERO_MEAN.into(), zm, k_zm, zero_mean));
    verdicts.push(Verdict {
        criterion: NONVANISHING_DENSITY.into(),
        hypothesis_met: nonvanishing,
        predicted: if nonvanishing {
            Prediction::GlobalPredicted
        } else {
            Prediction::NoPrediction
        },
        time_bound: None,
    });
    let riccati_t = verdicts
        .iter()
        .filter_map(|v| v.time_bound)
        .fold(None, |acc: Option<f64>, t| Some(acc.map_or(t, |a| a.min(t))));

    Ok(CriterionReport {
        e0,
        a0,
        m0,
        xi0: slope.xi,
        rho0_at_xi0: slope.alpha,
        min_abs_rho0,
        thresholds: Thresholds {
            sobolev,
            zero_mean: zm,
            mean_aware,
        },
        k_values: KValues {
            sobolev: k_sob,
            zero_mean: k_zm,
        },
        riccati_t,
        verdicts,
    })
}
