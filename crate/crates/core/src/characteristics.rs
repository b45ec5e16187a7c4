//! Particle paths `q_t = u(t, q)`, `q(0, x0) = x0`, and their Jacobians.
//!
//! The Jacobian is carried in logarithmic form, `log q_x(t) = int_0^t
//! u_x(s, q(s)) ds`, integrated with the same RK4 stages as the field so that
//! `q_x = exp(log q_x)` stays positive by construction. Along each path the
//! density obeys `rho(t, q) q_x = rho0(x0)`.

use crate::error::{invalid, Result};
use crate::grid::Field;
use crate::model::{ModelParams, State};
use crate::timestepper::{integrate, Passenger, SimConfig, SimResult};

/// Default ensemble size.
pub const DEFAULT_SEEDS: usize = 64;

/// Recorded trajectories; row `i` of each matrix belongs to `times[i]`.
/// Positions are unwrapped (not reduced mod 1).
#[derive(Debug, Clone, PartialEq)]
pub struct CharacteristicEnsemble {
    pub seeds: Vec<f64>,
    pub times: Vec<f64>,
    pub q: Vec<Vec<f64>>,
    pub qx: Vec<Vec<f64>>,
    pub log_qx: Vec<Vec<f64>>,
}

/// A field run together with the characteristics advected alongside it and
/// the density at every ensemble record time.
#[derive(Debug, Clone)]
pub struct TrackedRun {
    pub result: SimResult,
    pub ensemble: CharacteristicEnsemble,
    pub rho_frames: Vec<Field>,
}

pub fn equispaced_seeds(count: usize) -> Vec<f64> {
    (0..count).map(|i| i as f64 / count as f64).collect()
}

struct Flow;

impl Passenger for Flow {
    fn derivative(&self, stage: &State, y: &[f64]) -> Vec<f64> {
        let k = y.len() / 2;
        let u = stage.u.spectrum();
        let ux = u.derivative(1);
        let mut out = Vec::with_capacity(y.len());
        out.extend(y[..k].iter().map(|&q| u.eval(q)));
        out.extend(y[..k].iter().map(|&q| ux.eval(q)));
        out
    }
}

/// Runs the field and the characteristics from `seeds` together.
pub fn advect(seeds: &[f64], s0: &State, p: &ModelParams, c: &SimConfig) -> Result<TrackedRun> {
    if seeds.iter().any(|&x| !(0.0..1.0).contains(&x)) {
        return Err(invalid("seeds", "must lie in [0, 1)"));
    }
    if seeds.windows(2).any(|w| w[0] >= w[1]) {
        return Err(invalid("seeds", "must be strictly increasing"));
    }
    let k = seeds.len();
    let mut y0 = seeds.to_vec();
    y0.extend(std::iter::repeat_n(0.0, k));

    let mut ensemble = CharacteristicEnsemble {
        seeds: seeds.to_vec(),
        times: Vec::new(),
        q: Vec::new(),
        qx: Vec::new(),
        log_qx: Vec::new(),
    };
    let mut rho_frames = Vec::new();
    let result = integrate(s0, p, c, &Flow, y0, |t, state, y| {
        ensemble.times.push(t);
        ensemble.q.push(y[..k].to_vec());
        ensemble.log_qx.push(y[k..].to_vec());
        ensemble.qx.push(y[k..].iter().map(|l| l.exp()).collect());
        rho_frames.push(state.rho.clone());
    })?;
    Ok(TrackedRun {
        result,
        ensemble,
        rho_frames,
    })
}

/// `max |rho(t, q(t, x0)) q_x(t, x0) - rho0(x0)|` over all recorded times
/// and seeds.
pub fn verify_density_transport(
    e: &CharacteristicEnsemble,
    rho_frames: &[Field],
    rho0: &Field,
) -> Result<f64> {
    if rho_frames.len() != e.times.len() {
        return Err(invalid("rho_frames", "must match the ensemble record times"));
    }
    let rho0_spec = rho0.spectrum();
    let initial: Vec<f64> = e.seeds.iter().map(|&x| rho0_spec.eval(x)).collect();
    let mut worst: f64 = 0.0;
    for (i, rho) in rho_frames.iter().enumerate() {
        let spec = rho.spectrum();
        for (j, &r0) in initial.iter().enumerate() {
            let r = spec.eval(e.q[i][j]) * e.qx[i][j];
            worst = worst.max((r - r0).abs());
        }
    }
    Ok(worst)
}

/// Whether `q(t, .)` stays strictly increasing across the seeds, including
/// the wrap from the last seed to the first one shifted by a period.
pub fn is_monotone(e: &CharacteristicEnsemble) -> bool {
    e.q.iter().all(|row| {
        row.windows(2).all(|w| w[0] < w[1])
            && row.first().zip(row.last()).is_none_or(|(a, b)| *b < a + 1.0)
    })
}

/// Whether `rho(t, q(t, x0))` keeps the sign of `rho0(x0)` (zero stays zero
/// to within `zero_tol`).
pub fn density_sign_preserved(
    e: &CharacteristicEnsemble,
    rho_frames: &[Field],
    rho0: &Field,
    zero_tol: f64,
) -> bool {
    let rho0_spec = rho0.spectrum();
    let initial: Vec<f64> = e.seeds.iter().map(|&x| rho0_spec.eval(x)).collect();
    rho_frames.iter().enumerate().all(|(i, rho)| {
        let spec = rho.spectrum();
        initial.iter().enumerate().all(|(j, &r0)| {
            let r = spec.eval(e.q[i][j]);
            if r0.abs() <= zero_tol {
                r.abs() <= zero_tol
            } else {
                r.signum() == r0.signum() && r != 0.0
            }
        })
    })
}
