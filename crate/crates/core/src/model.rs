//! The two-component system in nonlocal form
//!
//! ```text
//! u_t + (u - gamma) u_x = -d/dx G * (u^2 + u_x^2/2 + (gamma - A) u + rho^2/2)
//! rho_t + (u rho)_x = 0
//! ```
//!
//! together with its integral invariants.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::grid::{Field, PeriodicGrid};

/// Linear shear `A` and dispersion constant `gamma`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub shear: f64,
    pub gamma: f64,
}

impl ModelParams {
    /// Requires finite values and `shear > 0`.
    pub fn new(shear: f64, gamma: f64) -> Result<Self> {
        Self::with_override(shear, gamma, false)
    }

    /// Like [`new`](Self::new) but `allow_nonpositive_shear` admits `shear <= 0`.
    pub fn with_override(shear: f64, gamma: f64, allow_nonpositive_shear: bool) -> Result<Self> {
        if !shear.is_finite() {
            return Err(invalid("shear", "must be finite"));
        }
        if !gamma.is_finite() {
            return Err(invalid("gamma", "must be finite"));
        }
        if shear <= 0.0 && !allow_nonpositive_shear {
            return Err(invalid("shear", format!("must be positive, got {shear}")));
        }
        Ok(Self { shear, gamma })
    }

    /// `|gamma - A|`, the coefficient that enters every blow-up threshold.
    pub fn detuning(&self) -> f64 {
        (self.gamma - self.shear).abs()
    }
}

/// Velocity `u` and density `rho` on a common grid.
#[derive(Debug, Clone, PartialEq)]
pub struct State {
    pub u: Field,
    pub rho: Field,
}

impl State {
    pub fn new(u: Field, rho: Field) -> Result<Self> {
        u.same_grid(&rho)?;
        if !u.is_finite() || !rho.is_finite() {
            return Err(Error::NonFinite { context: "state" });
        }
        Ok(Self { u, rho })
    }

    pub fn constant(grid: &Arc<PeriodicGrid>, u: f64, rho: f64) -> Self {
        Self {
            u: Field::constant(grid, u),
            rho: Field::constant(grid, rho),
        }
    }

    pub fn grid(&self) -> &Arc<PeriodicGrid> {
        self.u.grid()
    }

    pub fn is_finite(&self) -> bool {
        self.u.is_finite() && self.rho.is_finite()
    }

    /// `self + h * (du, drho)`.
    pub(crate) fn axpy(&self, h: f64, du: &Field, drho: &Field) -> State {
        State {
            u: self.u.zip_with(du, |a, b| a + h * b),
            rho: self.rho.zip_with(drho, |a, b| a + h * b),
        }
    }

    pub fn sup_distance(&self, other: &State) -> f64 {
        self.u.sup_distance(&other.u).max(self.rho.sup_distance(&other.rho))
    }
}

/// Time derivatives `(u_t, rho_t)` of the nonlocal system.
pub fn rhs(s: &State, p: &ModelParams) -> Result<(Field, Field)> {
    let grid = s.grid();
    let u_hat = s.u.spectrum();
    let ux_hat = u_hat.derivative(1);
    let u = grid.pad(&u_hat);
    let ux = grid.pad(&ux_hat);
    let rho = grid.pad(&s.rho.spectrum());

    let lin = p.gamma - p.shear;
    let mut source = Vec::with_capacity(u.len());
    let mut advection = Vec::with_capacity(u.len());
    let mut flux = Vec::with_capacity(u.len());
    for i in 0..u.len() {
        source.push(u[i] * u[i] + 0.5 * ux[i] * ux[i] + lin * u[i] + 0.5 * rho[i] * rho[i]);
        advection.push((u[i] - p.gamma) * ux[i]);
        flux.push(u[i] * rho[i]);
    }

    let du = grid
        .truncate(&advection)
        .axpby(-1.0, &grid.truncate(&source).dgreen(), -1.0)
        .to_field();
    let drho = grid.truncate(&flux).derivative(1).to_field().map(|v| -v);
    if !du.is_finite() || !drho.is_finite() {
        return Err(Error::NonFinite {
            context: "right-hand side",
        });
    }
    Ok((du, drho))
}

/// Sup-norm residual of the local third-order form
/// `m_t - A u_x + u m_x + 2 u_x m + gamma u_xxx + rho rho_x` given `u_t`.
/// Used to cross-check [`rhs`] against the equation it was derived from.
pub fn local_form_residual(s: &State, p: &ModelParams, du_dt: &Field) -> f64 {
    let ux = s.u.derivative(1);
    let uxxx = s.u.derivative(3);
    let m = momentum_m(s);
    let mx = m.derivative(1);
    let mt = momentum_m(&State {
        u: du_dt.clone(),
        rho: s.rho.clone(),
    });
    let rho_x = s.rho.derivative(1);
    let residual = mt.zip_with(&ux, |a, b| a - p.shear * b)
        .zip_with(&s.u.dealiased_product(&mx), |a, b| a + b)
        .zip_with(&ux.dealiased_product(&m), |a, b| a + 2.0 * b)
        .zip_with(&uxxx, |a, b| a + p.gamma * b)
        .zip_with(&s.rho.dealiased_product(&rho_x), |a, b| a + b);
    residual.max_abs()
}

/// `m = u - u_xx`.
pub fn momentum_m(s: &State) -> Field {
    let u_hat = s.u.spectrum();
    u_hat.axpby(1.0, &u_hat.derivative(2), -1.0).to_field()
}

// Trapezoidal mean of an integrand built from padded samples of u, u_x, rho.
fn padded_integral(s: &State, integrand: impl Fn(f64, f64, f64) -> f64) -> f64 {
    let grid = s.grid();
    let u_hat = s.u.spectrum();
    let u = grid.pad(&u_hat);
    let ux = grid.pad(&u_hat.derivative(1));
    let rho = grid.pad(&s.rho.spectrum());
    let sum: f64 = (0..u.len()).map(|i| integrand(u[i], ux[i], rho[i])).sum();
    sum / u.len() as f64
}

/// `E0 = int (u^2 + u_x^2 + rho^2) dx`.
pub fn energy_e0(s: &State) -> f64 {
    padded_integral(s, |u, ux, r| u * u + ux * ux + r * r).max(0.0)
}

pub fn mean_u(s: &State) -> f64 {
    s.u.integral()
}

/// `E = 1/2 int (u^2 + u_x^2 + (rho - 1)^2) dx`.
pub fn hamiltonian_e(s: &State) -> f64 {
    0.5 * padded_integral(s, |u, ux, r| u * u + ux * ux + (r - 1.0) * (r - 1.0))
}

/// `F = 1/2 int (u^3 + u u_x^2 - A u^2 - gamma u_x^2 + 2u(rho-1) + u(rho-1)^2) dx`.
pub fn hamiltonian_f(s: &State, p: &ModelParams) -> f64 {
    0.5 * padded_integral(s, |u, ux, r| {
        let d = r - 1.0;
        u * u * u + u * ux * ux - p.shear * u * u - p.gamma * ux * ux + 2.0 * u * d + u * d * d
    })
}

/// One sample of the monitored integrals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InvariantRecord {
    pub t: f64,
    pub e0: f64,
    pub mean_u: f64,
    pub ham_e: f64,
    pub ham_f: f64,
}

impl InvariantRecord {
    pub fn measure(t: f64, s: &State, p: &ModelParams) -> Self {
        Self {
            t,
            e0: energy_e0(s),
            mean_u: mean_u(s),
            ham_e: hamiltonian_e(s),
            ham_f: hamiltonian_f(s, p),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn grid(n: usize) -> Arc<PeriodicGrid> {
        PeriodicGrid::new(n).unwrap()
    }

    fn sine_state(g: &Arc<PeriodicGrid>, rho: f64) -> State {
        State::new(
            Field::from_fn(g, |x| (2.0 * PI * x).sin()),
            Field::constant(g, rho),
        )
        .unwrap()
    }

    #[test]
    fn params_validation() {
        assert!(ModelParams::new(1.0, 0.0).is_ok());
        assert!(ModelParams::new(0.0, 0.0).is_err());
        assert!(ModelParams::new(-1.0, 0.0).is_err());
        assert!(ModelParams::with_override(-1.0, 0.0, true).is_ok());
        assert!(ModelParams::new(1.0, f64::INFINITY).is_err());
    }

    #[test]
    fn state_requires_common_grid() {
        let a = Field::zeros(&grid(8));
        let b = Field::zeros(&grid(16));
        assert!(matches!(State::new(a, b), Err(Error::GridMismatch { .. })));
    }

    #[test]
    fn rhs_vanishes_on_constants() {
        let g = grid(32);
        let p = ModelParams::new(1.3, 0.4).unwrap();
        for (c, r) in [(0.0, 0.0), (0.7, -2.0), (-1.5, 3.0)] {
            let (du, dr) = rhs(&State::constant(&g, c, r), &p).unwrap();
            assert!(du.max_abs() < 1e-13, "{c} {r}");
            assert!(dr.max_abs() < 1e-13);
        }
    }

    #[test]
    fn zero_density_stays_zero_exactly() {
        let g = grid(64);
        let p = ModelParams::new(1.0, 0.3).unwrap();
        let s = sine_state(&g, 0.0);
        let (_, dr) = rhs(&s, &p).unwrap();
        assert!(dr.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn rhs_satisfies_local_form() {
        let g = grid(64);
        let p = ModelParams::new(1.2, 0.7).unwrap();
        let s = State::new(
            Field::from_fn(&g, |x| 0.3 * (2.0 * PI * x).sin() + 0.1 * (4.0 * PI * x).cos()),
            Field::from_fn(&g, |x| 1.0 + 0.2 * (2.0 * PI * x).cos()),
        )
        .unwrap();
        let (du, _) = rhs(&s, &p).unwrap();
        let scale = momentum_m(&s).max_abs();
        assert!(local_form_residual(&s, &p, &du) < 1e-10 * scale.max(1.0));
    }

    #[test]
    fn energy_examples() {
        let g = grid(64);
        assert_eq!(energy_e0(&State::constant(&g, 0.0, 0.0)), 0.0);
        assert!((energy_e0(&State::constant(&g, 0.0, 2.0)) - 4.0).abs() < 1e-14);
        let e = energy_e0(&sine_state(&g, 0.0));
        assert!((e - (0.5 + 2.0 * PI * PI)).abs() < 1e-12);
        assert!((e - 20.239_208_9).abs() < 1e-7);
    }

    #[test]
    fn mean_examples() {
        let g = grid(32);
        assert!(mean_u(&sine_state(&g, 0.0)).abs() < 1e-16);
        assert!((mean_u(&State::constant(&g, 0.8, 0.0)) - 0.8).abs() < 1e-15);
        let s = State::new(
            Field::from_fn(&g, |x| 0.8 + 0.3 * (4.0 * PI * x).cos()),
            Field::zeros(&g),
        )
        .unwrap();
        assert!((mean_u(&s) - 0.8).abs() < 1e-15);
    }

    #[test]
    fn hamiltonian_e_examples() {
        let g = grid(32);
        assert!(hamiltonian_e(&State::constant(&g, 0.0, 1.0)).abs() < 1e-16);
        assert!((hamiltonian_e(&State::constant(&g, 0.0, 0.0)) - 0.5).abs() < 1e-15);
        let e = hamiltonian_e(&sine_state(&g, 1.0));
        assert!((e - 0.5 * (0.5 + 2.0 * PI * PI)).abs() < 1e-12);
        assert!((e - 10.119_604_5).abs() < 1e-7);
    }

    #[test]
    fn hamiltonian_f_examples() {
        let g = grid(32);
        let p = ModelParams::new(2.0, 5.0).unwrap();
        let z = State::new(Field::zeros(&g), Field::from_fn(&g, |x| (x * 9.0).sin())).unwrap();
        assert_eq!(hamiltonian_f(&z, &p), 0.0);
        assert!((hamiltonian_f(&State::constant(&g, 1.0, 1.0), &p) + 0.5).abs() < 1e-14);
        let p = ModelParams::new(1.0, 0.0).unwrap();
        assert!((hamiltonian_f(&sine_state(&g, 1.0), &p) + 0.25).abs() < 1e-14);
    }

    #[test]
    fn momentum_examples() {
        let g = grid(32);
        let m = momentum_m(&State::constant(&g, 1.7, 0.0));
        assert!(m.values().iter().all(|v| (v - 1.7).abs() < 1e-13));
        let s = State::new(Field::from_fn(&g, |x| (2.0 * PI * x).cos()), Field::zeros(&g)).unwrap();
        let m = momentum_m(&s);
        for (j, v) in m.values().iter().enumerate() {
            let e = (1.0 + 4.0 * PI * PI) * (2.0 * PI * g.node(j)).cos();
            assert!((v - e).abs() < 1e-12 * (1.0 + 4.0 * PI * PI));
        }
        let back = m.helmholtz_convolve();
        assert!(back.sup_distance(&s.u) < 1e-10);
    }
}
