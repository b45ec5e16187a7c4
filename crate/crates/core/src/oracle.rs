//! Reference computations that share no code with the spectral machinery.
//!
//! Fields are given by explicit trigonometric sums and evaluated pointwise,
//! convolutions are done by Gauss-Legendre quadrature against the closed-form
//! kernel, and the Riccati comparison ODE is integrated directly. The self
//! test and the integration tests compare the library against these.

use std::f64::consts::PI;
use std::sync::Arc;

use rand::Rng;

use crate::grid::{green_kernel, Field, PeriodicGrid};

/// `f(x) = mean + sum_k cos[k-1] cos(2 pi k x) + sin[k-1] sin(2 pi k x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct BandLimited {
    pub mean: f64,
    pub cos: Vec<f64>,
    pub sin: Vec<f64>,
}

impl BandLimited {
    /// Random field with `modes` harmonics, amplitudes decaying like `1/k`.
    pub fn random(rng: &mut impl Rng, modes: usize) -> Self {
        let mut draw = |k: usize| rng.gen_range(-1.0..1.0) / k as f64;
        let mean = draw(1);
        let cos = (1..=modes).map(&mut draw).collect();
        let sin = (1..=modes).map(&mut draw).collect();
        Self { mean, cos, sin }
    }

    pub fn modes(&self) -> usize {
        self.cos.len().max(self.sin.len())
    }

    /// Value of the `order`-th derivative at `x`.
    pub fn eval_derivative(&self, x: f64, order: u32) -> f64 {
        let mut total = if order == 0 { self.mean } else { 0.0 };
        for k in 1..=self.modes() {
            let w = 2.0 * PI * k as f64;
            let a = self.cos.get(k - 1).copied().unwrap_or(0.0);
            let b = self.sin.get(k - 1).copied().unwrap_or(0.0);
            // d/dx rotates (cos, sin) by a quarter turn.
            let phase = (w * x) + order as f64 * PI / 2.0;
            total += w.powi(order as i32) * (a * phase.cos() + b * phase.sin());
        }
        total
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.eval_derivative(x, 0)
    }

    pub fn sample(&self, grid: &Arc<PeriodicGrid>) -> Field {
        Field::from_fn(grid, |x| self.eval(x))
    }
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(points: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; points];
    let mut weights = vec![0.0; points];
    let nf = points as f64;
    for i in 0..points.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=points {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            dp = nf * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[points - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[points - 1 - i] = w;
    }
    (nodes, weights)
}

/// Composite Gauss-Legendre rule on `[a, b]`.
pub struct Quadrature {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl Quadrature {
    pub fn new(a: f64, b: f64, panels: usize, points: usize) -> Self {
        let (gx, gw) = gauss_legendre(points);
        let h = (b - a) / panels as f64;
        let mut nodes = Vec::with_capacity(panels * points);
        let mut weights = Vec::with_capacity(panels * points);
        for p in 0..panels {
            let mid = a + (p as f64 + 0.5) * h;
            for (x, w) in gx.iter().zip(&gw) {
                nodes.push(mid + 0.5 * h * x);
                weights.push(0.5 * h * w);
            }
        }
        Self { nodes, weights }
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&x, &w)| w * f(x)).sum()
    }
}

/// `(G * f)(x) = int_0^1 G(s) f(x - s) ds`. The kernel is smooth on the
/// open interval, so the quadrature never straddles its kink.
pub fn kernel_convolution(f: &BandLimited, x: f64, quad: &Quadrature) -> f64 {
    quad.integrate(|s| green_kernel(s) * f.eval(x - s))
}

/// Default rule for [`kernel_convolution`] on fields with up to ~32 modes.
pub fn kernel_quadrature() -> Quadrature {
    Quadrature::new(0.0, 1.0, 64, 12)
}

/// Fourth-order centred finite difference of periodic samples.
pub fn finite_difference(values: &[f64], spacing: f64) -> Vec<f64> {
    let n = values.len();
    let at = |i: isize| values[i.rem_euclid(n as isize) as usize];
    (0..n as isize)
        .map(|i| (-at(i + 2) + 8.0 * at(i + 1) - 8.0 * at(i - 1) + at(i - 2)) / (12.0 * spacing))
        .collect()
}

/// Time at which the solution of `y' = -C y^2 + K`, `y(0) = y0 < 0`, first
/// reaches `ceiling`, or `None` if it has not by `t_max`.
///
/// Integrated in `s` with `dt = h ds / (1 + |y|)`, so that the steps shrink
/// as the solution runs away.
pub fn riccati_crossing(c: f64, k: f64, y0: f64, ceiling: f64, t_max: f64) -> Option<f64> {
    let f = |y: f64| -c * y * y + k;
    // Rescaled system: dy/ds = f / (1 + |y|), dt/ds = 1 / (1 + |y|).
    let g = |y: f64| {
        let r = 1.0 / (1.0 + y.abs());
        (f(y) * r, r)
    };
    let h = 1e-3 / (1.0 + c);
    let (mut y, mut t) = (y0, 0.0);
    while t < t_max {
        let (k1y, k1t) = g(y);
        let (k2y, k2t) = g(y + 0.5 * h * k1y);
        let (k3y, k3t) = g(y + 0.5 * h * k2y);
        let (k4y, k4t) = g(y + h * k3y);
        let yn = y + h / 6.0 * (k1y + 2.0 * k2y + 2.0 * k3y + k4y);
        let tn = t + h / 6.0 * (k1t + 2.0 * k2t + 2.0 * k3t + k4t);
        if yn <= ceiling {
            // Linear interpolation in 1/y, which is close to linear near blow-up.
            let (a, b) = (1.0 / y, 1.0 / yn);
            let frac = (1.0 / ceiling - a) / (b - a);
            return Some(t + frac * (tn - t));
        }
        y = yn;
        t = tn;
    }
    None
}
