//! Periodic grid on the unit circle and the spectral operators built on it.
//!
//! A [`Field`] holds samples `f(x_j)` at the nodes `x_j = j/n`. Its
//! [`Spectrum`] holds normalized Fourier coefficients `c_k` such that
//!
//! ```text
//! f(x) = sum_k c_k exp(2 pi i k x),   k = -n/2 .. n/2 - 1
//! ```
//!
//! The Nyquist coefficient `c_{-n/2}` is real for real fields and is
//! interpreted as the amplitude of `cos(pi n x)`; it is discarded by odd
//! order operators so their output stays real.
//!
//! The Green's kernel `G` of `1 - d^2/dx^2` on the circle acts diagonally:
//! mode `k` is multiplied by `1 / (1 + 4 pi^2 k^2)`.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

/// Equispaced nodes `j/n` on `[0, 1)` together with the transform plans for
/// `n` points and for the `2n`-point padded grid used to dealias products.
pub struct PeriodicGrid {
    n: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    forward_padded: Arc<dyn Fft<f64>>,
    inverse_padded: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for PeriodicGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PeriodicGrid").field("n", &self.n).finish()
    }
}

impl PartialEq for PeriodicGrid {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n
    }
}

impl PeriodicGrid {
    /// Builds a grid of `n` nodes. `n` must be even and at least 8.
    pub fn new(n: usize) -> Result<Arc<Self>> {
        if n < 8 || !n.is_multiple_of(2) {
            return Err(Error::InvalidGrid { n });
        }
        let mut planner = FftPlanner::new();
        Ok(Arc::new(Self {
            n,
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
            forward_padded: planner.plan_fft_forward(2 * n),
            inverse_padded: planner.plan_fft_inverse(2 * n),
        }))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn spacing(&self) -> f64 {
        1.0 / self.n as f64
    }

    pub fn node(&self, j: usize) -> f64 {
        j as f64 / self.n as f64
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n).map(|j| self.node(j)).collect()
    }

    /// Signed wavenumber stored at transform index `j`. Index `n/2` is the
    /// Nyquist mode and reports `-n/2`.
    pub fn wavenumber(&self, j: usize) -> i64 {
        let n = self.n as i64;
        let j = j as i64;
        if j < n / 2 {
            j
        } else {
            j - n
        }
    }

    fn transform(&self, values: &[f64]) -> Vec<Complex64> {
        let mut buf: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.forward.process(&mut buf);
        let scale = 1.0 / self.n as f64;
        buf.iter_mut().for_each(|c| *c *= scale);
        buf
    }

    fn synthesize(&self, coeffs: &[Complex64]) -> Vec<f64> {
        let mut buf = coeffs.to_vec();
        self.inverse.process(&mut buf);
        buf.iter().map(|c| c.re).collect()
    }

    /// Values of the trigonometric interpolant of `spec` on the `2n` padded
    /// grid. The Nyquist coefficient is split evenly between `+-n/2`.
    pub(crate) fn pad(&self, spec: &Spectrum) -> Vec<f64> {
        let n = self.n;
        let half = n / 2;
        let mut buf = vec![Complex64::new(0.0, 0.0); 2 * n];
        buf[..half].copy_from_slice(&spec.coeffs[..half]);
        buf[n + half + 1..].copy_from_slice(&spec.coeffs[half + 1..]);
        let nyq = Complex64::new(0.5 * spec.coeffs[half].re, 0.0);
        buf[half] = nyq;
        buf[n + half] = nyq;
        self.inverse_padded.process(&mut buf);
        buf.iter().map(|c| c.re).collect()
    }

    /// Inverse of [`pad`](Self::pad): transforms `2n` padded samples and keeps
    /// the modes representable on the `n` grid.
    pub(crate) fn truncate(self: &Arc<Self>, padded: &[f64]) -> Spectrum {
        let n = self.n;
        let half = n / 2;
        debug_assert_eq!(padded.len(), 2 * n);
        let mut buf: Vec<Complex64> = padded.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.forward_padded.process(&mut buf);
        let scale = 1.0 / (2 * n) as f64;
        let mut coeffs = vec![Complex64::new(0.0, 0.0); n];
        coeffs[..half].copy_from_slice(&buf[..half]);
        coeffs[half + 1..].copy_from_slice(&buf[n + half + 1..]);
        coeffs[half] = Complex64::new(buf[half].re + buf[n + half].re, 0.0);
        coeffs.iter_mut().for_each(|c| *c *= scale);
        Spectrum {
            grid: Arc::clone(self),
            coeffs,
        }
    }
}

/// Samples of a periodic real function at the grid nodes.
#[derive(Debug, Clone)]
pub struct Field {
    grid: Arc<PeriodicGrid>,
    values: Vec<f64>,
}

impl PartialEq for Field {
    fn eq(&self, other: &Self) -> bool {
        self.grid == other.grid && self.values == other.values
    }
}

impl Field {
    /// Wraps samples, rejecting wrong lengths and non-finite values.
    pub fn new(grid: &Arc<PeriodicGrid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.n() {
            return Err(Error::LengthMismatch {
                expected: grid.n(),
                got: values.len(),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                context: "field samples",
            });
        }
        Ok(Self::from_raw(grid, values))
    }

    pub(crate) fn from_raw(grid: &Arc<PeriodicGrid>, values: Vec<f64>) -> Self {
        Self {
            grid: Arc::clone(grid),
            values,
        }
    }

    pub fn from_fn(grid: &Arc<PeriodicGrid>, f: impl Fn(f64) -> f64) -> Self {
        Self::from_raw(grid, grid.nodes().into_iter().map(f).collect())
    }

    pub fn constant(grid: &Arc<PeriodicGrid>, c: f64) -> Self {
        Self::from_raw(grid, vec![c; grid.n()])
    }

    pub fn zeros(grid: &Arc<PeriodicGrid>) -> Self {
        Self::constant(grid, 0.0)
    }

    pub fn grid(&self) -> &Arc<PeriodicGrid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn same_grid(&self, other: &Field) -> Result<()> {
        if self.grid == other.grid {
            Ok(())
        } else {
            Err(Error::GridMismatch {
                left: self.grid.n(),
                right: other.grid.n(),
            })
        }
    }

    pub fn spectrum(&self) -> Spectrum {
        Spectrum {
            grid: Arc::clone(&self.grid),
            coeffs: self.grid.transform(&self.values),
        }
    }

    /// Spectral derivative of order 1, 2 or 3.
    pub fn derivative(&self, order: u32) -> Field {
        self.spectrum().derivative(order).to_field()
    }

    /// `G * f`, i.e. `(1 - d^2/dx^2)^{-1} f`.
    pub fn helmholtz_convolve(&self) -> Field {
        self.spectrum().helmholtz().to_field()
    }

    /// `d/dx (G * f)`.
    pub fn dgreen_convolve(&self) -> Field {
        self.spectrum().dgreen().to_field()
    }

    /// Trigonometric interpolant evaluated at `x` (taken mod 1).
    pub fn interpolate(&self, x: f64) -> f64 {
        self.spectrum().eval(x)
    }

    /// Integral over one period by the uniform trapezoidal rule.
    pub fn integral(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Field {
        Self::from_raw(&self.grid, self.values.iter().map(|&v| f(v)).collect())
    }

    /// Pointwise combination of two fields on the same grid (no dealiasing).
    pub fn zip_with(&self, other: &Field, f: impl Fn(f64, f64) -> f64) -> Field {
        assert_eq!(self.grid, other.grid, "zip_with across grids");
        Self::from_raw(
            &self.grid,
            self.values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        )
    }

    /// Product `f g` with the quadratic aliasing removed by zero padding.
    pub fn dealiased_product(&self, other: &Field) -> Field {
        assert_eq!(self.grid, other.grid, "product across grids");
        let a = self.grid.pad(&self.spectrum());
        let b = self.grid.pad(&other.spectrum());
        let prod: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x * y).collect();
        self.grid.truncate(&prod).to_field()
    }

    /// Sup-norm distance to another field on the same grid.
    pub fn sup_distance(&self, other: &Field) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    /// Cyclic shift by `s` nodes: `out[j] = f[j - s]`.
    pub fn shifted(&self, s: usize) -> Field {
        let n = self.values.len();
        Self::from_raw(
            &self.grid,
            (0..n).map(|j| self.values[(j + n - s % n) % n]).collect(),
        )
    }
}

/// Normalized Fourier coefficients in transform order (`k = 0, 1, ...,
/// n/2 - 1, -n/2, ..., -1`).
#[derive(Debug, Clone)]
pub struct Spectrum {
    grid: Arc<PeriodicGrid>,
    coeffs: Vec<Complex64>,
}

impl Spectrum {
    pub fn grid(&self) -> &Arc<PeriodicGrid> {
        &self.grid
    }

    pub fn coefficients(&self) -> &[Complex64] {
        &self.coeffs
    }

    /// Coefficient of `exp(2 pi i k x)` for `-n/2 <= k < n/2`.
    pub fn coeff(&self, k: i64) -> Complex64 {
        let n = self.grid.n() as i64;
        assert!((-n / 2..n / 2).contains(&k), "wavenumber {k} out of range");
        self.coeffs[k.rem_euclid(n) as usize]
    }

    /// Multiplies mode `k` by `symbol(k)`. Odd symbols drop the Nyquist mode.
    fn apply(&self, symbol: impl Fn(f64) -> Complex64, odd: bool) -> Spectrum {
        let half = self.grid.n() / 2;
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(j, &c)| {
                if j == half {
                    if odd {
                        Complex64::new(0.0, 0.0)
                    } else {
                        c * symbol(half as f64)
                    }
                } else {
                    c * symbol(self.grid.wavenumber(j) as f64)
                }
            })
            .collect();
        Spectrum {
            grid: Arc::clone(&self.grid),
            coeffs,
        }
    }

    pub fn derivative(&self, order: u32) -> Spectrum {
        assert!((1..=3).contains(&order), "derivative order must be 1, 2 or 3");
        self.apply(
            |k| Complex64::new(0.0, 2.0 * PI * k).powu(order),
            order % 2 == 1,
        )
    }

    pub fn helmholtz(&self) -> Spectrum {
        self.apply(|k| Complex64::new(helmholtz_symbol(k), 0.0), false)
    }

    pub fn dgreen(&self) -> Spectrum {
        self.apply(
            |k| Complex64::new(0.0, 2.0 * PI * k * helmholtz_symbol(k)),
            true,
        )
    }

    /// Sum of the coefficient-wise combination `a * self + b * other`.
    pub fn axpby(&self, a: f64, other: &Spectrum, b: f64) -> Spectrum {
        Spectrum {
            grid: Arc::clone(&self.grid),
            coeffs: self
                .coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(x, y)| x * a + y * b)
                .collect(),
        }
    }

    pub fn to_field(&self) -> Field {
        Field::from_raw(&self.grid, self.grid.synthesize(&self.coeffs))
    }

    /// Evaluates the real trigonometric interpolant at `x`.
    pub fn eval(&self, x: f64) -> f64 {
        let n = self.grid.n();
        let half = n / 2;
        let x = x.rem_euclid(1.0);
        let step = Complex64::from_polar(1.0, 2.0 * PI * x);
        let mut phase = step;
        let mut acc = self.coeffs[0].re;
        for k in 1..half {
            acc += 2.0 * (self.coeffs[k] * phase).re;
            phase *= step;
        }
        acc + self.coeffs[half].re * (PI * n as f64 * x).cos()
    }
}

fn helmholtz_symbol(k: f64) -> f64 {
    1.0 / (1.0 + 4.0 * PI * PI * k * k)
}

/// The periodic Green's kernel `cosh(x - floor(x) - 1/2) / (2 sinh(1/2))`.
pub fn green_kernel(x: f64) -> f64 {
    (x - x.floor() - 0.5).cosh() / (2.0 * 0.5f64.sinh())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(n: usize) -> Arc<PeriodicGrid> {
        PeriodicGrid::new(n).unwrap()
    }

    #[test]
    fn rejects_bad_sizes() {
        assert!(matches!(PeriodicGrid::new(6), Err(Error::InvalidGrid { n: 6 })));
        assert!(matches!(PeriodicGrid::new(17), Err(Error::InvalidGrid { n: 17 })));
        assert!(PeriodicGrid::new(8).is_ok());
        assert!(PeriodicGrid::new(24).is_ok());
    }

    #[test]
    fn nodes_are_uniform() {
        let g = grid(16);
        let x = g.nodes();
        for w in x.windows(2) {
            assert!((w[1] - w[0] - 1.0 / 16.0).abs() < 1e-15);
        }
        assert_eq!(x[0], 0.0);
    }

    #[test]
    fn field_rejects_non_finite_and_wrong_length() {
        let g = grid(8);
        assert!(matches!(
            Field::new(&g, vec![0.0; 7]),
            Err(Error::LengthMismatch { expected: 8, got: 7 })
        ));
        let mut v = vec![0.0; 8];
        v[3] = f64::NAN;
        assert!(Field::new(&g, v).is_err());
    }

    #[test]
    fn kernel_values() {
        let s = 0.5f64.sinh();
        assert!((green_kernel(0.0) - 0.5f64.cosh() / (2.0 * s)).abs() < 1e-15);
        assert!((green_kernel(0.0) - 1.081_976_7).abs() < 1e-7);
        let e = std::f64::consts::E;
        assert!((green_kernel(0.0) - (e + 1.0) / (2.0 * (e - 1.0))).abs() < 1e-14);
        assert!((green_kernel(0.5) - 0.959_517_4).abs() < 1e-7);
        assert_eq!(green_kernel(0.25), green_kernel(1.25));
        assert!((green_kernel(0.3) - green_kernel(-0.3)).abs() < 1e-15);
    }

    #[test]
    fn kernel_bounds() {
        let lo = 1.0 / (2.0 * 0.5f64.sinh());
        let hi = 0.5f64.cosh() * lo;
        for i in 0..1000 {
            let g = green_kernel(-3.0 + 0.0061 * i as f64);
            assert!(g >= lo - 1e-15 && g <= hi + 1e-15);
        }
    }

    #[test]
    fn convolution_of_constant_and_cosine() {
        let g = grid(32);
        let c = Field::constant(&g, 2.5).helmholtz_convolve();
        assert!(c.values().iter().all(|v| (v - 2.5).abs() < 1e-14));
        let f = Field::from_fn(&g, |x| (2.0 * PI * x).cos());
        let h = f.helmholtz_convolve();
        let s = 1.0 / (1.0 + 4.0 * PI * PI);
        for (j, v) in h.values().iter().enumerate() {
            assert!((v - s * (2.0 * PI * g.node(j)).cos()).abs() < 1e-15);
        }
    }

    #[test]
    fn dgreen_of_constant_and_sine() {
        let g = grid(32);
        let c = Field::constant(&g, -1.5).dgreen_convolve();
        assert!(c.max_abs() < 1e-14);
        let f = Field::from_fn(&g, |x| (2.0 * PI * x).sin());
        let d = f.dgreen_convolve();
        let s = 2.0 * PI / (1.0 + 4.0 * PI * PI);
        for (j, v) in d.values().iter().enumerate() {
            assert!((v - s * (2.0 * PI * g.node(j)).cos()).abs() < 1e-14);
        }
        assert!(d.integral().abs() < 1e-15);
    }

    #[test]
    fn derivatives_of_trig_and_constant() {
        let g = grid(64);
        let f = Field::from_fn(&g, |x| (2.0 * PI * x).sin());
        let d = f.derivative(1);
        for (j, v) in d.values().iter().enumerate() {
            assert!((v - 2.0 * PI * (2.0 * PI * g.node(j)).cos()).abs() < 1e-12);
        }
        for order in 1..=3 {
            assert!(Field::constant(&g, 3.0).derivative(order).max_abs() < 1e-13);
        }
        let d3 = f.derivative(3);
        for (j, v) in d3.values().iter().enumerate() {
            let exact = -(2.0 * PI).powi(3) * (2.0 * PI * g.node(j)).cos();
            assert!((v - exact).abs() < 1e-8, "{}", v - exact);
        }
    }

    #[test]
    fn odd_derivative_drops_nyquist() {
        let g = grid(16);
        // alternating +-1 is the pure Nyquist mode
        let f = Field::from_fn(&g, |x| (PI * 16.0 * x).cos());
        assert!(f.derivative(1).max_abs() < 1e-12);
        let d2 = f.derivative(2);
        let expected = -(PI * 16.0).powi(2);
        assert!((d2.values()[0] - expected).abs() < 1e-9 * expected.abs());
    }

    #[test]
    fn interpolation_reproduces_trig_polynomials_and_nodes() {
        let g = grid(32);
        let f = Field::from_fn(&g, |x| (2.0 * PI * x).cos());
        assert!((f.interpolate(0.125) - (PI / 4.0).cos()).abs() < 1e-14);
        assert!((f.interpolate(1.125) - (PI / 4.0).cos()).abs() < 1e-14);
        let r = Field::from_fn(&g, |x| (x * 7.3).sin().exp() + (13.0 * x).cos());
        let spec = r.spectrum();
        for j in 0..32 {
            assert!((spec.eval(g.node(j)) - r.values()[j]).abs() < 1e-12);
        }
    }

    #[test]
    fn dealiased_product_is_exact_for_band_limited_inputs() {
        let g = grid(16);
        let a = Field::from_fn(&g, |x| (2.0 * PI * 3.0 * x).cos());
        let b = Field::from_fn(&g, |x| (2.0 * PI * 4.0 * x).sin());
        // sin(8 pi x) cos(6 pi x) = (sin(14 pi x) + sin(2 pi x)) / 2; mode 7 fits
        let p = a.dealiased_product(&b);
        for (j, v) in p.values().iter().enumerate() {
            let x = g.node(j);
            let e = 0.5 * ((14.0 * PI * x).sin() + (2.0 * PI * x).sin());
            assert!((v - e).abs() < 1e-14);
        }
        // modes 6 + 5 = 11 exceed n/2 and are discarded rather than aliased
        let c = Field::from_fn(&g, |x| (12.0 * PI * x).cos());
        let d = Field::from_fn(&g, |x| (10.0 * PI * x).cos());
        let q = c.dealiased_product(&d);
        for (j, v) in q.values().iter().enumerate() {
            let e = 0.5 * (2.0 * PI * g.node(j)).cos();
            assert!((v - e).abs() < 1e-14);
        }
    }

    #[test]
    fn spectrum_indexing() {
        let g = grid(8);
        let f = Field::from_fn(&g, |x| 1.0 + (2.0 * PI * x).cos());
        let s = f.spectrum();
        assert!((s.coeff(0).re - 1.0).abs() < 1e-15);
        assert!((s.coeff(1).re - 0.5).abs() < 1e-15);
        assert!((s.coeff(-1).re - 0.5).abs() < 1e-15);
        assert!(s.coeff(-4).norm() < 1e-15);
        assert_eq!(g.wavenumber(4), -4);
        assert_eq!(g.wavenumber(5), -3);
    }

    #[test]
    fn half_period_shift() {
        let g = grid(8);
        let f = Field::new(&g, (0..8).map(|j| j as f64).collect()).unwrap();
        assert_eq!(f.shifted(4).values(), &[4.0, 5.0, 6.0, 7.0, 0.0, 1.0, 2.0, 3.0]);
    }
}
