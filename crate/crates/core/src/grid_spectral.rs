//! Periodic collocation grids and Fourier multipliers.
//!
//! Nodes are `x_j = -P/2 + j P/N`. Coefficients are taken relative to the
//! first node, so every multiplier below is diagonal and phase free. Odd
//! symbols (derivative, Hilbert, half-Laplacian) drop the Nyquist mode.

use std::cell::RefCell;
use std::f64::consts::PI;
use std::ops::{Add, Mul, Neg, Sub};

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    n_points: usize,
    period: f64,
}

impl Grid {
    pub fn new(n_points: usize, period: f64) -> Result<Self> {
        if n_points < 16 || !n_points.is_power_of_two() {
            return Err(Error::InvalidGrid(format!(
                "n_points must be a power of two >= 16, got {n_points}"
            )));
        }
        if !(period.is_finite() && period > 0.0) {
            return Err(Error::InvalidGrid(format!("period must be positive, got {period}")));
        }
        Ok(Self { n_points, period })
    }

    pub fn n_points(&self) -> usize {
        self.n_points
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn spacing(&self) -> f64 {
        self.period / self.n_points as f64
    }

    pub fn origin(&self) -> f64 {
        -0.5 * self.period
    }

    pub fn node(&self, j: usize) -> f64 {
        self.origin() + j as f64 * self.spacing()
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n_points).map(|j| self.node(j)).collect()
    }

    /// Signed mode index of FFT slot `m`.
    pub fn mode(&self, m: usize) -> i64 {
        let n = self.n_points as i64;
        let m = m as i64;
        if m <= n / 2 {
            m
        } else {
            m - n
        }
    }

    /// Physical wavenumber `2 pi k / P` of FFT slot `m`.
    pub fn wavenumber(&self, m: usize) -> f64 {
        2.0 * PI * self.mode(m) as f64 / self.period
    }

    pub fn refined(&self, factor: usize) -> Result<Self> {
        Self::new(self.n_points * factor, self.period)
    }

    /// Offset `x_i - x_k` wrapped into `(-P/2, P/2]`.
    pub fn offset(&self, i: usize, k: usize) -> f64 {
        let n = self.n_points as i64;
        let mut d = (i as i64 - k as i64).rem_euclid(n);
        if d > n / 2 {
            d -= n;
        }
        d as f64 * self.spacing()
    }

    /// Wraps a displacement into `[-P/2, P/2)`.
    pub fn wrap(&self, dx: f64) -> f64 {
        let p = self.period;
        dx - p * ((dx + 0.5 * p) / p).floor()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    grid: Grid,
    values: Vec<f64>,
}

impl GridFunction {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.n_points() {
            return Err(Error::GridMismatch { expected: grid.n_points(), found: values.len() });
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(Self { grid, values })
    }

    pub fn from_fn(grid: Grid, f: impl Fn(f64) -> f64) -> Self {
        let values = grid.nodes().into_iter().map(f).collect();
        Self { grid, values }
    }

    pub fn zeros(grid: Grid) -> Self {
        Self::constant(grid, 0.0)
    }

    pub fn constant(grid: Grid, c: f64) -> Self {
        Self { grid, values: vec![c; grid.n_points()] }
    }

    pub fn grid(&self) -> Grid {
        self.grid
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

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self { grid: self.grid, values: self.values.iter().map(|&v| f(v)).collect() }
    }

    pub fn zip_map(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Self {
        self.assert_same_grid(other);
        let values = self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect();
        Self { grid: self.grid, values }
    }

    pub fn scale(&self, c: f64) -> Self {
        self.map(|v| c * v)
    }

    pub fn mean(&self) -> f64 {
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

    /// Discrete `L2` norm, equal to the continuum norm of the interpolant.
    pub fn l2_norm(&self) -> f64 {
        (self.grid.spacing() * self.values.iter().map(|v| v * v).sum::<f64>()).sqrt()
    }

    /// `int u v dx` by the trapezoid rule.
    pub fn inner(&self, other: &Self) -> f64 {
        self.assert_same_grid(other);
        self.grid.spacing() * self.values.iter().zip(&other.values).map(|(a, b)| a * b).sum::<f64>()
    }

    /// Values at `x_{-j}`.
    pub fn reflect(&self) -> Self {
        let n = self.values.len();
        let values = (0..n).map(|j| self.values[(n - j) % n]).collect();
        Self { grid: self.grid, values }
    }

    pub fn coefficients(&self) -> Vec<Complex64> {
        let n = self.values.len();
        let mut buf: Vec<Complex64> = self.values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        PLANNER.with(|p| p.borrow_mut().plan_fft_forward(n).process(&mut buf));
        let inv = 1.0 / n as f64;
        buf.iter_mut().for_each(|c| *c *= inv);
        buf
    }

    pub fn from_coefficients(grid: Grid, mut coeffs: Vec<Complex64>) -> Self {
        let n = coeffs.len();
        debug_assert_eq!(n, grid.n_points());
        PLANNER.with(|p| p.borrow_mut().plan_fft_inverse(n).process(&mut coeffs));
        Self { grid, values: coeffs.into_iter().map(|c| c.re).collect() }
    }

    /// Applies the Fourier multiplier `symbol(xi, slot)`.
    pub fn multiplier(&self, symbol: impl Fn(f64, usize) -> Complex64) -> Self {
        let mut c = self.coefficients();
        for (m, ck) in c.iter_mut().enumerate() {
            *ck *= symbol(self.grid.wavenumber(m), m);
        }
        Self::from_coefficients(self.grid, c)
    }

    /// Trigonometric interpolant on the grid refined by `factor`.
    pub fn upsample(&self, factor: usize) -> Result<Self> {
        let fine = self.grid.refined(factor)?;
        if factor == 1 {
            return Ok(self.clone());
        }
        let n = self.values.len();
        let nf = fine.n_points();
        let c = self.coefficients();
        let mut cf = vec![Complex64::new(0.0, 0.0); nf];
        cf[..n / 2].copy_from_slice(&c[..n / 2]);
        cf[nf - n / 2 + 1..].copy_from_slice(&c[n / 2 + 1..]);
        let nyq = c[n / 2] * 0.5;
        cf[n / 2] = nyq;
        cf[nf - n / 2] = nyq;
        Ok(Self::from_coefficients(fine, cf))
    }

    pub fn interpolant(&self) -> TrigInterpolant {
        TrigInterpolant::new(self)
    }

    fn assert_same_grid(&self, other: &Self) {
        assert_eq!(self.grid, other.grid, "grid functions live on different grids");
    }
}

impl Add for &GridFunction {
    type Output = GridFunction;
    fn add(self, rhs: Self) -> GridFunction {
        self.zip_map(rhs, |a, b| a + b)
    }
}

impl Sub for &GridFunction {
    type Output = GridFunction;
    fn sub(self, rhs: Self) -> GridFunction {
        self.zip_map(rhs, |a, b| a - b)
    }
}

impl Mul for &GridFunction {
    type Output = GridFunction;
    fn mul(self, rhs: Self) -> GridFunction {
        self.zip_map(rhs, |a, b| a * b)
    }
}

impl Neg for &GridFunction {
    type Output = GridFunction;
    fn neg(self) -> GridFunction {
        self.scale(-1.0)
    }
}

fn odd_symbol(grid: Grid, m: usize, value: Complex64) -> Complex64 {
    if m == grid.n_points() / 2 {
        Complex64::new(0.0, 0.0)
    } else {
        value
    }
}

/// `u'` via the symbol `i xi`.
pub fn spectral_derivative(u: &GridFunction) -> GridFunction {
    let g = u.grid();
    u.multiplier(|xi, m| odd_symbol(g, m, Complex64::new(0.0, xi)))
}

/// Periodic Hilbert transform, symbol `-i sign(xi)`.
pub fn hilbert_multiplier(u: &GridFunction) -> GridFunction {
    let g = u.grid();
    u.multiplier(|xi, m| {
        let sign = if xi > 0.0 {
            1.0
        } else if xi < 0.0 {
            -1.0
        } else {
            0.0
        };
        odd_symbol(g, m, Complex64::new(0.0, -sign))
    })
}

/// `(-d^2/dx^2)^{1/2}`, symbol `|xi|`.
pub fn half_laplacian(u: &GridFunction) -> GridFunction {
    let g = u.grid();
    u.multiplier(|xi, m| odd_symbol(g, m, Complex64::new(xi.abs(), 0.0)))
}

/// Translation, `shift(u, a)(x) = u(x - a)`.
pub fn shift(u: &GridFunction, a: f64) -> GridFunction {
    let g = u.grid();
    u.multiplier(|xi, m| {
        if m == g.n_points() / 2 {
            Complex64::new((xi * a).cos(), 0.0)
        } else {
            Complex64::from_polar(1.0, -xi * a)
        }
    })
}

/// Cyclic shift by `j` nodes: `roll(u, j)[i] = u[i - j]`, the exact grid
/// version of `shift(u, j h)`.
pub fn roll(u: &GridFunction, j: i64) -> GridFunction {
    let n = u.len() as i64;
    let v = u.values();
    let values = (0..n).map(|i| v[(i - j).rem_euclid(n) as usize]).collect();
    GridFunction { grid: u.grid(), values }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SobolevIndex(f64);

impl SobolevIndex {
    pub fn new(r: f64) -> Result<Self> {
        if (0.0..=2.0).contains(&r) {
            Ok(Self(r))
        } else {
            Err(Error::InvalidParameter(format!("Sobolev index must lie in [0, 2], got {r}")))
        }
    }

    pub fn value(&self) -> f64 {
        self.0
    }
}

/// `(int sum (1 + xi^2)^r |u_xi|^2)^{1/2}`, the `L2` norm when `r = 0`.
pub fn sobolev_norm(u: &GridFunction, r: SobolevIndex) -> f64 {
    let g = u.grid();
    let c = u.coefficients();
    let s: f64 = c
        .iter()
        .enumerate()
        .map(|(m, ck)| (1.0 + g.wavenumber(m).powi(2)).powf(r.value()) * ck.norm_sqr())
        .sum();
    (g.period() * s).sqrt()
}

/// Energy fraction in modes `N/4 < |k| < N/2` among the nonzero modes
/// below Nyquist. The Nyquist mode has no derivative and takes no part in
/// the dynamics, so it is left out of both sums.
pub fn high_mode_fraction(u: &GridFunction) -> f64 {
    let (hi, total) = mode_energy(u);
    if total == 0.0 {
        0.0
    } else {
        hi / total
    }
}

pub(crate) fn mode_energy(u: &GridFunction) -> (f64, f64) {
    let g = u.grid();
    let n = g.n_points() as i64;
    let c = u.coefficients();
    let mut hi = 0.0;
    let mut total = 0.0;
    for (m, ck) in c.iter().enumerate().skip(1) {
        if m as i64 * 2 == n {
            continue;
        }
        let e = ck.norm_sqr();
        total += e;
        if g.mode(m).abs() > n / 4 {
            hi += e;
        }
    }
    (hi, total)
}

/// Continuous evaluation of the trigonometric interpolant.
#[derive(Debug, Clone)]
pub struct TrigInterpolant {
    grid: Grid,
    coeffs: Vec<Complex64>,
}

impl TrigInterpolant {
    pub fn new(u: &GridFunction) -> Self {
        let n = u.len();
        let c = u.coefficients();
        Self { grid: u.grid(), coeffs: c[..=n / 2].to_vec() }
    }

    /// `d`-th derivative at `x`.
    pub fn derivative(&self, x: f64, d: u32) -> f64 {
        let t = x - self.grid.origin();
        let k1 = 2.0 * PI / self.grid.period();
        let half = self.coeffs.len() - 1;
        let step = Complex64::from_polar(1.0, k1 * t);
        let mut phase = Complex64::new(1.0, 0.0);
        let mut acc = if d == 0 { self.coeffs[0].re } else { 0.0 };
        for (k, ck) in self.coeffs.iter().enumerate().skip(1) {
            phase *= step;
            if k % 64 == 0 {
                phase = Complex64::from_polar(1.0, k1 * k as f64 * t);
            }
            let xi = k1 * k as f64;
            let deriv = Complex64::new(0.0, xi).powu(d);
            let term = (ck * deriv * phase).re;
            acc += if k == half { term_nyquist(*ck, xi, t, d) } else { 2.0 * term };
        }
        acc
    }

    pub fn value(&self, x: f64) -> f64 {
        self.derivative(x, 0)
    }

    /// `int_a^b u dx`.
    pub fn integral(&self, a: f64, b: f64) -> f64 {
        let k1 = 2.0 * PI / self.grid.period();
        let (ta, tb) = (a - self.grid.origin(), b - self.grid.origin());
        let half = self.coeffs.len() - 1;
        let mut acc = self.coeffs[0].re * (b - a);
        for (k, ck) in self.coeffs.iter().enumerate().skip(1) {
            let xi = k1 * k as f64;
            if k == half {
                acc += ck.re * ((xi * tb).sin() - (xi * ta).sin()) / xi;
            } else {
                let diff = Complex64::from_polar(1.0, xi * tb) - Complex64::from_polar(1.0, xi * ta);
                acc += 2.0 * (ck * diff / Complex64::new(0.0, xi)).re;
            }
        }
        acc
    }
}

fn term_nyquist(c: Complex64, xi: f64, t: f64, d: u32) -> f64 {
    let a = xi * t;
    let trig = match d % 4 {
        0 => a.cos(),
        1 => -a.sin(),
        2 => -a.cos(),
        _ => a.sin(),
    };
    c.re * xi.powi(d as i32) * trig
}
