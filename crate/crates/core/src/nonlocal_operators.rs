//! The singular integral family
//!
//! ```text
//! B_{n,m}(u)[v, w](x) = PV int prod_i (du_i/s) / prod_j (1 + (dv_j/s)^2) w(x - s)/s ds
//! ```
//!
//! with `du = u(x) - u(x - s)`, evaluated by the alternating-point rule on
//! the periodized kernel.

use std::f64::consts::PI;

use log::warn;

use crate::error::{Error, Result};
use crate::grid_spectral::{spectral_derivative, GridFunction};
use crate::kernels::{cot_power, poisson_flux, Trig};
use crate::quadrature::QuadratureScheme;

/// `B_{n,m}(u_1..u_n)[v_1..v_m, w]`.
pub fn apply_b(
    numerators: &[&GridFunction],
    denominators: &[&GridFunction],
    density: &GridFunction,
) -> Result<GridFunction> {
    apply_b_with(&QuadratureScheme::default(), numerators, denominators, density)
}

pub fn apply_b_with(
    scheme: &QuadratureScheme,
    numerators: &[&GridFunction],
    denominators: &[&GridFunction],
    density: &GridFunction,
) -> Result<GridFunction> {
    let grid = density.grid();
    for g in numerators.iter().chain(denominators) {
        if g.grid() != grid {
            return Err(Error::GridMismatch { expected: grid.n_points(), found: g.len() });
        }
    }
    let n = grid.n_points();
    let period = grid.period();
    let h = grid.spacing();
    let trig = Trig::table(n, period);
    let w = density.values();
    let nn = numerators.len();
    let mm = denominators.len();
    let q = nn as u32 + 1;
    let mut dv = vec![0.0; mm];
    let mut out = vec![0.0; n];
    for (i, o) in out.iter_mut().enumerate() {
        let mut acc = 0.0;
        for k in (0..n).filter(|k| (i + n - k) % 2 == 1) {
            let off = (i + n - k) % n;
            let t = trig[off];
            let num: f64 = numerators.iter().map(|u| u.values()[i] - u.values()[k]).product();
            for (d, v) in dv.iter_mut().zip(denominators) {
                *d = v.values()[i] - v.values()[k];
            }
            let kernel = match (nn, mm) {
                (_, 0) => num * cot_power(q, t, period),
                (0, 1) => poisson_flux(t, dv[0], period).1,
                (1, 1) => num * poisson_flux(t, dv[0], period).0,
                _ => {
                    let s = grid.offset(i, k);
                    num * (cot_power(q, t, period) + image_remainder(s, period, q, &dv, scheme.image_pairs))
                }
            };
            acc += kernel * w[k];
        }
        *o = 2.0 * h * acc;
    }
    GridFunction::new(grid, out)
}

/// `sum_{|j| <= J} t^{-q} (prod 1/(1 + d^2/t^2) - 1)` over `t = s + jP`.
fn image_remainder(s: f64, period: f64, q: u32, d: &[f64], pairs: usize) -> f64 {
    let term = |t: f64| {
        let inv = 1.0 / (t * t);
        let prod: f64 = d.iter().map(|d| 1.0 / (1.0 + d * d * inv)).product();
        (prod - 1.0) * t.powi(-(q as i32))
    };
    let mut sum = 0.0;
    for j in (1..=pairs).rev() {
        let jp = j as f64 * period;
        sum += term(s + jp) + term(s - jp);
    }
    sum + term(s)
}

/// `B^0_{n,m}(u)[w] = B_{n,m}(u, .., u)[u, .., u, w]`.
pub fn apply_b0(n: usize, m: usize, u: &GridFunction, density: &GridFunction) -> Result<GridFunction> {
    let nums = vec![u; n];
    let dens = vec![u; m];
    apply_b(&nums, &dens, density)
}

/// `(B^0_{0,1}(u)[w] + u' B^0_{1,1}(u)[w]) / pi`.
pub fn apply_bcal(u: &GridFunction, density: &GridFunction) -> Result<GridFunction> {
    if u.grid() != density.grid() {
        return Err(Error::GridMismatch { expected: u.len(), found: density.len() });
    }
    let du = spectral_derivative(u);
    let (b01, b11) = b0_pair(u.values(), density, &[density.values()]);
    let vals = (0..u.len()).map(|i| (b01[0][i] + du.values()[i] * b11[0][i]) / PI).collect();
    GridFunction::new(u.grid(), vals)
}

/// `B^0_{0,1}(u)[w]` and `B^0_{1,1}(u)[w]` for several densities at once.
pub(crate) fn b0_pair(
    u: &[f64],
    grid_of: &GridFunction,
    densities: &[&[f64]],
) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let grid = grid_of.grid();
    let n = grid.n_points();
    let period = grid.period();
    let h2 = 2.0 * grid.spacing();
    let trig = Trig::table(n, period);
    let mut b01 = vec![vec![0.0; n]; densities.len()];
    let mut b11 = vec![vec![0.0; n]; densities.len()];
    for i in 0..n {
        let start = (i + 1) % 2;
        for k in (start..n).step_by(2) {
            let d = u[i] - u[k];
            let (k0, k1) = poisson_flux(trig[(i + n - k) % n], d, period);
            let dk0 = d * k0;
            for (j, w) in densities.iter().enumerate() {
                b01[j][i] += k1 * w[k];
                b11[j][i] += dk0 * w[k];
            }
        }
        for j in 0..densities.len() {
            b01[j][i] *= h2;
            b11[j][i] *= h2;
        }
    }
    (b01, b11)
}

/// `(1/pi) int_{|s| > delta} w(x - s)/s ds` for periodic `w`.
///
/// The periodized kernel `(1/P) cot(pi s/P)` is kept on `|s| > delta`; on
/// `|s| <= delta` only its image part `(1/P) cot(pi s/P) - 1/(pi s)` is kept,
/// so the operator is the real-line truncated transform. Returns zero with a
/// warning when `delta >= P/2`.
pub fn truncated_hilbert(delta: f64, density: &GridFunction) -> Result<GridFunction> {
    let grid = density.grid();
    let period = grid.period();
    if !(delta.is_finite() && delta > 0.0) {
        return Err(Error::InvalidParameter(format!("truncation radius must be positive, got {delta}")));
    }
    if delta >= 0.5 * period {
        warn!("truncation radius {delta} >= P/2: empty integration range");
        return Ok(GridFunction::zeros(grid));
    }
    let n = grid.n_points();
    let h = grid.spacing();
    let trig = Trig::table(n, period);
    let w = density.values();
    let out = (0..n)
        .map(|i| {
            let mut acc = 0.0;
            for k in (0..n).filter(|k| (i + n - k) % 2 == 1) {
                let s = grid.offset(i, k);
                let mut kern = cot_power(1, trig[(i + n - k) % n], period);
                if s.abs() <= delta {
                    kern -= 1.0 / s;
                }
                acc += kern * w[k];
            }
            2.0 * h * acc / PI
        })
        .collect();
    GridFunction::new(grid, out)
}

/// Symbol of the continuum truncated transform,
/// `-i sign(xi) (1 - (2/pi) Si(|xi| delta))`; returns the real factor
/// multiplying `-i sign(xi)`.
pub fn truncated_hilbert_symbol(delta: f64, xi: f64) -> f64 {
    1.0 - 2.0 / PI * sine_integral(xi.abs() * delta)
}

/// `Si(x) = int_0^x sin t / t dt`.
pub fn sine_integral(x: f64) -> f64 {
    if x < 0.0 {
        return -sine_integral(-x);
    }
    if x <= 4.0 {
        let x2 = x * x;
        let mut term = x;
        let mut sum = x;
        let mut k = 0.0;
        loop {
            term *= -x2 / ((2.0 * k + 2.0) * (2.0 * k + 3.0));
            let add = term / (2.0 * k + 3.0);
            sum += add;
            k += 1.0;
            if add.abs() < 1e-17 * sum.abs() {
                return sum;
            }
        }
    }
    // E1(i x) by the modified Lentz continued fraction.
    use rustfft::num_complex::Complex64 as C;
    let z = C::new(0.0, x);
    let tiny = 1e-300;
    let mut b = z + 1.0;
    let mut c = C::new(1.0 / tiny, 0.0);
    let mut d = C::new(1.0, 0.0) / b;
    let mut h = d;
    for i in 1..200 {
        let a = -((i * i) as f64);
        b += 2.0;
        d = C::new(1.0, 0.0) / (d * a + b);
        c = b + C::new(a, 0.0) / c;
        let del = c * d;
        h *= del;
        if (del - 1.0).norm() < 1e-16 {
            break;
        }
    }
    let e1 = h * C::from_polar(1.0, -x);
    PI / 2.0 + e1.im
}
