//! Image sums of the rational kernels `1/(s^2 + d^2)^m` and `s/(s^2 + d^2)^m`.
//!
//! With `a = pi |d| / P` and `b = pi s / P` the two basic sums are
//!
//! ```text
//! sum_j 1/((s + jP)^2 + d^2)     = (pi/P)^2 sinh(2a)/(2a) / (sinh^2 a + sin^2 b)
//! sum_j (s + jP)/((s + jP)^2 + d^2) = (pi/P) sin b cos b / (sinh^2 a + sin^2 b)
//! ```
//!
//! where the second sum pairs `j` with `-j`. Writing `cosh 2a - cos 2b` as
//! `2 (sinh^2 a + sin^2 b)` avoids cancellation near the diagonal; for
//! `a >= 1` everything is divided through by `sinh^2 a` so that large
//! separations never overflow. The squared kernels are `-1/(2d) d/dd` of
//! the basic ones.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// `sum_j 1/((s + jP)^2 + d^2)`.
pub fn kernel_poisson_periodized(s: f64, d: f64, period: f64) -> Result<f64> {
    let t = Trig::new(s, period);
    check_regular(t, d, period)?;
    Ok(poisson_flux(t, d, period).0)
}

/// `sum_j (s + jP)/((s + jP)^2 + d^2)`, images paired symmetrically.
pub fn kernel_flux_periodized(s: f64, d: f64, period: f64) -> Result<f64> {
    let t = Trig::new(s, period);
    check_regular(t, d, period)?;
    Ok(poisson_flux(t, d, period).1)
}

/// `sum_j 1/((s + jP)^2 + d^2)^2`.
pub fn kernel_poisson_squared_periodized(s: f64, d: f64, period: f64) -> Result<f64> {
    let t = Trig::new(s, period);
    check_regular(t, d, period)?;
    Ok(squared(t, d, period).0)
}

/// `sum_j (s + jP)/((s + jP)^2 + d^2)^2`.
pub fn kernel_flux_squared_periodized(s: f64, d: f64, period: f64) -> Result<f64> {
    let t = Trig::new(s, period);
    check_regular(t, d, period)?;
    Ok(squared(t, d, period).1)
}

/// `sum_j (s + jP)^{-q}`, paired symmetrically for `q = 1`.
pub fn cot_power_sum(q: u32, s: f64, period: f64) -> Result<f64> {
    let t = Trig::new(s, period);
    if q == 0 || t.sin.abs() < 4.0 * f64::EPSILON {
        return Err(Error::Precondition("a nonzero offset and a positive power".into()));
    }
    Ok(cot_power(q, t, period))
}

fn check_regular(t: Trig, d: f64, period: f64) -> Result<()> {
    if !d.is_finite() || !period.is_finite() || period <= 0.0 {
        return Err(Error::InvalidParameter("kernel arguments must be finite".into()));
    }
    if d == 0.0 && t.sin.abs() < 4.0 * f64::EPSILON {
        return Err(Error::Precondition("d != 0 or s off the lattice P Z (singular kernel)".into()));
    }
    Ok(())
}

/// `sin b` and `cos b` for `b = pi s / P`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Trig {
    pub sin: f64,
    pub cos: f64,
}

impl Trig {
    pub fn new(s: f64, period: f64) -> Self {
        let s = s - period * (s / period).round();
        let b = PI * s / period;
        let (sin, cos) = b.sin_cos();
        Self { sin, cos }
    }

    /// Offsets `(i - k) h` for every wrapped index difference, indexed by
    /// `(i - k) mod n`.
    pub fn table(n: usize, period: f64) -> Vec<Trig> {
        let h = period / n as f64;
        (0..n)
            .map(|d| {
                let d = if d > n / 2 { d as f64 - n as f64 } else { d as f64 };
                Trig::new(d * h, period)
            })
            .collect()
    }
}

/// `(K0, K1)`: the periodized Poisson and flux kernels sharing one `sinh`.
#[inline]
pub(crate) fn poisson_flux(t: Trig, d: f64, period: f64) -> (f64, f64) {
    let c = PI / period;
    let a = c * d.abs();
    let sb2 = t.sin * t.sin;
    if a < 1.0 {
        let sh = a.sinh();
        let g = sh * sh + sb2;
        let s_over_a = if a == 0.0 { 1.0 } else { sh * (1.0 + sh * sh).sqrt() / a };
        (c * c * s_over_a / g, c * t.sin * t.cos / g)
    } else {
        let sh = a.sinh();
        let u = 1.0 / (sh * sh);
        let den = 1.0 + sb2 * u;
        let coth = 1.0 / a.tanh();
        (c * c * coth / a / den, c * t.sin * t.cos * u / den)
    }
}

/// `(sum 1/(t^2+d^2)^2, sum t/(t^2+d^2)^2)` over the images `t = s + jP`.
#[inline]
pub(crate) fn squared(t: Trig, d: f64, period: f64) -> (f64, f64) {
    let c = PI / period;
    let a = c * d.abs();
    let sb2 = t.sin * t.sin;
    let cb2 = t.cos * t.cos;
    let c3 = c * c * c;
    if a < 1.0 {
        let sh = a.sinh();
        let sh_over_a = if a == 0.0 { 1.0 } else { sh / a };
        let q_over_a2 = sinhc2_minus_one_over_a2(a);
        let g = sh * sh + sb2;
        let s_over_a = 1.0 + q_over_a2 * a * a;
        let k2 = 0.5 * c3 * c * (2.0 * sh_over_a * sh_over_a * cb2 + q_over_a2 * g) / (g * g);
        let f2 = c3 * s_over_a * t.sin * t.cos / (g * g);
        (k2, f2)
    } else {
        let sh = a.sinh();
        let u = 1.0 / (sh * sh);
        let coth_over_a = 1.0 / (a.tanh() * a);
        let qu = coth_over_a - u;
        let gu = 1.0 + sb2 * u;
        let num = 2.0 * cb2 * u + qu * gu;
        let k2 = 0.5 * c3 * c * num / (a * a * gu * gu);
        let f2 = c3 * t.sin * t.cos * coth_over_a * u / (gu * gu);
        (k2, f2)
    }
}

/// `(sinh(2a)/(2a) - 1) / a^2`, accurate as `a -> 0`.
fn sinhc2_minus_one_over_a2(a: f64) -> f64 {
    if a < 0.5 {
        let x2 = 4.0 * a * a;
        let mut term = 4.0 / 6.0;
        let mut sum = term;
        let mut k = 1.0;
        while term > 1e-18 * sum {
            term *= x2 / ((2.0 * k + 2.0) * (2.0 * k + 3.0));
            sum += term;
            k += 1.0;
        }
        sum
    } else {
        ((2.0 * a).sinh() / (2.0 * a) - 1.0) / (a * a)
    }
}

/// `sum_j (s + jP)^{-q}` from the derivatives of `cot`, which are
/// polynomials in `cot` itself.
pub(crate) fn cot_power(q: u32, t: Trig, period: f64) -> f64 {
    let cot = t.cos / t.sin;
    let mut poly = vec![0.0, 1.0];
    let mut factorial = 1.0;
    for k in 1..q {
        let mut next = vec![0.0; poly.len() + 1];
        for (p, &coef) in poly.iter().enumerate().skip(1) {
            let dp = p as f64 * coef;
            next[p - 1] -= dp;
            next[p + 1] -= dp;
        }
        poly = next;
        factorial *= k as f64;
    }
    let value = poly.iter().rev().fold(0.0, |acc, &coef| acc * cot + coef);
    let sign = if q % 2 == 1 { 1.0 } else { -1.0 };
    sign / factorial * (PI / period).powi(q as i32) * value
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute_poisson(s: f64, d: f64, p: f64, m: i32) -> f64 {
        let j_max = 200_000i64;
        let mut sum = 0.0;
        for j in (-j_max..=j_max).rev() {
            let t = s + j as f64 * p;
            sum += 1.0 / (t * t + d * d).powi(m);
        }
        sum
    }

    #[test]
    fn squared_kernels_match_image_sums() {
        let p = 2.0 * PI;
        for &(s, d) in &[(0.3, 0.7), (-1.2, 0.05), (2.9, 4.0), (0.01, 0.3), (1.0, 0.0)] {
            let (k2, f2) = squared(Trig::new(s, p), d, p);
            let brute = brute_poisson(s, d, p, 2);
            assert!((k2 - brute).abs() < 1e-11 * brute.abs().max(1.0), "{s} {d}: {k2} {brute}");
            let mut fb = 0.0;
            for j in (1..200_000i64).rev() {
                let t1 = s + j as f64 * p;
                let t2 = s - j as f64 * p;
                fb += t1 / (t1 * t1 + d * d).powi(2) + t2 / (t2 * t2 + d * d).powi(2);
            }
            fb += s / (s * s + d * d).powi(2);
            assert!((f2 - fb).abs() < 1e-11 * fb.abs().max(1.0), "{s} {d}: {f2} {fb}");
        }
    }

    #[test]
    fn large_separation_does_not_overflow() {
        let p = 1.0;
        let (k0, k1) = poisson_flux(Trig::new(0.2, p), 500.0, p);
        assert!((k0 * 500.0 - PI).abs() < 1e-12);
        assert_eq!(k1, 0.0);
        let (k2, f2) = squared(Trig::new(0.2, p), 500.0, p);
        assert!((k2 * 2.0 * 500f64.powi(3) - PI).abs() < 1e-10);
        assert_eq!(f2, 0.0);
    }

    #[test]
    fn cot_powers_match_image_sums() {
        let p = 3.0;
        let s = 0.4;
        for q in 2..6u32 {
            let mut brute = 0.0;
            let j_max = 20_000i64;
            for j in (1..=j_max).rev() {
                brute += (s + j as f64 * p).powi(-(q as i32)) + (s - j as f64 * p).powi(-(q as i32));
            }
            brute += s.powi(-(q as i32));
            if q % 2 == 0 {
                let tail = j_max as f64 + 0.5;
                brute += 2.0 / ((q - 1) as f64 * p.powi(q as i32) * tail.powi(q as i32 - 1));
            }
            let v = cot_power_sum(q, s, p).unwrap();
            assert!((v - brute).abs() < 1e-10 * brute.abs(), "{q}: {v} {brute}");
        }
        let c = cot_power_sum(1, s, p).unwrap();
        assert!((c - PI / p / (PI * s / p).tan()).abs() < 1e-14);
    }

    #[test]
    fn singular_kernel_is_rejected() {
        assert!(kernel_poisson_periodized(0.0, 0.0, 1.0).is_err());
        assert!(kernel_flux_periodized(2.0, 0.0, 1.0).is_err());
        assert!(kernel_poisson_periodized(0.0, 0.1, 1.0).is_ok());
    }
}
