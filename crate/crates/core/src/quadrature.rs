//! Quadrature rules shared by the integral operators.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

/// Rule for the principal-value sums and the image truncation.
///
/// Singular kernels are sampled at the nodes whose offset from the
/// collocation point is an odd multiple of the grid spacing, i.e. a shifted
/// trapezoid rule of step `2h` whose offset is `offset_fraction` of a step.
/// Kernels without a closed form are summed over `image_pairs` pairs of
/// periodic images.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureScheme {
    pub offset_fraction: f64,
    pub image_pairs: usize,
}

impl Default for QuadratureScheme {
    fn default() -> Self {
        Self { offset_fraction: 0.5, image_pairs: 1024 }
    }
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// Composite Gauss-Legendre integral of `f` over `[a, b]`.
pub fn integrate<E>(
    f: impl FnMut(f64) -> Result<f64, E>,
    a: f64,
    b: f64,
    panels: usize,
    order: usize,
) -> Result<f64, E> {
    let (x, w) = gauss_legendre(order);
    integrate_with(f, a, b, panels, &x, &w)
}

pub(crate) fn integrate_with<E>(
    mut f: impl FnMut(f64) -> Result<f64, E>,
    a: f64,
    b: f64,
    panels: usize,
    x: &[f64],
    w: &[f64],
) -> Result<f64, E> {
    let h = (b - a) / panels as f64;
    let mut sum = 0.0;
    for p in 0..panels {
        let mid = a + (p as f64 + 0.5) * h;
        for (xi, wi) in x.iter().zip(w) {
            sum += 0.5 * h * wi * f(mid + 0.5 * h * xi)?;
        }
    }
    Ok(sum)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_polynomials_exactly() {
        for n in [1usize, 2, 5, 12, 20] {
            let (x, w) = gauss_legendre(n);
            for deg in 0..2 * n {
                let q: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(deg as i32)).sum();
                let exact = if deg % 2 == 1 { 0.0 } else { 2.0 / (deg as f64 + 1.0) };
                assert!((q - exact).abs() < 1e-13, "n={n} deg={deg}: {q}");
            }
        }
    }

    #[test]
    fn composite_rule_on_smooth_integrand() {
        let v: f64 = integrate(|x: f64| Ok::<_, ()>(x.exp()), 0.0, 2.0, 4, 8).unwrap();
        assert!((v - (2f64.exp() - 1.0)).abs() < 1e-13);
    }
}
