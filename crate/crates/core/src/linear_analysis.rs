//! Linearization of `Phi`: finite-difference and analytic directional
//! derivatives, and the symbol of the linearization at the flat state.
//!
//! At the flat state `Phi` acts on `(cos kx) e` through
//!
//! ```text
//! M(k) = |k| [[th1, th2 e^{-c |k|}], [th1 e^{-c |k|}, th2]]
//! ```

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid_spectral::{spectral_derivative, Grid, GridFunction};
use crate::layer_potentials::{layer1_multi, layer2_multi};
use crate::muskat_rhs::{check_admissible, compute_phi};
use crate::state::{Direction, InterfaceState, PhysicalParams};

/// `(Phi(X + eps Y) - Phi(X - eps Y)) / (2 eps)`.
pub fn directional_derivative_fd(
    x: &InterfaceState,
    y: &Direction,
    eps: f64,
) -> Result<(GridFunction, GridFunction)> {
    if !(eps.is_finite() && eps > 0.0) {
        return Err(Error::InvalidParameter(format!("eps must be positive, got {eps}")));
    }
    let (p1, p2) = compute_phi(&x.perturbed(y, eps))?;
    let (m1, m2) = compute_phi(&x.perturbed(y, -eps))?;
    let s = 0.5 / eps;
    Ok((p1.zip_map(&m1, |a, b| s * (a - b)), p2.zip_map(&m2, |a, b| s * (a - b))))
}

/// Derivative of `Phi_1` with respect to the lower interface in the
/// direction `v`.
pub fn offdiag_derivative(x: &InterfaceState, v: &GridFunction) -> Result<GridFunction> {
    check_admissible(x)?;
    if v.grid() != x.grid() {
        return Err(Error::GridMismatch { expected: x.grid().n_points(), found: v.len() });
    }
    let c = x.c_inf();
    let th2 = x.params.theta2();
    let (f, h, vv) = (x.f.values(), x.h.values(), v.values());
    let fp = spectral_derivative(&x.f);
    let hp = spectral_derivative(&x.h);
    let vp = spectral_derivative(v);
    let (fp, hp, vp) = (fp.values(), hp.values(), vp.values());
    let n = f.len();
    let prod_rule: Vec<f64> = (0..n).map(|i| h[i] * vp[i] + vv[i] * hp[i]).collect();
    let vhp: Vec<f64> = (0..n).map(|i| vv[i] * hp[i]).collect();
    let vhhp: Vec<f64> = (0..n).map(|i| vv[i] * h[i] * hp[i]).collect();
    let (c1, d1) = layer1_multi(false, x, &[vp, &prod_rule]);
    let (c2, d2) = layer2_multi(false, x, &[&vhp, &vhhp]);
    let out = (0..n)
        .map(|i| {
            let a = (c + f[i]) * fp[i] * (c1[0][i] + 2.0 * c2[0][i]);
            let b = fp[i] * (c1[1][i] + 2.0 * c2[1][i]);
            th2 / PI * (a - b + d1[0][i] + 2.0 * d2[0][i])
        })
        .collect();
    GridFunction::new(x.grid(), out)
}

/// `M(xi)` for the physical wavenumber `xi`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SymbolMatrix {
    pub xi: f64,
    pub entries: [[f64; 2]; 2],
}

impl SymbolMatrix {
    /// Eigenvalues, smallest first.
    pub fn eigenvalues(&self) -> [f64; 2] {
        let [[a, b], [c, d]] = self.entries;
        let tr = a + d;
        let disc = ((a - d) * (a - d) + 4.0 * b * c).max(0.0).sqrt();
        // The smaller root in the numerically safe form.
        let big = 0.5 * (tr + tr.signum() * disc);
        let det = a * d - b * c;
        let other = if big != 0.0 { det / big } else { 0.0 };
        let (lo, hi) = if big < other { (big, other) } else { (other, big) };
        [lo, hi]
    }

    /// Unit eigenvector for the eigenvalue `lambda`.
    pub fn eigenvector(&self, lambda: f64) -> [f64; 2] {
        let [[a, b], [c, d]] = self.entries;
        let u = [b, lambda - a];
        let w = [lambda - d, c];
        let pick = if u[0].hypot(u[1]) >= w[0].hypot(w[1]) { u } else { w };
        let norm = pick[0].hypot(pick[1]);
        if norm == 0.0 || norm < 1e-300 {
            if (lambda - a).abs() <= (lambda - d).abs() {
                [1.0, 0.0]
            } else {
                [0.0, 1.0]
            }
        } else {
            let s = if pick[0] < 0.0 || (pick[0] == 0.0 && pick[1] < 0.0) { -1.0 } else { 1.0 };
            [s * pick[0] / norm, s * pick[1] / norm]
        }
    }
}

pub fn flat_symbol_matrix(params: &PhysicalParams, xi: f64) -> SymbolMatrix {
    let k = xi.abs();
    let e = (-params.c_inf * k).exp();
    let (t1, t2) = (params.theta1(), params.theta2());
    SymbolMatrix { xi, entries: [[k * t1, k * t2 * e], [k * t1 * e, k * t2]] }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DispersionRow {
    /// Integer mode number; the wavenumber is `2 pi k / P`.
    pub k: u32,
    pub xi: f64,
    pub predicted: [f64; 2],
    pub measured: [f64; 2],
}

impl DispersionRow {
    /// Relative mismatch per eigenvalue; absolute where the prediction is 0.
    pub fn relative_errors(&self) -> [f64; 2] {
        [0, 1].map(|j| {
            let err = (self.measured[j] - self.predicted[j]).abs();
            if self.predicted[j] == 0.0 {
                err
            } else {
                err / self.predicted[j].abs()
            }
        })
    }
}

/// Growth rates of small eigenmode perturbations of the flat state against
/// the eigenvalues of `M`.
pub fn dispersion_scan(
    grid: Grid,
    params: &PhysicalParams,
    modes: &[u32],
    eps: f64,
) -> Result<Vec<DispersionRow>> {
    if !(eps.is_finite() && eps > 0.0) {
        return Err(Error::InvalidParameter(format!("eps must be positive, got {eps}")));
    }
    let mut rows = Vec::with_capacity(modes.len());
    for &k in modes {
        if k as usize >= grid.n_points() / 2 {
            return Err(Error::InvalidParameter(format!(
                "mode {k} outside 0..{}",
                grid.n_points() / 2
            )));
        }
        let xi = 2.0 * PI * k as f64 / grid.period();
        let m = flat_symbol_matrix(params, xi);
        let predicted = m.eigenvalues();
        let mut measured = [0.0; 2];
        for (j, &lambda) in predicted.iter().enumerate() {
            let e = m.eigenvector(lambda);
            let wave = GridFunction::from_fn(grid, |x| (xi * x).cos());
            let x = InterfaceState::new(wave.scale(eps * e[0]), wave.scale(eps * e[1]), *params)?;
            let (p1, p2) = compute_phi(&x)?;
            let num = e[0] * p1.inner(&wave) + e[1] * p2.inner(&wave);
            let den = e[0] * x.f.inner(&wave) + e[1] * x.h.inner(&wave);
            measured[j] = num / den;
        }
        rows.push(DispersionRow { k, xi, predicted, measured });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn symbol_eigenvalues_at_unit_mode() {
        let p = PhysicalParams::from_thetas(-0.5, -0.5, 1.0).unwrap();
        let ev = flat_symbol_matrix(&p, 1.0).eigenvalues();
        assert!((ev[0] + 0.5 * (1.0 + (-1f64).exp())).abs() < 1e-15);
        assert!((ev[1] + 0.5 * (1.0 - (-1f64).exp())).abs() < 1e-15);
        assert!((ev[0] + 0.68394).abs() < 1e-5 && (ev[1] + 0.31606).abs() < 1e-5);
    }

    #[test]
    fn eigenvectors_solve_the_eigenproblem() {
        let p = PhysicalParams::from_thetas(-0.2, -0.9, 0.7).unwrap();
        for xi in [0.5, 1.0, 3.0, 40.0] {
            let m = flat_symbol_matrix(&p, xi);
            for lambda in m.eigenvalues() {
                let e = m.eigenvector(lambda);
                let r0 = m.entries[0][0] * e[0] + m.entries[0][1] * e[1] - lambda * e[0];
                let r1 = m.entries[1][0] * e[0] + m.entries[1][1] * e[1] - lambda * e[1];
                assert!(r0.abs() + r1.abs() < 1e-12 * lambda.abs().max(1.0), "{xi}");
            }
        }
    }
}
