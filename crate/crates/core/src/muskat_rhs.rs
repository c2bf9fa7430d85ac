//! Right-hand side of `dX/dt = Phi(X)` and the admissibility test.
//!
//! ```text
//! Phi_1 = th1 B(f)[f'] + th2/pi ((c + f) f' C_1[h'] - f' C_1[h h'] + D_1[h'])
//! Phi_2 = th2 B(h)[h'] + th1/pi ((h - c) h' C'_1[f'] - h' C'_1[f f'] + D'_1[f'])
//! ```

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::grid_spectral::{spectral_derivative, GridFunction};
use crate::layer_potentials::layer1_multi;
use crate::nonlocal_operators::b0_pair;
use crate::state::InterfaceState;

/// `min_x (c_inf + f - h)`.
pub fn admissibility_gap(x: &InterfaceState) -> f64 {
    gap_argmin(x).1
}

fn gap_argmin(x: &InterfaceState) -> (usize, f64) {
    let c = x.c_inf();
    x.f.values().iter().zip(x.h.values()).map(|(f, h)| c + f - h).enumerate().fold(
        (0, f64::INFINITY),
        |best, (j, g)| if g < best.1 || g.is_nan() { (j, g) } else { best },
    )
}

/// Errors with the node of smallest gap unless `c_inf + f - h > 0`.
pub fn check_admissible(x: &InterfaceState) -> Result<()> {
    let (node, gap) = gap_argmin(x);
    if gap > 0.0 {
        Ok(())
    } else {
        Err(Error::Inadmissible { node, x: x.grid().node(node), gap })
    }
}

/// The pair `(Phi_1, Phi_2)`.
pub fn compute_phi(x: &InterfaceState) -> Result<(GridFunction, GridFunction)> {
    check_admissible(x)?;
    let grid = x.grid();
    let c = x.c_inf();
    let th1 = x.params.theta1();
    let th2 = x.params.theta2();
    let (f, h) = (x.f.values(), x.h.values());
    let fp = spectral_derivative(&x.f);
    let hp = spectral_derivative(&x.h);
    let (fp, hp) = (fp.values(), hp.values());
    let n = grid.n_points();

    let bf = bcal(f, &x.f, fp);
    let bh = bcal(h, &x.h, hp);

    let hhp: Vec<f64> = h.iter().zip(hp).map(|(a, b)| a * b).collect();
    let (cu, du) = layer1_multi(false, x, &[hp, &hhp]);
    let ffp: Vec<f64> = f.iter().zip(fp).map(|(a, b)| a * b).collect();
    let (cl, dl) = layer1_multi(true, x, &[fp, &ffp]);

    let mut phi1 = vec![0.0; n];
    let mut phi2 = vec![0.0; n];
    for i in 0..n {
        let cross1 = (c + f[i]) * fp[i] * cu[0][i] - fp[i] * cu[1][i] + du[0][i];
        phi1[i] = th1 * bf[i] + th2 / PI * cross1;
        let cross2 = (h[i] - c) * hp[i] * cl[0][i] - hp[i] * cl[1][i] + dl[0][i];
        phi2[i] = th2 * bh[i] + th1 / PI * cross2;
    }
    Ok((GridFunction::new(grid, phi1)?, GridFunction::new(grid, phi2)?))
}

/// `B(u)[u']` at the nodes.
fn bcal(u: &[f64], grid_of: &GridFunction, up: &[f64]) -> Vec<f64> {
    let (b01, b11) = b0_pair(u, grid_of, &[up]);
    (0..u.len()).map(|i| (b01[0][i] + up[i] * b11[0][i]) / PI).collect()
}

/// Upper-interface velocity `th1 B(f)[f']` of the classical two-phase
/// problem; valid only when the lower interface carries no density jump.
pub fn two_phase_reduction(x: &InterfaceState) -> Result<GridFunction> {
    if x.params.theta2() != 0.0 {
        return Err(Error::Precondition(format!(
            "theta2 = 0 (rho2 == rho3), got theta2 = {}",
            x.params.theta2()
        )));
    }
    let fp = spectral_derivative(&x.f);
    let b = bcal(x.f.values(), &x.f, fp.values());
    GridFunction::new(x.grid(), b.into_iter().map(|v| x.params.theta1() * v).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid_spectral::Grid;
    use crate::state::PhysicalParams;

    #[test]
    fn gap_and_admissibility() {
        let g = Grid::new(32, 2.0 * PI).unwrap();
        let p = PhysicalParams::from_thetas(-0.5, -0.5, 1.0).unwrap();
        let x = InterfaceState::new(
            GridFunction::from_fn(g, |x| -0.5 * x.cos()),
            GridFunction::from_fn(g, |x| 0.5 * x.cos()),
            p,
        )
        .unwrap();
        assert!(admissibility_gap(&x).abs() < 1e-15);
        match check_admissible(&x) {
            Err(Error::Inadmissible { node, .. }) => assert_eq!(node, 16),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn flat_state_is_an_equilibrium() {
        let g = Grid::new(64, 2.0 * PI).unwrap();
        let p = PhysicalParams::from_thetas(-0.3, -0.7, 0.8).unwrap();
        let (a, b) = compute_phi(&InterfaceState::flat(g, p)).unwrap();
        assert_eq!(a.max_abs(), 0.0);
        assert_eq!(b.max_abs(), 0.0);
    }
}
