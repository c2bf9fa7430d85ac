//! Non-singular layer operators coupling the two interfaces.
//!
//! For states `X_i = (f_i, h_i)` and directions `Y_i = (u_i, v_i)` the
//! general operator is
//!
//! ```text
//! E_{n,m,p}[w](x) = int s^j w(x - s) prod_{i>m} dX_i prod_i dY_i / prod_{i<=m} (s^2 + dX_i^2) ds
//! ```
//!
//! with `j = 0` for `C` and `j = 1` for `D`, `dX = c_inf + f(x) - h(x - s)`
//! and `dY = u(x) - v(x - s)`. The primed kinds use `h(x) - c_inf - f(x - s)`
//! and `v(x) - u(x - s)`. The kernels never vanish on admissible states, so
//! the plain trapezoid rule over all nodes is spectrally accurate.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid_spectral::{spectral_derivative, GridFunction};
use crate::kernels::{poisson_flux, squared, Trig};
use crate::muskat_rhs::check_admissible;
use crate::quadrature::QuadratureScheme;
use crate::state::{Direction, InterfaceState};

pub use crate::kernels::{kernel_flux_periodized, kernel_poisson_periodized};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum LayerKind {
    C,
    CPrime,
    D,
    DPrime,
}

impl LayerKind {
    pub const ALL: [LayerKind; 4] = [LayerKind::C, LayerKind::CPrime, LayerKind::D, LayerKind::DPrime];

    pub fn is_primed(self) -> bool {
        matches!(self, LayerKind::CPrime | LayerKind::DPrime)
    }

    pub fn has_s_factor(self) -> bool {
        matches!(self, LayerKind::D | LayerKind::DPrime)
    }

    pub fn name(self) -> &'static str {
        match self {
            LayerKind::C => "C",
            LayerKind::CPrime => "C'",
            LayerKind::D => "D",
            LayerKind::DPrime => "D'",
        }
    }

    fn with_prime(primed: bool, s_factor: bool) -> Self {
        match (primed, s_factor) {
            (false, false) => LayerKind::C,
            (true, false) => LayerKind::CPrime,
            (false, true) => LayerKind::D,
            (true, true) => LayerKind::DPrime,
        }
    }
}

/// How the image sum of `s^j / prod (s^2 + d_i^2)` is formed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelRoute {
    /// Closed forms for `m <= 2`, image summation beyond.
    ClosedForm,
    /// Truncated symmetric image summation for every `m`.
    ImageSum,
}

/// `E_{n,m,p}(X_1..X_{m+p})[Y_1..Y_n, w]`.
#[derive(Debug, Clone)]
pub struct LayerRequest<'a> {
    pub kind: LayerKind,
    pub m: usize,
    pub states: Vec<&'a InterfaceState>,
    pub directions: Vec<&'a Direction>,
    pub density: &'a GridFunction,
}

impl<'a> LayerRequest<'a> {
    pub fn new(
        kind: LayerKind,
        m: usize,
        states: Vec<&'a InterfaceState>,
        directions: Vec<&'a Direction>,
        density: &'a GridFunction,
    ) -> Self {
        Self { kind, m, states, directions, density }
    }

    /// `E_m(X_1..X_m)[w]`.
    pub fn plain(kind: LayerKind, states: Vec<&'a InterfaceState>, density: &'a GridFunction) -> Self {
        let m = states.len();
        Self::new(kind, m, states, Vec::new(), density)
    }

    pub fn n(&self) -> usize {
        self.directions.len()
    }

    pub fn p(&self) -> usize {
        self.states.len().saturating_sub(self.m)
    }

    fn validate(&self) -> Result<()> {
        if self.m == 0 || self.states.len() < self.m {
            return Err(Error::InvalidParameter(format!(
                "layer request needs m >= 1 and at least m states (m = {}, {} states)",
                self.m,
                self.states.len()
            )));
        }
        let grid = self.density.grid();
        let c = self.states[0].c_inf();
        for s in &self.states {
            if s.grid() != grid {
                return Err(Error::GridMismatch { expected: grid.n_points(), found: s.f.len() });
            }
            if s.c_inf() != c {
                return Err(Error::InvalidParameter("states disagree on c_inf".into()));
            }
            check_admissible(s)?;
        }
        for d in &self.directions {
            if d.grid() != grid {
                return Err(Error::GridMismatch { expected: grid.n_points(), found: d.u.len() });
            }
        }
        Ok(())
    }
}

const COINCIDENT_TOL: f64 = 1e-8;

pub fn apply_layer(req: &LayerRequest) -> Result<GridFunction> {
    apply_layer_with(req, &QuadratureScheme::default(), KernelRoute::ClosedForm)
}

pub fn apply_layer_with(
    req: &LayerRequest,
    scheme: &QuadratureScheme,
    route: KernelRoute,
) -> Result<GridFunction> {
    req.validate()?;
    let grid = req.density.grid();
    let n = grid.n_points();
    let period = grid.period();
    let trig = Trig::table(n, period);
    let c = req.states[0].c_inf();
    let primed = req.kind.is_primed();
    let s_power = req.kind.has_s_factor() as i32;
    let w = req.density.values();
    let m = req.m;

    // Per state the pair (outer, inner) with dX(i, k) = outer[i] - inner[k].
    let gaps: Vec<(Vec<f64>, &[f64])> = req
        .states
        .iter()
        .map(|s| {
            if primed {
                (s.h.values().iter().map(|h| h - c).collect(), s.f.values())
            } else {
                (s.f.values().iter().map(|f| f + c).collect(), s.h.values())
            }
        })
        .collect();
    let dirs: Vec<(&[f64], &[f64])> = req
        .directions
        .iter()
        .map(|d| if primed { (d.v.values(), d.u.values()) } else { (d.u.values(), d.v.values()) })
        .collect();

    let mut d = vec![0.0; m];
    let mut out = vec![0.0; n];
    for (i, o) in out.iter_mut().enumerate() {
        let mut acc = 0.0;
        for k in 0..n {
            for (dl, (outer, inner)) in d.iter_mut().zip(&gaps) {
                *dl = outer[i] - inner[k];
            }
            let mut num = w[k];
            for (outer, inner) in &gaps[m..] {
                num *= outer[i] - inner[k];
            }
            for (a, b) in &dirs {
                num *= a[i] - b[k];
            }
            if num == 0.0 {
                continue;
            }
            let t = trig[(i + n - k) % n];
            let kern = match (route, m) {
                (KernelRoute::ClosedForm, 1) => pick(poisson_flux(t, d[0], period), s_power),
                (KernelRoute::ClosedForm, 2) => pair_kernel(t, d[0], d[1], period, s_power),
                _ => image_sum(grid.offset(i, k), period, s_power, &d, scheme.image_pairs),
            };
            acc += num * kern;
        }
        *o = grid.spacing() * acc;
    }
    GridFunction::new(grid, out)
}

fn pick(pair: (f64, f64), s_power: i32) -> f64 {
    if s_power == 0 {
        pair.0
    } else {
        pair.1
    }
}

/// Two factors: partial fractions, or the squared kernel when the
/// separations coincide.
fn pair_kernel(t: Trig, d1: f64, d2: f64, period: f64, s_power: i32) -> f64 {
    let (a, b) = (d1 * d1, d2 * d2);
    if (a - b).abs() <= COINCIDENT_TOL * a.max(b) {
        pick(squared(t, (0.5 * (a + b)).sqrt(), period), s_power)
    } else {
        let k1 = pick(poisson_flux(t, d1, period), s_power);
        let k2 = pick(poisson_flux(t, d2, period), s_power);
        (k1 - k2) / (b - a)
    }
}

fn image_sum(s: f64, period: f64, s_power: i32, d: &[f64], pairs: usize) -> f64 {
    let term = |t: f64| {
        let den: f64 = d.iter().map(|d| t * t + d * d).product();
        t.powi(s_power) / den
    };
    let mut sum = 0.0;
    for j in (1..=pairs).rev() {
        let jp = j as f64 * period;
        sum += term(s + jp) + term(s - jp);
    }
    sum + term(s)
}

/// `C_1` and `D_1` (or their primed forms) of one state applied to several
/// densities, sharing the kernel evaluations.
pub(crate) fn layer1_multi(
    primed: bool,
    state: &InterfaceState,
    densities: &[&[f64]],
) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    layer_multi(primed, state, densities, poisson_flux, 0)
}

/// `E_{0,2,1}(X, X, X)` for `C` and `D` (or primed), several densities.
pub(crate) fn layer2_multi(
    primed: bool,
    state: &InterfaceState,
    densities: &[&[f64]],
) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    layer_multi(primed, state, densities, squared, 1)
}

fn layer_multi(
    primed: bool,
    state: &InterfaceState,
    densities: &[&[f64]],
    kernels: impl Fn(Trig, f64, f64) -> (f64, f64),
    gap_power: i32,
) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let grid = state.grid();
    let n = grid.n_points();
    let period = grid.period();
    let h = grid.spacing();
    let trig = Trig::table(n, period);
    let c = state.c_inf();
    let (outer, inner): (Vec<f64>, &[f64]) = if primed {
        (state.h.values().iter().map(|v| v - c).collect(), state.f.values())
    } else {
        (state.f.values().iter().map(|v| v + c).collect(), state.h.values())
    };
    let nd = densities.len();
    let mut cs = vec![vec![0.0; n]; nd];
    let mut ds = vec![vec![0.0; n]; nd];
    let mut acc_c = vec![0.0; nd];
    let mut acc_d = vec![0.0; nd];
    for i in 0..n {
        acc_c.iter_mut().for_each(|a| *a = 0.0);
        acc_d.iter_mut().for_each(|a| *a = 0.0);
        for k in 0..n {
            let d = outer[i] - inner[k];
            let (kc, kd) = kernels(trig[(i + n - k) % n], d, period);
            let scale = d.powi(gap_power);
            let (kc, kd) = (kc * scale, kd * scale);
            for j in 0..nd {
                let wk = densities[j][k];
                acc_c[j] += kc * wk;
                acc_d[j] += kd * wk;
            }
        }
        for j in 0..nd {
            cs[j][i] = h * acc_c[j];
            ds[j][i] = h * acc_d[j];
        }
    }
    (cs, ds)
}

/// `d/dt E^n_{m,p}(X + tY)[Y_1..Y_n, w]` at `t = 0`, which equals
/// `p E^{n+1}_{m,p-1}(X)[Y_1..Y_n, Y, w] - 2m E^{n+1}_{m+1,p+1}(X)[Y_1..Y_n, Y, w]`.
#[allow(clippy::too_many_arguments)]
pub fn frechet_layer(
    kind: LayerKind,
    m: usize,
    p: usize,
    base: &InterfaceState,
    directions: &[&Direction],
    dir: &Direction,
    density: &GridFunction,
) -> Result<GridFunction> {
    if m == 0 {
        return Err(Error::InvalidParameter("m must be at least 1".into()));
    }
    let mut dirs: Vec<&Direction> = directions.to_vec();
    dirs.push(dir);
    let second = LayerRequest::new(kind, m + 1, vec![base; m + p + 2], dirs.clone(), density);
    let mut out = apply_layer(&second)?.scale(-2.0 * m as f64);
    if p > 0 {
        let first = LayerRequest::new(kind, m, vec![base; m + p - 1], dirs, density);
        out = &out + &apply_layer(&first)?.scale(p as f64);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentityEntry {
    pub name: String,
    /// Sup-norm of the difference of the two sides.
    pub residual: f64,
    /// Sup-norm of the left-hand side.
    pub scale: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct IdentityReport {
    pub entries: Vec<IdentityEntry>,
}

impl IdentityReport {
    pub fn max_residual(&self) -> f64 {
        self.entries.iter().fold(0.0, |m, e| m.max(e.residual))
    }

    fn push(&mut self, name: String, lhs: &GridFunction, rhs: &GridFunction) {
        self.entries.push(IdentityEntry { name, residual: (lhs - rhs).max_abs(), scale: lhs.max_abs() });
    }
}

/// Checks the algebraic and differential identities of the `m = 1`
/// operators at `x` and `x_tilde` for the density `w`.
pub fn identity_report(
    x: &InterfaceState,
    x_tilde: &InterfaceState,
    w: &GridFunction,
) -> Result<IdentityReport> {
    let mut report = IdentityReport::default();
    let c = x.c_inf();
    let g = w.grid();
    let one = |v: f64| GridFunction::constant(g, v);
    let (f, h) = (&x.f, &x.h);
    let (ft, ht) = (&x_tilde.f, &x_tilde.h);
    let fp = spectral_derivative(f);
    let hp = spectral_derivative(h);
    let wp = spectral_derivative(w);
    let cf = &one(c) + f;
    let hc = h - &one(c);
    let e = |kind: LayerKind, states: Vec<&InterfaceState>, dens: &GridFunction| {
        apply_layer(&LayerRequest::plain(kind, states, dens))
    };

    let sum_f = &(&one(2.0 * c) + ft) + f;
    let dif_f = ft - f;
    let sum_h = ht + h;
    let dif_h = ht - h;
    let dif_h2 = &(ht * ht) - &(h * h);
    for kind in LayerKind::ALL {
        let lhs = &e(kind, vec![x], w)? - &e(kind, vec![x_tilde], w)?;
        let e2 = |dens: &GridFunction| e(kind, vec![x_tilde, x], dens);
        let rhs = if kind.is_primed() {
            let t1 = &dif_h2 * &e2(w)?;
            let t2 = &dif_h * &e2(&(&sum_f * w))?;
            let t3 = &sum_h * &e2(&(&dif_f * w))?;
            let t4 = e2(&(&(&sum_f * &dif_f) * w))?;
            &(&(&t1 - &t2) - &t3) + &t4
        } else {
            let t1 = &(&sum_f * &dif_f) * &e2(w)?;
            let t2 = &dif_f * &e2(&(&sum_h * w))?;
            let t3 = &sum_f * &e2(&(&dif_h * w))?;
            let t4 = e2(&(&dif_h2 * w))?;
            &(&(&t1 - &t2) - &t3) + &t4
        };
        report.push(format!("{} difference expansion", kind.name()), &lhs, &rhs);
    }

    for kind in LayerKind::ALL {
        let lhs = spectral_derivative(&e(kind, vec![x], w)?);
        let e2 = |dens: &GridFunction| e(kind, vec![x, x], dens);
        let bracket = if kind.is_primed() {
            let t1 = &(&hc * &hp) * &e2(w)?;
            let t2 = &hp * &e2(&(f * w))?;
            let t3 = &hc * &e2(&(&fp * w))?;
            let t4 = e2(&(&(f * &fp) * w))?;
            &(&(&t1 - &t2) - &t3) + &t4
        } else {
            let t1 = &(&cf * &fp) * &e2(w)?;
            let t2 = &fp * &e2(&(h * w))?;
            let t3 = &cf * &e2(&(&hp * w))?;
            let t4 = e2(&(&(h * &hp) * w))?;
            &(&(&t1 - &t2) - &t3) + &t4
        };
        let rhs = &e(kind, vec![x], &wp)? - &bracket.scale(2.0);
        report.push(format!("{} derivative", kind.name()), &lhs, &rhs);
    }

    for primed in [false, true] {
        let kc = LayerKind::with_prime(primed, false);
        let kd = LayerKind::with_prime(primed, true);
        let c2 = |dens: &GridFunction| e(kc, vec![x, x], dens);
        let d2 = |dens: &GridFunction| e(kd, vec![x, x], dens);
        // (outer factor, inner state function, its derivative)
        let (a, q, qp) = if primed { (&hc, f, &fp) } else { (&cf, h, &hp) };

        let lhs = e(kc, vec![x], &wp)?;
        let rhs = (&(&d2(w)? + &(a * &c2(&(qp * w))?)) - &c2(&(&(q * qp) * w))?).scale(-2.0);
        report.push(format!("{} integration by parts", kc.name()), &lhs, &rhs);

        let lhs = e(kd, vec![x], &wp)?;
        let gap2 = &(&(&(a * a) * &c2(w)?) - &(a * &c2(&(q * w))?).scale(2.0)) + &c2(&(&(q * q) * w))?;
        let flux = &(a * &d2(&(qp * w))?) - &d2(&(&(q * qp) * w))?;
        let rhs = &(&gap2.scale(2.0) - &flux.scale(2.0)) - &e(kc, vec![x], w)?;
        report.push(format!("{} integration by parts", kd.name()), &lhs, &rhs);
    }
    Ok(report)
}
