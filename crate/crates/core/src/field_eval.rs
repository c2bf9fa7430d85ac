//! Velocity and pressure in the three fluid layers.
//!
//! Off the interfaces the velocity is the sum of two periodized layer
//! integrals against `f'` and `h'`. Near an interface the integrand is
//! sharply peaked, so the interface data are spectrally refined until the
//! point lies at least eight fine spacings away. Traces on the interfaces
//! come from the principal-value operators plus the tangential jump.

use std::cell::OnceCell;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid_spectral::{spectral_derivative, GridFunction, TrigInterpolant};
use crate::kernels::{poisson_flux, Trig};
use crate::layer_potentials::layer1_multi;
use crate::muskat_rhs::check_admissible;
use crate::nonlocal_operators::b0_pair;
use crate::quadrature::{gauss_legendre, integrate_with};
use crate::state::InterfaceState;

/// Upper fluid, middle layer and lower fluid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Region {
    Upper,
    Middle,
    Lower,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Interface {
    /// `y = c_inf + f(x)`.
    Upper,
    /// `y = h(x)`.
    Lower,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Side {
    Above,
    Below,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FieldPoint {
    pub x: f64,
    pub y: f64,
    pub region: Region,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VelocitySample {
    pub v1: f64,
    pub v2: f64,
    pub p: Option<f64>,
}

/// Closest approach allowed, in units of the grid spacing.
pub const EXCLUSION: f64 = 0.1;
const MAX_REFINEMENT: usize = 64;
const SAFE_SPACINGS: f64 = 8.0;

struct Level {
    nodes: Vec<f64>,
    spacing: f64,
    values: Vec<f64>,
    slopes: Vec<f64>,
}

/// One interface with its refined copies.
struct Curve {
    offset: f64,
    interp: TrigInterpolant,
    base: GridFunction,
    levels: Vec<OnceCell<Level>>,
}

impl Curve {
    fn new(u: &GridFunction, offset: f64) -> Self {
        let levels = (0..=MAX_REFINEMENT.trailing_zeros()).map(|_| OnceCell::new()).collect();
        Self { offset, interp: u.interpolant(), base: u.clone(), levels }
    }

    fn y(&self, x: f64) -> f64 {
        self.offset + self.interp.value(x)
    }

    fn level(&self, factor: usize) -> &Level {
        self.levels[factor.trailing_zeros() as usize].get_or_init(|| {
            let fine = self.base.upsample(factor).expect("refinement of a valid grid");
            let slopes = spectral_derivative(&fine).into_values();
            let g = fine.grid();
            Level {
                nodes: g.nodes(),
                spacing: g.spacing(),
                values: fine.into_values().into_iter().map(|v| v + self.offset).collect(),
                slopes,
            }
        })
    }

    /// Euclidean distance from `(x, y)` with the periodic metric in `x`.
    fn distance(&self, x: f64, y: f64) -> f64 {
        let g = self.base.grid();
        let vals = self.base.values();
        let mut best = (f64::INFINITY, 0.0);
        for (k, xk) in g.nodes().into_iter().enumerate() {
            let dx = g.wrap(x - xk);
            let dy = y - self.offset - vals[k];
            let d2 = dx * dx + dy * dy;
            if d2 < best.0 {
                best = (d2, x - dx);
            }
        }
        let dist2 = |s: f64| {
            let dy = y - self.y(s);
            (x - s) * (x - s) + dy * dy
        };
        let h = g.spacing();
        let (mut a, mut b) = (best.1 - h, best.1 + h);
        let r = 0.5 * (5f64.sqrt() - 1.0);
        let (mut c, mut d) = (b - r * (b - a), a + r * (b - a));
        let (mut fc, mut fd) = (dist2(c), dist2(d));
        for _ in 0..60 {
            if fc < fd {
                b = d;
                d = c;
                fd = fc;
                c = b - r * (b - a);
                fc = dist2(c);
            } else {
                a = c;
                c = d;
                fc = fd;
                d = a + r * (b - a);
                fd = dist2(d);
            }
        }
        best.0.min(fc).min(fd).sqrt()
    }
}

/// Velocity and pressure of one admissible state.
pub struct FieldEvaluator {
    state: InterfaceState,
    upper: Curve,
    lower: Curve,
    pressure_constants: OnceCell<Result<[f64; 3]>>,
    vertical_traces: [OnceCell<Result<TrigInterpolant>>; 4],
}

impl FieldEvaluator {
    pub fn new(state: &InterfaceState) -> Result<Self> {
        check_admissible(state)?;
        Ok(Self {
            upper: Curve::new(&state.f, state.c_inf()),
            lower: Curve::new(&state.h, 0.0),
            state: state.clone(),
            pressure_constants: OnceCell::new(),
            vertical_traces: Default::default(),
        })
    }

    pub fn state(&self) -> &InterfaceState {
        &self.state
    }

    pub fn region(&self, x: f64, y: f64) -> Region {
        if y > self.upper.y(x) {
            Region::Upper
        } else if y < self.lower.y(x) {
            Region::Lower
        } else {
            Region::Middle
        }
    }

    pub fn point(&self, x: f64, y: f64) -> FieldPoint {
        FieldPoint { x, y, region: self.region(x, y) }
    }

    /// Distances from `(x, y)` to the upper and lower interfaces.
    pub fn distances(&self, x: f64, y: f64) -> (f64, f64) {
        (self.upper.distance(x, y), self.lower.distance(x, y))
    }

    fn refinement(&self, dist: f64) -> Result<usize> {
        let h = self.state.grid().spacing();
        if dist < EXCLUSION * h {
            return Err(Error::TooClose { distance: dist, limit: EXCLUSION * h });
        }
        let mut r = 1;
        while r < MAX_REFINEMENT && dist < SAFE_SPACINGS * h / r as f64 {
            r *= 2;
        }
        Ok(r)
    }

    /// `(v1, v2)` at a point off both interfaces.
    pub fn velocity(&self, x: f64, y: f64) -> Result<(f64, f64)> {
        let (du, dl) = self.distances(x, y);
        let ru = self.refinement(du)?;
        let rl = self.refinement(dl)?;
        let th1 = self.state.params.theta1();
        let th2 = self.state.params.theta2();
        let (a1, a2) = self.layer_velocity(self.upper.level(ru), x, y);
        let (b1, b2) = self.layer_velocity(self.lower.level(rl), x, y);
        Ok((th1 / PI * a1 + th2 / PI * b1, th1 / PI * a2 + th2 / PI * b2))
    }

    fn layer_velocity(&self, level: &Level, x: f64, y: f64) -> (f64, f64) {
        let period = self.state.grid().period();
        let g = self.state.grid();
        let mut v1 = 0.0;
        let mut v2 = 0.0;
        for k in 0..level.nodes.len() {
            let w = level.slopes[k];
            if w == 0.0 {
                continue;
            }
            let s = g.wrap(x - level.nodes[k]);
            let d = y - level.values[k];
            let (k0, k1) = poisson_flux(Trig::new(s, period), d, period);
            v1 -= d * k0 * w;
            v2 += k1 * w;
        }
        (level.spacing * v1, level.spacing * v2)
    }

    /// Velocity and pressure at a point.
    pub fn sample(&self, x: f64, y: f64) -> Result<VelocitySample> {
        let (v1, v2) = self.velocity(x, y)?;
        Ok(VelocitySample { v1, v2, p: Some(self.pressure(x, y)?) })
    }

    /// Pressure at a point, with the additive constants fixed so that it is
    /// continuous across both interfaces above `x = 0`.
    pub fn pressure(&self, x: f64, y: f64) -> Result<f64> {
        let consts = self.constants()?;
        let region = self.region(x, y);
        Ok(self.pressure_raw(region, x, y)? + consts[index(region)])
    }

    /// One-sided pressure on an interface.
    pub fn pressure_on_interface(&self, which: Interface, side: Side, x: f64) -> Result<f64> {
        let consts = self.constants()?;
        let region = region_of(which, side);
        Ok(self.pressure_raw_on_interface(which, side, x)? + consts[index(region)])
    }

    /// Pressure of `region` at `(x, y)` along a different route: vertically
    /// from the region's base point onto the curve `path`, along it from
    /// `x = 0`, then vertically again. `path` returns `(y, dy/dx)`.
    pub fn pressure_along<F>(&self, region: Region, x: f64, y: f64, path: F) -> Result<f64>
    where
        F: Fn(f64) -> (f64, f64),
    {
        let consts = self.constants()?;
        let start = self.reference(region)(0.0).0;
        let horizontal = self.vertical_integral(0.0, start, path(0.0).0)? + self.path_integral(0.0, x, &path)?;
        let (y0, _) = path(x);
        let vertical = self.vertical_integral(x, y0, y)?;
        Ok(self.hydrostatic(region, horizontal + vertical, y) + consts[index(region)])
    }

    fn constants(&self) -> Result<[f64; 3]> {
        self.pressure_constants
            .get_or_init(|| {
                let p1 = self.pressure_raw_on_interface(Interface::Upper, Side::Above, 0.0)?;
                let p2u = self.pressure_raw_on_interface(Interface::Upper, Side::Below, 0.0)?;
                let p2l = self.pressure_raw_on_interface(Interface::Lower, Side::Above, 0.0)?;
                let p3 = self.pressure_raw_on_interface(Interface::Lower, Side::Below, 0.0)?;
                Ok([p2u - p1, 0.0, p2l - p3])
            })
            .clone()
    }

    fn density(&self, region: Region) -> f64 {
        let p = &self.state.params;
        match region {
            Region::Upper => p.rho1,
            Region::Middle => p.rho2,
            Region::Lower => p.rho3,
        }
    }

    fn hydrostatic(&self, region: Region, work: f64, y: f64) -> f64 {
        let p = &self.state.params;
        -(p.mu / p.k) * work - self.density(region) * p.g * y
    }

    /// `(d(s), d'(s))` of the reference curve of a region.
    fn reference(&self, region: Region) -> impl Fn(f64) -> (f64, f64) + '_ {
        let c = self.state.c_inf();
        let top = self.state.f.max_abs() + c + 1.0;
        let bottom = -self.state.h.max_abs() - 1.0;
        move |s: f64| match region {
            Region::Upper => (top, 0.0),
            Region::Lower => (bottom, 0.0),
            Region::Middle => (
                0.5 * (self.upper.y(s) + self.lower.y(s)),
                0.5 * (self.upper.interp.derivative(s, 1) + self.lower.interp.derivative(s, 1)),
            ),
        }
    }

    fn pressure_raw(&self, region: Region, x: f64, y: f64) -> Result<f64> {
        let path = self.reference(region);
        let horizontal = self.path_integral(0.0, x, &path)?;
        let vertical = self.vertical_integral(x, path(x).0, y)?;
        Ok(self.hydrostatic(region, horizontal + vertical, y))
    }

    fn pressure_raw_on_interface(&self, which: Interface, side: Side, x: f64) -> Result<f64> {
        let region = region_of(which, side);
        let path = self.reference(region);
        let horizontal = self.path_integral(0.0, x, &path)?;
        let curve = match which {
            Interface::Upper => &self.upper,
            Interface::Lower => &self.lower,
        };
        let y_end = curve.y(x);
        let y0 = path(x).0;
        let dir = (y_end - y0).signum();
        let eta = 2.0 * EXCLUSION * self.state.grid().spacing();
        let y_stop = y_end - dir * eta;
        let mut vertical = self.vertical_integral(x, y0, y_stop)?;
        let trace = self.vertical_trace(which, side)?.value(x);
        let before = self.velocity(x, y_stop)?.1;
        // The remaining sliver by the trapezoid rule against the trace.
        vertical += 0.5 * (y_end - y_stop) * (before + trace);
        Ok(self.hydrostatic(region, horizontal + vertical, y_end))
    }

    fn vertical_trace(&self, which: Interface, side: Side) -> Result<&TrigInterpolant> {
        let slot = 2 * (which == Interface::Lower) as usize + (side == Side::Below) as usize;
        self.vertical_traces[slot]
            .get_or_init(|| Ok(velocity_trace(&self.state, which, side)?.1.interpolant()))
            .as_ref()
            .map_err(Clone::clone)
    }

    fn path_integral(&self, a: f64, b: f64, path: &dyn Fn(f64) -> (f64, f64)) -> Result<f64> {
        if a == b {
            return Ok(0.0);
        }
        let (x, w) = gauss_legendre(16);
        let panels = ((b - a).abs() / 0.25).ceil().max(1.0) as usize;
        integrate_with(
            |s| {
                let (d, dp) = path(s);
                let (v1, v2) = self.velocity(s, d)?;
                Ok(v1 + dp * v2)
            },
            a,
            b,
            panels,
            &x,
            &w,
        )
    }

    fn vertical_integral(&self, x: f64, y0: f64, y1: f64) -> Result<f64> {
        if y0 == y1 {
            return Ok(0.0);
        }
        let (nodes, w) = gauss_legendre(16);
        let panels = ((y1 - y0).abs() / 0.1).ceil().max(1.0) as usize;
        integrate_with(|y| Ok(self.velocity(x, y)?.1), y0, y1, panels, &nodes, &w)
    }
}

fn region_of(which: Interface, side: Side) -> Region {
    match (which, side) {
        (Interface::Upper, Side::Above) => Region::Upper,
        (Interface::Upper, Side::Below) | (Interface::Lower, Side::Above) => Region::Middle,
        (Interface::Lower, Side::Below) => Region::Lower,
    }
}

fn index(region: Region) -> usize {
    match region {
        Region::Upper => 0,
        Region::Middle => 1,
        Region::Lower => 2,
    }
}

/// Velocity at `(z.x, z.y)`.
pub fn velocity_at(x: &InterfaceState, z: (f64, f64)) -> Result<VelocitySample> {
    let (v1, v2) = FieldEvaluator::new(x)?.velocity(z.0, z.1)?;
    Ok(VelocitySample { v1, v2, p: None })
}

/// Pressure at `(z.x, z.y)`.
pub fn pressure_at(x: &InterfaceState, z: (f64, f64)) -> Result<f64> {
    FieldEvaluator::new(x)?.pressure(z.0, z.1)
}

/// One-sided limits `(v1, v2)` of the velocity at the interface nodes.
pub fn velocity_trace(
    x: &InterfaceState,
    which: Interface,
    side: Side,
) -> Result<(GridFunction, GridFunction)> {
    check_admissible(x)?;
    let grid = x.grid();
    let n = grid.n_points();
    let c = x.c_inf();
    let th1 = x.params.theta1();
    let th2 = x.params.theta2();
    let (own, own_th, other_th, primed) = match which {
        Interface::Upper => (&x.f, th1, th2, false),
        Interface::Lower => (&x.h, th2, th1, true),
    };
    let other = if primed { &x.f } else { &x.h };
    let up = spectral_derivative(own);
    let op = spectral_derivative(other);
    let (b01, b11) = b0_pair(own.values(), own, &[up.values()]);
    let oop: Vec<f64> = other.values().iter().zip(op.values()).map(|(a, b)| a * b).collect();
    let (cs, ds) = layer1_multi(primed, x, &[op.values(), &oop]);
    let sign = match side {
        Side::Above => -1.0,
        Side::Below => 1.0,
    };
    let mut v1 = vec![0.0; n];
    let mut v2 = vec![0.0; n];
    for i in 0..n {
        let a = if primed { x.h.values()[i] - c } else { c + x.f.values()[i] };
        let cross1 = -(a * cs[0][i] - cs[1][i]);
        let cross2 = ds[0][i];
        let s = up.values()[i];
        let jump = sign * own_th * s / (1.0 + s * s);
        v1[i] = own_th / PI * (-b11[0][i]) + other_th / PI * cross1 + jump;
        v2[i] = own_th / PI * b01[0][i] + other_th / PI * cross2 + jump * s;
    }
    Ok((GridFunction::new(grid, v1)?, GridFunction::new(grid, v2)?))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FieldIdentityReport {
    pub step: f64,
    pub max_divergence: f64,
    pub max_curl: f64,
}

/// Central-difference divergence and curl of the velocity at `points`.
pub fn field_identities_probe(
    x: &InterfaceState,
    points: &[(f64, f64)],
    step: f64,
) -> Result<FieldIdentityReport> {
    let ev = FieldEvaluator::new(x)?;
    let mut report = FieldIdentityReport { step, max_divergence: 0.0, max_curl: 0.0 };
    for &(px, py) in points {
        let e = ev.velocity(px + step, py)?;
        let w = ev.velocity(px - step, py)?;
        let n = ev.velocity(px, py + step)?;
        let s = ev.velocity(px, py - step)?;
        let div = (e.0 - w.0 + n.1 - s.1) / (2.0 * step);
        let curl = (n.0 - s.0 - e.1 + w.1) / (2.0 * step);
        report.max_divergence = report.max_divergence.max(div.abs());
        report.max_curl = report.max_curl.max(curl.abs());
    }
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HolderProbeSpec {
    pub alpha: f64,
    pub region: Region,
    /// Pair separations, largest first.
    pub distances: Vec<f64>,
    pub samples: usize,
    /// Distance of the near-interface sample points from the interface.
    pub margin: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HolderReport {
    pub alpha: f64,
    /// `(separation, max |v(z) - v(z')| / |z - z'|^alpha)`.
    pub quotients: Vec<(f64, f64)>,
    pub sup_velocity: f64,
}

/// Holder quotients of the velocity over pairs of points in a region,
/// including pairs hugging its boundary.
pub fn holder_probe(x: &InterfaceState, spec: &HolderProbeSpec) -> Result<HolderReport> {
    let ev = FieldEvaluator::new(x)?;
    let grid = x.grid();
    let mut bases = Vec::new();
    for j in 0..spec.samples {
        let px = grid.origin() + (j as f64 + 0.5) * grid.period() / spec.samples as f64;
        let top = ev.upper.y(px);
        let bot = ev.lower.y(px);
        match spec.region {
            Region::Upper => {
                bases.push((px, top + spec.margin));
                bases.push((px, top + 0.5));
            }
            Region::Lower => {
                bases.push((px, bot - spec.margin));
                bases.push((px, bot - 0.5));
            }
            Region::Middle => {
                bases.push((px, top - spec.margin));
                bases.push((px, bot + spec.margin));
                bases.push((px, 0.5 * (top + bot)));
            }
        }
    }
    let mut sup = 0.0f64;
    let mut quotients = Vec::new();
    let values: Vec<(f64, f64)> = bases.iter().map(|&(a, b)| ev.velocity(a, b)).collect::<Result<_>>()?;
    for v in &values {
        sup = sup.max(v.0.hypot(v.1));
    }
    for &eta in &spec.distances {
        let mut q = 0.0f64;
        for (&(a, b), v) in bases.iter().zip(&values) {
            let w = ev.velocity(a + eta, b)?;
            sup = sup.max(w.0.hypot(w.1));
            q = q.max((w.0 - v.0).hypot(w.1 - v.1) / eta.powf(spec.alpha));
        }
        quotients.push((eta, q));
    }
    Ok(HolderReport { alpha: spec.alpha, quotients, sup_velocity: sup })
}
