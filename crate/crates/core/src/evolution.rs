//! Time integration of `dX/dt = Phi(X)` with admissibility guards and
//! blow-up monitors.

use log::{debug, info};
use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field_eval::{velocity_trace, Interface, Side};
use crate::grid_spectral::{mode_energy, sobolev_norm, GridFunction, SobolevIndex};
use crate::muskat_rhs::{admissibility_gap, check_admissible, compute_phi};
use crate::state::{InterfaceState, PhysicalParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Rk4,
    Rk2Imex,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StepperConfig {
    pub method: Method,
    pub dt_initial: f64,
    pub dt_min: f64,
    pub cfl_safety: f64,
    pub t_end: f64,
    pub gap_floor: f64,
    pub norm_ceiling: f64,
    pub monitor_r: f64,
}

impl Default for StepperConfig {
    fn default() -> Self {
        Self {
            method: Method::Rk4,
            dt_initial: 1e-2,
            dt_min: 1e-10,
            cfl_safety: 0.9,
            t_end: 1.0,
            gap_floor: 1e-3,
            norm_ceiling: 1e6,
            monitor_r: 1.5,
        }
    }
}

impl StepperConfig {
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        for (name, v) in [
            ("dt_initial", self.dt_initial),
            ("dt_min", self.dt_min),
            ("cfl_safety", self.cfl_safety),
            ("t_end", self.t_end),
            ("gap_floor", self.gap_floor),
            ("norm_ceiling", self.norm_ceiling),
        ] {
            if !(v.is_finite() && v > 0.0) {
                out.push(format!("stepper.{name} must be positive and finite (got {v})"));
            }
        }
        if self.dt_min > self.dt_initial {
            out.push(format!(
                "stepper.dt_min ({}) must not exceed stepper.dt_initial ({})",
                self.dt_min, self.dt_initial
            ));
        }
        if SobolevIndex::new(self.monitor_r).is_err() {
            out.push(format!("stepper.monitor_r must lie in [0, 2] (got {})", self.monitor_r));
        }
        out
    }

    pub fn sobolev_index(&self) -> Result<SobolevIndex> {
        SobolevIndex::new(self.monitor_r)
    }
}

/// Largest admissible step: `cfl_safety h / (|th1| + |th2|)`.
pub fn cfl_dt(x: &InterfaceState, config: &StepperConfig) -> f64 {
    let speed = x.params.theta1().abs() + x.params.theta2().abs();
    let bound = if speed > 0.0 { config.cfl_safety * x.grid().spacing() / speed } else { f64::INFINITY };
    config.dt_initial.min(bound)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Rejection {
    GapFloor,
    NonFinite,
}

/// A single attempt with step `dt`, without retries.
pub fn try_step(
    x: &InterfaceState,
    dt: f64,
    config: &StepperConfig,
) -> std::result::Result<InterfaceState, Rejection> {
    let next = match config.method {
        Method::Rk4 => rk4(x, dt),
        Method::Rk2Imex => imex(x, dt),
    };
    match next {
        Ok(s) if !s.is_finite() => Err(Rejection::NonFinite),
        Ok(s) if admissibility_gap(&s) <= config.gap_floor => Err(Rejection::GapFloor),
        Ok(s) => Ok(s),
        Err(Error::Inadmissible { .. }) => Err(Rejection::GapFloor),
        Err(_) => Err(Rejection::NonFinite),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum StepOutcome {
    Accepted { state: InterfaceState, dt: f64, rejections: u32 },
    /// Halving fell below `dt_min`; the input state is the last good one.
    Underflow { reason: Rejection, dt: f64 },
}

/// One accepted step, halving `dt` on rejection.
pub fn step(x: &InterfaceState, dt: f64, config: &StepperConfig) -> Result<StepOutcome> {
    check_admissible(x)?;
    let mut dt = dt;
    let mut rejections = 0;
    loop {
        match try_step(x, dt, config) {
            Ok(state) => return Ok(StepOutcome::Accepted { state, dt, rejections }),
            Err(reason) => {
                rejections += 1;
                dt *= 0.5;
                debug!("step rejected ({reason:?}); retrying with dt = {dt:e}");
                if dt < config.dt_min {
                    return Ok(StepOutcome::Underflow { reason, dt });
                }
            }
        }
    }
}

fn axpy(x: &InterfaceState, a: f64, k: &(GridFunction, GridFunction)) -> InterfaceState {
    InterfaceState {
        f: x.f.zip_map(&k.0, |u, v| u + a * v),
        h: x.h.zip_map(&k.1, |u, v| u + a * v),
        params: x.params,
    }
}

/// `Phi` without its Nyquist component. No odd symbol sees that mode, so
/// nothing would damp what the nonlinear products leave in it.
fn rhs(x: &InterfaceState) -> Result<(GridFunction, GridFunction)> {
    let (p1, p2) = compute_phi(x)?;
    let nyquist = x.grid().n_points() / 2;
    let drop = |u: &GridFunction| u.multiplier(|_, m| Complex64::new(if m == nyquist { 0.0 } else { 1.0 }, 0.0));
    Ok((drop(&p1), drop(&p2)))
}

fn rk4(x: &InterfaceState, dt: f64) -> Result<InterfaceState> {
    let k1 = rhs(x)?;
    let k2 = rhs(&axpy(x, 0.5 * dt, &k1))?;
    let k3 = rhs(&axpy(x, 0.5 * dt, &k2))?;
    let k4 = rhs(&axpy(x, dt, &k3))?;
    let comb = |a: &GridFunction, b: &GridFunction, c: &GridFunction, d: &GridFunction, y: &GridFunction| {
        let vals = (0..y.len())
            .map(|i| {
                let incr = a.values()[i] + 2.0 * b.values()[i] + 2.0 * c.values()[i] + d.values()[i];
                y.values()[i] + dt / 6.0 * incr
            })
            .collect();
        GridFunction::new(y.grid(), vals)
    };
    Ok(InterfaceState {
        f: comb(&k1.0, &k2.0, &k3.0, &k4.0, &x.f)?,
        h: comb(&k1.1, &k2.1, &k3.1, &k4.1, &x.h)?,
        params: x.params,
    })
}

/// Second-order L-stable IMEX Runge-Kutta (two implicit stages, stiffly
/// accurate) with the flat-state diagonal `th_i |xi|` taken implicitly.
fn imex(x: &InterfaceState, dt: f64) -> Result<InterfaceState> {
    let gamma = 1.0 - 0.5 * 2f64.sqrt();
    let delta = 1.0 - 0.5 / gamma;
    let th = [x.params.theta1(), x.params.theta2()];
    let stiff = |u: &GridFunction, t: f64| u.multiplier(|xi, _| Complex64::new(t * xi.abs(), 0.0));
    let solve = |u: &GridFunction, t: f64| {
        u.multiplier(|xi, _| Complex64::new(1.0 / (1.0 - gamma * dt * t * xi.abs()), 0.0))
    };
    let explicit = |s: &InterfaceState| -> Result<[GridFunction; 2]> {
        let (p1, p2) = rhs(s)?;
        Ok([&p1 - &stiff(&s.f, th[0]), &p2 - &stiff(&s.h, th[1])])
    };
    let comps = |s: &InterfaceState| [s.f.clone(), s.h.clone()];

    let n0 = explicit(x)?;
    let y0 = comps(x);
    let y1: Vec<GridFunction> = (0..2)
        .map(|i| solve(&y0[i].zip_map(&n0[i], |a, b| a + gamma * dt * b), th[i]))
        .collect();
    let s1 = InterfaceState { f: y1[0].clone(), h: y1[1].clone(), params: x.params };
    let n1 = explicit(&s1)?;
    let y2: Vec<GridFunction> = (0..2)
        .map(|i| {
            let l1 = stiff(&y1[i], th[i]);
            let rhs = (0..y0[i].len())
                .map(|j| {
                    y0[i].values()[j]
                        + dt * ((1.0 - gamma) * l1.values()[j]
                            + delta * n0[i].values()[j]
                            + (1.0 - delta) * n1[i].values()[j])
                })
                .collect();
            Ok(solve(&GridFunction::new(y0[i].grid(), rhs)?, th[i]))
        })
        .collect::<Result<_>>()?;
    Ok(InterfaceState { f: y2[0].clone(), h: y2[1].clone(), params: x.params })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Completed,
    ContactSuspected,
    NormBlowupSuspected,
    StiffnessAbort,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MonitorRow {
    pub t: f64,
    pub dt: f64,
    pub gap: f64,
    pub dist: f64,
    pub hnorm_f: f64,
    pub hnorm_h: f64,
    pub mean_f: f64,
    pub mean_h: f64,
    pub himode_frac: f64,
    pub surface_area: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub step: usize,
    pub t: f64,
    pub f: GridFunction,
    pub h: GridFunction,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunRecord {
    pub rows: Vec<MonitorRow>,
    pub snapshots: Vec<Snapshot>,
}

/// Window `[x0 - delta, x0 + delta]` watched for a collapsing layer; `c1`
/// bounds the horizontal speed and is estimated from the final state when
/// absent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SquirtDiagnosticSpec {
    pub x0: f64,
    pub delta: f64,
    pub c1: Option<f64>,
}

impl Default for SquirtDiagnosticSpec {
    fn default() -> Self {
        Self { x0: 0.0, delta: 1.0, c1: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[derive(Default)]
pub struct RunOptions {
    /// Keep every `snapshot_stride`-th accepted state; the first and last
    /// states are always kept. Zero keeps only those two.
    pub snapshot_stride: usize,
    pub window: SquirtDiagnosticSpec,
}


#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub status: RunStatus,
    pub record: RunRecord,
    pub final_state: InterfaceState,
    pub steps: usize,
}

pub fn monitor_row(x: &InterfaceState, t: f64, dt: f64, r: SobolevIndex, window: &SquirtDiagnosticSpec) -> MonitorRow {
    let (hf, tf) = mode_energy(&x.f);
    let (hh, th) = mode_energy(&x.h);
    let total = tf + th;
    MonitorRow {
        t,
        dt,
        gap: admissibility_gap(x),
        dist: interface_distance(x),
        hnorm_f: sobolev_norm(&x.f, r),
        hnorm_h: sobolev_norm(&x.h, r),
        mean_f: x.f.mean(),
        mean_h: x.h.mean(),
        himode_frac: if total > 0.0 { (hf + hh) / total } else { 0.0 },
        surface_area: window_area(x, window.x0, window.delta),
    }
}

/// `int_{x0 - r}^{x0 + r} (c_inf + f - h) dx`.
fn window_area(x: &InterfaceState, x0: f64, r: f64) -> f64 {
    let gap = x.f.zip_map(&x.h, |a, b| x.c_inf() + a - b);
    gap.interpolant().integral(x0 - r, x0 + r)
}

/// Integrates from `x0` until `t_end`, a gap-floor breach, an `H^r` norm
/// above the ceiling or a step-size underflow.
pub fn run(x0: &InterfaceState, config: &StepperConfig, options: &RunOptions) -> Result<RunOutcome> {
    check_admissible(x0)?;
    let problems = config.violations();
    if !problems.is_empty() {
        return Err(Error::InvalidParameter(problems.join("; ")));
    }
    let r = config.sobolev_index()?;
    let dt_target = cfl_dt(x0, config);
    let mut x = x0.clone();
    let mut t = 0.0;
    let mut steps = 0;
    let mut record = RunRecord::default();
    record.rows.push(monitor_row(&x, t, 0.0, r, &options.window));
    record.snapshots.push(Snapshot { step: 0, t, f: x.f.clone(), h: x.h.clone() });
    let mut status = RunStatus::Completed;
    while config.t_end - t > 1e-12 * config.t_end {
        let dt = dt_target.min(config.t_end - t);
        match step(&x, dt, config)? {
            StepOutcome::Accepted { state, dt, .. } => {
                x = state;
                t += dt;
                steps += 1;
                let row = monitor_row(&x, t, dt, r, &options.window);
                record.rows.push(row);
                if options.snapshot_stride > 0 && steps % options.snapshot_stride == 0 {
                    record.snapshots.push(Snapshot { step: steps, t, f: x.f.clone(), h: x.h.clone() });
                }
                if row.hnorm_f.max(row.hnorm_h) > config.norm_ceiling {
                    status = RunStatus::NormBlowupSuspected;
                    break;
                }
            }
            StepOutcome::Underflow { reason, dt } => {
                info!("step size {dt:e} below dt_min at t = {t}: {reason:?}");
                status = match reason {
                    Rejection::GapFloor => RunStatus::ContactSuspected,
                    Rejection::NonFinite => RunStatus::StiffnessAbort,
                };
                break;
            }
        }
    }
    if record.snapshots.last().map(|s| s.step) != Some(steps) {
        record.snapshots.push(Snapshot { step: steps, t, f: x.f.clone(), h: x.h.clone() });
    }
    Ok(RunOutcome { status, record, final_state: x, steps })
}

/// Minimal Euclidean distance between the two interfaces, periodic in `x`.
///
/// The minimum over node pairs is polished by Newton iterations on the
/// trigonometric interpolants.
pub fn interface_distance(x: &InterfaceState) -> f64 {
    let grid = x.grid();
    let n = grid.n_points();
    let c = x.c_inf();
    let nodes = grid.nodes();
    let (f, h) = (x.f.values(), x.h.values());
    let mut cands: Vec<(f64, usize, usize)> = Vec::new();
    for i in 0..n {
        let mut best = (f64::INFINITY, 0);
        for k in 0..n {
            let dx = grid.wrap(nodes[i] - nodes[k]);
            let dy = c + f[i] - h[k];
            let d2 = dx * dx + dy * dy;
            if d2 < best.0 {
                best = (d2, k);
            }
        }
        cands.push((best.0, i, best.1));
    }
    cands.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut result = cands[0].0;
    let fi = x.f.interpolant();
    let hi = x.h.interpolant();
    for &(_, i, k) in cands.iter().take(3) {
        let mut s = nodes[i];
        let mut tt = s - grid.wrap(nodes[i] - nodes[k]);
        let eval = |s: f64, t: f64| {
            let dy = c + fi.value(s) - hi.value(t);
            (s - t) * (s - t) + dy * dy
        };
        let mut cur = eval(s, tt);
        for _ in 0..20 {
            let (f0, f1, f2) = (fi.value(s), fi.derivative(s, 1), fi.derivative(s, 2));
            let (h0, h1, h2) = (hi.value(tt), hi.derivative(tt, 1), hi.derivative(tt, 2));
            let dx = s - tt;
            let dy = c + f0 - h0;
            let gs = dx + dy * f1;
            let gt = -dx - dy * h1;
            let hss = 1.0 + f1 * f1 + dy * f2;
            let htt = 1.0 + h1 * h1 - dy * h2;
            let hst = -1.0 - f1 * h1;
            let det = hss * htt - hst * hst;
            let (mut ds, mut dt) = if det > 0.0 && hss > 0.0 {
                (-(htt * gs - hst * gt) / det, -(hss * gt - hst * gs) / det)
            } else {
                (-gs * grid.spacing(), -gt * grid.spacing())
            };
            let mut accepted = false;
            for _ in 0..30 {
                let trial = eval(s + ds, tt + dt);
                if trial < cur {
                    s += ds;
                    tt += dt;
                    cur = trial;
                    accepted = true;
                    break;
                }
                ds *= 0.5;
                dt *= 0.5;
            }
            if !accepted {
                break;
            }
        }
        result = result.min(cur);
    }
    result.sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SquirtReport {
    pub c1: f64,
    /// `(t, R(t), S(t))` at each usable snapshot.
    pub series: Vec<(f64, f64, f64)>,
    pub first_time: f64,
    pub nondecreasing: bool,
    pub final_min_gap: f64,
    /// Length of `{x in window : gap(x) <= 2 min gap}` at the final time.
    pub localization_width: f64,
    pub localized: bool,
}

/// Layer volume over a window shrinking backwards in time from the last
/// snapshot at the speed bound `c1`.
pub fn squirt_diagnostic(
    record: &RunRecord,
    spec: &SquirtDiagnosticSpec,
    params: &PhysicalParams,
) -> Result<SquirtReport> {
    let last = record
        .snapshots
        .last()
        .ok_or_else(|| Error::Precondition("a run record with snapshots".into()))?;
    if !(spec.delta > 0.0) {
        return Err(Error::InvalidParameter(format!("window half-width must be positive, got {}", spec.delta)));
    }
    let period = last.f.grid().period();
    if 2.0 * spec.delta > period {
        return Err(Error::InvalidParameter(format!(
            "window [x0 - {d}, x0 + {d}] is longer than the period {period}",
            d = spec.delta
        )));
    }
    let final_state = InterfaceState::new(last.f.clone(), last.h.clone(), *params)?;
    let c1 = match spec.c1 {
        Some(c) => c,
        None => speed_bound(&final_state)?,
    };
    let mut series = Vec::new();
    for snap in &record.snapshots {
        let r = spec.delta + c1 * (snap.t - last.t);
        if r <= 0.0 {
            continue;
        }
        let x = InterfaceState::new(snap.f.clone(), snap.h.clone(), *params)?;
        series.push((snap.t, r, window_area(&x, spec.x0, r)));
    }
    let scale = series.iter().fold(0.0f64, |m, s| m.max(s.2.abs())).max(1.0);
    let nondecreasing = series.windows(2).all(|w| w[1].2 >= w[0].2 - 1e-12 * scale);
    let gap = final_state.f.zip_map(&final_state.h, |a, b| params.c_inf + a - b).interpolant();
    let samples = 4000;
    let width = 2.0 * spec.delta;
    let values: Vec<f64> = (0..samples)
        .map(|j| gap.value(spec.x0 - spec.delta + width * (j as f64 + 0.5) / samples as f64))
        .collect();
    let min_gap = values.iter().copied().fold(f64::INFINITY, f64::min);
    let near = values.iter().filter(|&&g| g <= 2.0 * min_gap).count();
    let localization_width = width * near as f64 / samples as f64;
    Ok(SquirtReport {
        c1,
        first_time: series.first().map(|s| s.0).unwrap_or(last.t),
        series,
        nondecreasing,
        final_min_gap: min_gap,
        localization_width,
        localized: localization_width <= 0.5 * width,
    })
}

/// `max |v|` over the boundary of the middle layer, which bounds the speed
/// inside it.
pub fn speed_bound(x: &InterfaceState) -> Result<f64> {
    let mut m = 0.0f64;
    for (which, side) in [(Interface::Upper, Side::Below), (Interface::Lower, Side::Above)] {
        let (v1, v2) = velocity_trace(x, which, side)?;
        for (a, b) in v1.values().iter().zip(v2.values()) {
            m = m.max(a.hypot(*b));
        }
    }
    Ok(m)
}
