//! Subcommand bodies. Each writes its artifacts plus `meta.json` and returns
//! the process exit code.

use std::f64::consts::PI;
use std::fmt;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use log::{info, warn};
use muskat_core::evolution::{
    interface_distance, run, speed_bound, squirt_diagnostic, RunOptions, RunRecord, RunStatus, Snapshot,
    SquirtReport,
};
use muskat_core::field_eval::FieldEvaluator;
use muskat_core::layer_potentials::{apply_layer, frechet_layer, identity_report, IdentityEntry};
use muskat_core::linear_analysis::{directional_derivative_fd, dispersion_scan, offdiag_derivative};
use muskat_core::{Direction, Error, GridFunction, InterfaceState, LayerKind, LayerRequest};
use serde::{Deserialize, Serialize};

use crate::artifacts::{
    field_path, list_snapshots, read_series, read_snapshot, snapshot_step, write_dispersion, write_field, write_json,
    write_series, write_snapshot, FieldRow,
};
use crate::config::{ConfigError, Profile, RunConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_CONTACT: i32 = 3;
pub const EXIT_BLOWUP: i32 = 4;
pub const EXIT_NUMERICAL: i32 = 5;

/// Rates and derivatives must match to this relative error.
pub const DISPERSION_TOL: f64 = 1e-3;
pub const JACOBIAN_TOL: f64 = 1e-6;
pub const ORDER_TOL: f64 = 0.1;
pub const IDENTITY_TOL: f64 = 1e-7;

#[derive(Debug)]
pub enum CliError {
    Config(ConfigError),
    Io(PathBuf, io::Error),
    Numerical(Error),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(e) => e.fmt(f),
            CliError::Io(p, e) => write!(f, "{}: {e}", p.display()),
            CliError::Numerical(e) => write!(f, "numerical failure: {e}"),
        }
    }
}

impl std::error::Error for CliError {}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Io(..) | CliError::Numerical(_) => EXIT_NUMERICAL,
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Config(e)
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Numerical(e)
    }
}

trait IoContext<T> {
    fn at(self, path: &Path) -> Result<T, CliError>;
}

impl<T> IoContext<T> for io::Result<T> {
    fn at(self, path: &Path) -> Result<T, CliError> {
        self.map_err(|e| CliError::Io(path.to_path_buf(), e))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorRecord {
    pub kind: String,
    pub message: String,
}

/// Self-describing record of one command; `config` alone reproduces it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Meta {
    pub command: String,
    pub version: String,
    pub config: RunConfig,
    #[serde(default)]
    pub args: serde_json::Value,
    pub status: String,
    pub exit_code: i32,
    pub steps: Option<usize>,
    pub t_final: Option<f64>,
    pub error: Option<ErrorRecord>,
    /// `(step, t)` of every snapshot written.
    #[serde(default)]
    pub snapshots: Vec<(usize, f64)>,
}

impl Meta {
    fn new(command: &str, config: &RunConfig, args: serde_json::Value) -> Self {
        Self {
            command: command.into(),
            version: env!("CARGO_PKG_VERSION").into(),
            config: config.clone(),
            args,
            status: "ok".into(),
            exit_code: EXIT_OK,
            steps: None,
            t_final: None,
            error: None,
            snapshots: Vec::new(),
        }
    }

    fn fail(&mut self, e: &CliError) {
        let kind = match e {
            CliError::Config(_) => "config",
            CliError::Io(..) => "io",
            CliError::Numerical(_) => "numerical",
        };
        self.status = "error".into();
        self.exit_code = e.exit_code();
        self.error = Some(ErrorRecord { kind: kind.into(), message: e.to_string() });
    }
}

/// Writes `meta.json`, recording `result` as an error when it failed.
fn finish(dir: &Path, mut meta: Meta, result: Result<i32, CliError>) -> Result<i32, CliError> {
    let code = match &result {
        Ok(code) => *code,
        Err(e) => {
            meta.fail(e);
            e.exit_code()
        }
    };
    if meta.error.is_none() {
        meta.exit_code = code;
    }
    let path = dir.join("meta.json");
    write_json(&path, &meta).at(&path)?;
    result
}

fn prepare(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).at(dir)
}

/// The config as echoed into `meta.json`: file profiles made absolute and
/// the output directory set to where the artifacts went.
fn echo(cfg: &RunConfig, base: &Path, out: &Path) -> RunConfig {
    let mut c = cfg.clone();
    for prof in [&mut c.initial.f, &mut c.initial.h] {
        if let Profile::File { path, .. } = prof {
            let full = if path.is_absolute() { path.clone() } else { base.join(&*path) };
            *path = fs::canonicalize(&full).unwrap_or(full);
        }
    }
    c.output.directory = out.to_path_buf();
    c
}

pub fn simulate(cfg: &RunConfig, base: &Path, out: &Path) -> Result<i32, CliError> {
    let x0 = cfg.initial_state(base)?;
    prepare(out)?;
    let mut meta = Meta::new("simulate", &echo(cfg, base, out), serde_json::Value::Null);
    let result = (|| {
        let opts = RunOptions { snapshot_stride: cfg.output.snapshot_stride, window: cfg.diagnostic };
        let outcome = run(&x0, &cfg.stepper, &opts)?;
        let series = out.join("series.csv");
        write_series(&series, &outcome.record.rows, cfg.output.series_stride).at(&series)?;
        for snap in &outcome.record.snapshots {
            write_snapshot(out, snap).at(out)?;
            meta.snapshots.push((snap.step, snap.t));
        }
        let last = outcome.record.rows.last().map(|r| r.t).unwrap_or(0.0);
        meta.steps = Some(outcome.steps);
        meta.t_final = Some(last);
        meta.status = serde_json::to_value(outcome.status)
            .ok()
            .and_then(|v| v.as_str().map(str::to_string))
            .unwrap_or_default();
        info!("{:?} after {} steps at t = {last}", outcome.status, outcome.steps);
        Ok(match outcome.status {
            RunStatus::Completed => EXIT_OK,
            RunStatus::ContactSuspected => EXIT_CONTACT,
            RunStatus::NormBlowupSuspected => EXIT_BLOWUP,
            RunStatus::StiffnessAbort => EXIT_NUMERICAL,
        })
    })();
    finish(out, meta, result)
}

pub fn dispersion(cfg: &RunConfig, base: &Path, modes: &[u32], eps: f64, out: &Path) -> Result<i32, CliError> {
    let v = cfg.violations(base);
    if !v.is_empty() {
        return Err(ConfigError::Invalid(v).into());
    }
    prepare(out)?;
    let args = serde_json::json!({ "modes": modes, "eps": eps });
    let mut meta = Meta::new("dispersion", &echo(cfg, base, out), args);
    let result = (|| {
        let rows = dispersion_scan(cfg.grid()?, &cfg.params(), modes, eps)?;
        let path = out.join("dispersion.csv");
        write_dispersion(&path, &rows).at(&path)?;
        let worst = rows.iter().flat_map(|r| r.relative_errors()).fold(0.0f64, f64::max);
        info!("dispersion: worst relative error {worst:e} over {} modes", rows.len());
        if worst <= DISPERSION_TOL {
            Ok(EXIT_OK)
        } else {
            warn!("dispersion mismatch {worst:e} exceeds {DISPERSION_TOL:e}");
            meta.status = "check_failed".into();
            Ok(EXIT_NUMERICAL)
        }
    })();
    finish(out, meta, result)
}

/// Smooth test direction built from the first few modes of the period.
fn probe_function(x: &InterfaceState, amplitude: f64, phase: f64) -> GridFunction {
    let xi = 2.0 * PI / x.grid().period();
    GridFunction::from_fn(x.grid(), |s| {
        amplitude * ((xi * s + phase).cos() + 0.5 * (2.0 * xi * s - phase).sin() + 0.25 * (3.0 * xi * s).cos())
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DerivativeCheck {
    pub name: String,
    pub rel_error: f64,
    /// `None` when the finite-difference error is at roundoff level.
    pub fd_order: Option<f64>,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JacobianReport {
    pub eps: f64,
    pub tolerance: f64,
    pub checks: Vec<DerivativeCheck>,
    pub pass: bool,
}

fn order_fit(hs: &[f64], errs: &[f64]) -> f64 {
    let n = hs.len() as f64;
    let xs: Vec<f64> = hs.iter().map(|h| h.ln()).collect();
    let ys: Vec<f64> = errs.iter().map(|e| e.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let num: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let den: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    num / den
}

fn derivative_check(
    name: &str,
    exact: &GridFunction,
    fd: &dyn Fn(f64) -> Result<GridFunction, Error>,
    eps: f64,
) -> Result<DerivativeCheck, Error> {
    let scale = exact.max_abs().max(1e-300);
    let rel_error = (&fd(eps)? - exact).max_abs() / scale;
    let steps = [4e-2, 2e-2, 1e-2];
    let errs: Vec<f64> = steps.iter().map(|&h| Ok((&fd(h)? - exact).max_abs())).collect::<Result<_, Error>>()?;
    let fd_order = if errs.iter().all(|&e| e > 1e-12 * scale) { Some(order_fit(&steps, &errs)) } else { None };
    let order_ok = fd_order.is_none_or(|o| (o - 2.0).abs() <= ORDER_TOL);
    Ok(DerivativeCheck { name: name.into(), rel_error, fd_order, pass: rel_error <= JACOBIAN_TOL && order_ok })
}

pub fn check_jacobian(cfg: &RunConfig, base: &Path, eps: f64, out: &Path) -> Result<i32, CliError> {
    let x = cfg.initial_state(base)?;
    prepare(out)?;
    let mut meta = Meta::new("check-jacobian", &echo(cfg, base, out), serde_json::json!({ "eps": eps }));
    let result = (|| {
        if !(eps.is_finite() && eps > 0.0) {
            return Err(CliError::Numerical(Error::InvalidParameter(format!("eps must be positive, got {eps}"))));
        }
        let mut checks = Vec::new();
        let v = probe_function(&x, 1.0, 0.3);
        let exact = offdiag_derivative(&x, &v)?;
        let dir = Direction::new(GridFunction::zeros(x.grid()), v)?;
        checks.push(derivative_check("offdiag", &exact, &|e| Ok(directional_derivative_fd(&x, &dir, e)?.0), eps)?);

        let y = Direction::new(probe_function(&x, 0.5, 1.1), probe_function(&x, 0.5, -0.4))?;
        let w = probe_function(&x, 1.0, 0.0).map(f64::exp);
        for kind in LayerKind::ALL {
            let exact = frechet_layer(kind, 1, 0, &x, &[], &y, &w)?;
            let fd = |e: f64| -> Result<GridFunction, Error> {
                let a = apply_layer(&LayerRequest::plain(kind, vec![&x.perturbed(&y, e)], &w))?;
                let b = apply_layer(&LayerRequest::plain(kind, vec![&x.perturbed(&y, -e)], &w))?;
                Ok((&a - &b).scale(0.5 / e))
            };
            checks.push(derivative_check(&format!("frechet_{kind:?}"), &exact, &fd, eps)?);
        }
        let pass = checks.iter().all(|c| c.pass);
        let report = JacobianReport { eps, tolerance: JACOBIAN_TOL, checks, pass };
        let path = out.join("jacobian.json");
        write_json(&path, &report).at(&path)?;
        if pass {
            Ok(EXIT_OK)
        } else {
            meta.status = "check_failed".into();
            Ok(EXIT_NUMERICAL)
        }
    })();
    finish(out, meta, result)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentitiesReport {
    pub entries: Vec<IdentityEntry>,
    pub max_residual: f64,
    pub tolerance: f64,
    pub pass: bool,
}

pub fn identities(cfg: &RunConfig, base: &Path, out: &Path) -> Result<i32, CliError> {
    let x = cfg.initial_state(base)?;
    prepare(out)?;
    let mut meta = Meta::new("identities", &echo(cfg, base, out), serde_json::Value::Null);
    let result = (|| {
        let dx = Direction::new(probe_function(&x, 0.02, 0.7), probe_function(&x, 0.02, -1.3))?;
        let xt = x.perturbed(&dx, 1.0);
        let w = probe_function(&x, 1.0, 0.0).map(|v| v.exp() - 1.0);
        let report = identity_report(&x, &xt, &w)?;
        let max_residual = report.max_residual();
        let pass = max_residual <= IDENTITY_TOL;
        let path = out.join("identities.json");
        write_json(&path, &IdentitiesReport { entries: report.entries, max_residual, tolerance: IDENTITY_TOL, pass })
            .at(&path)?;
        if pass {
            Ok(EXIT_OK)
        } else {
            meta.status = "check_failed".into();
            Ok(EXIT_NUMERICAL)
        }
    })();
    finish(out, meta, result)
}

fn state_from_snapshot(cfg: &RunConfig, path: &Path) -> Result<InterfaceState, CliError> {
    let snap = read_snapshot(path).at(path)?;
    let g = cfg.grid()?;
    Ok(InterfaceState::new(GridFunction::new(g, snap.f)?, GridFunction::new(g, snap.h)?, cfg.params())?)
}

pub fn field(cfg: &RunConfig, base: &Path, snapshot: &Path, out: &Path) -> Result<i32, CliError> {
    let v = cfg.violations(base);
    if !v.is_empty() {
        return Err(ConfigError::Invalid(v).into());
    }
    prepare(out)?;
    let step = snapshot_step(snapshot).unwrap_or(0);
    let args = serde_json::json!({ "snapshot": snapshot, "step": step });
    let meta = Meta::new("field", &echo(cfg, base, out), args);
    let result = (|| {
        let x = state_from_snapshot(cfg, snapshot)?;
        let ev = FieldEvaluator::new(&x)?;
        let g = x.grid();
        let spec = cfg.field;
        let y_min = spec.y_min.unwrap_or(x.h.min() - 1.0);
        let y_max = spec.y_max.unwrap_or(x.c_inf() + x.f.max() + 1.0);
        let mut rows = Vec::with_capacity(spec.nx * spec.ny);
        for j in 0..spec.ny {
            let y = y_min + (y_max - y_min) * j as f64 / (spec.ny - 1) as f64;
            for i in 0..spec.nx {
                let px = g.origin() + g.period() * i as f64 / spec.nx as f64;
                let row = match ev.sample(px, y) {
                    Ok(s) => FieldRow { x: px, y, v1: s.v1, v2: s.v2, p: s.p.unwrap_or(f64::NAN) },
                    Err(Error::TooClose { .. }) => FieldRow { x: px, y, v1: f64::NAN, v2: f64::NAN, p: f64::NAN },
                    Err(e) => return Err(e.into()),
                };
                rows.push(row);
            }
        }
        let path = field_path(out, step);
        write_field(&path, &rows).at(&path)?;
        Ok(EXIT_OK)
    })();
    finish(out, meta, result)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnoseReport {
    pub run_status: String,
    pub final_gap: f64,
    pub final_distance: f64,
    pub speed_bound: f64,
    pub squirt: SquirtReport,
}

/// Reads a finished `simulate` directory and writes `diagnose.json`.
pub fn diagnose(run_dir: &Path) -> Result<i32, CliError> {
    let meta_path = run_dir.join("meta.json");
    let text = fs::read_to_string(&meta_path).at(&meta_path)?;
    let prior: Meta = serde_json::from_str(&text)
        .map_err(|e| CliError::Io(meta_path.clone(), io::Error::new(io::ErrorKind::InvalidData, e)))?;
    let cfg = prior.config.clone();
    let mut meta = Meta::new("diagnose", &cfg, serde_json::json!({ "run": run_dir }));
    let result = (|| {
        let series = run_dir.join("series.csv");
        let rows = read_series(&series).at(&series)?;
        let mut snapshots = Vec::new();
        for (step, path) in list_snapshots(run_dir).at(run_dir)? {
            let Some(&(_, t)) = prior.snapshots.iter().find(|(s, _)| *s == step) else {
                warn!("{}: no time recorded, skipped", path.display());
                continue;
            };
            let x = state_from_snapshot(&cfg, &path)?;
            snapshots.push(Snapshot { step, t, f: x.f, h: x.h });
        }
        let last = snapshots.last().ok_or_else(|| {
            CliError::Numerical(Error::Precondition("a run directory with snapshots".into()))
        })?;
        let final_state = InterfaceState::new(last.f.clone(), last.h.clone(), cfg.params())?;
        let record = RunRecord { rows, snapshots };
        let squirt = squirt_diagnostic(&record, &cfg.diagnostic, &cfg.params())?;
        let report = DiagnoseReport {
            run_status: prior.status.clone(),
            final_gap: muskat_core::muskat_rhs::admissibility_gap(&final_state),
            final_distance: interface_distance(&final_state),
            speed_bound: speed_bound(&final_state)?,
            squirt,
        };
        let path = run_dir.join("diagnose.json");
        write_json(&path, &report).at(&path)?;
        meta.steps = prior.steps;
        meta.t_final = prior.t_final;
        Ok(EXIT_OK)
    })();
    let out = run_dir.join("diagnose");
    prepare(&out)?;
    finish(&out, meta, result)
}
