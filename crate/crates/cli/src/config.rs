//! Run configuration in TOML.
//!
//! ```toml
//! [physics]
//! k = 1.0
//! mu = 1.0
//! g = 9.81
//! rho1 = 1.0
//! rho2 = 2.0
//! rho3 = 3.0
//! c_inf = 1.0
//!
//! [grid]
//! n_points = 256
//! period = 6.283185307179586
//!
//! [initial.f]
//! profile = "gaussian_bumps"
//! amplitude = -0.2
//! width = 0.5
//! centers = [0.0]
//!
//! [initial.h]
//! profile = "sinusoid"
//! k = 2
//! amplitude = 0.1
//! ```
//!
//! Every section but `[physics]` may be left out.

use std::f64::consts::PI;
use std::fmt;
use std::path::{Path, PathBuf};

use muskat_core::evolution::{SquirtDiagnosticSpec, StepperConfig};
use muskat_core::muskat_rhs::check_admissible;
use muskat_core::{Grid, GridFunction, InterfaceState, PhysicalParams};
use serde::{Deserialize, Serialize};

use crate::artifacts::read_snapshot;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub physics: Physics,
    #[serde(default)]
    pub grid: GridSpec,
    #[serde(default)]
    pub initial: InitialData,
    #[serde(default)]
    pub stepper: StepperConfig,
    #[serde(default)]
    pub output: Output,
    #[serde(default)]
    pub diagnostic: SquirtDiagnosticSpec,
    #[serde(default)]
    pub field: FieldGrid,
}

/// Physical constants; all keys are required.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Physics {
    pub k: Option<f64>,
    pub mu: Option<f64>,
    pub g: Option<f64>,
    pub rho1: Option<f64>,
    pub rho2: Option<f64>,
    pub rho3: Option<f64>,
    pub c_inf: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSpec {
    pub n_points: usize,
    pub period: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self { n_points: 256, period: 2.0 * PI }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialData {
    #[serde(default)]
    pub f: Profile,
    #[serde(default)]
    pub h: Profile,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "profile", rename_all = "snake_case", deny_unknown_fields)]
pub enum Profile {
    #[default]
    Flat,
    /// Sum of periodic Gaussians `amplitude exp(-(x - center)^2 / width^2)`.
    GaussianBumps { amplitude: f64, width: f64, centers: Vec<f64> },
    /// `amplitude cos(2 pi k x / P)`.
    Sinusoid { k: u32, amplitude: f64 },
    /// Column of a snapshot CSV (`x,f,h`); defaults to the interface's own.
    File { path: PathBuf, column: Option<String> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Output {
    pub directory: PathBuf,
    /// Every n-th accepted step is saved; 0 keeps the first and last only.
    pub snapshot_stride: usize,
    /// Every n-th monitor row goes to `series.csv`; the last is always kept.
    pub series_stride: usize,
}

impl Default for Output {
    fn default() -> Self {
        Self { directory: PathBuf::from("run"), snapshot_stride: 0, series_stride: 1 }
    }
}

/// Sample lattice for `field_<step>.csv`; the vertical range defaults to
/// one unit beyond both interfaces.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FieldGrid {
    pub nx: usize,
    pub ny: usize,
    pub y_min: Option<f64>,
    pub y_max: Option<f64>,
}

impl Default for FieldGrid {
    fn default() -> Self {
        Self { nx: 32, ny: 24, y_min: None, y_max: None }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ConfigError {
    Read { path: PathBuf, message: String },
    Parse(String),
    Invalid(Vec<String>),
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConfigError::Read { path, message } => write!(f, "cannot read {}: {message}", path.display()),
            ConfigError::Parse(m) => write!(f, "cannot parse config: {m}"),
            ConfigError::Invalid(v) => {
                write!(f, "invalid config:")?;
                for m in v {
                    write!(f, "\n  - {m}")?;
                }
                Ok(())
            }
        }
    }
}

impl std::error::Error for ConfigError {}

impl RunConfig {
    /// A complete config with the given physics and every default.
    pub fn with_params(p: &PhysicalParams) -> Self {
        Self {
            physics: Physics {
                k: Some(p.k),
                mu: Some(p.mu),
                g: Some(p.g),
                rho1: Some(p.rho1),
                rho2: Some(p.rho2),
                rho3: Some(p.rho3),
                c_inf: Some(p.c_inf),
            },
            grid: GridSpec::default(),
            initial: InitialData::default(),
            stepper: StepperConfig::default(),
            output: Output::default(),
            diagnostic: SquirtDiagnosticSpec::default(),
            field: FieldGrid::default(),
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Physical parameters without any validation.
    pub fn params(&self) -> PhysicalParams {
        let p = &self.physics;
        let v = |x: Option<f64>| x.unwrap_or(f64::NAN);
        PhysicalParams {
            k: v(p.k),
            mu: v(p.mu),
            g: v(p.g),
            rho1: v(p.rho1),
            rho2: v(p.rho2),
            rho3: v(p.rho3),
            c_inf: v(p.c_inf),
        }
    }

    pub fn grid(&self) -> muskat_core::Result<Grid> {
        Grid::new(self.grid.n_points, self.grid.period)
    }

    /// Every problem with the config, in a stable order.
    pub fn violations(&self, base: &Path) -> Vec<String> {
        let mut out = Vec::new();
        let p = &self.physics;
        for (name, v) in [
            ("k", p.k),
            ("mu", p.mu),
            ("g", p.g),
            ("rho1", p.rho1),
            ("rho2", p.rho2),
            ("rho3", p.rho3),
            ("c_inf", p.c_inf),
        ] {
            if v.is_none() {
                out.push(format!("missing key physics.{name}"));
            }
        }
        let physics_complete = out.is_empty();
        if physics_complete {
            out.extend(self.params().stable_violations());
        }
        let grid = match self.grid() {
            Ok(g) => Some(g),
            Err(e) => {
                out.push(format!("grid: {e}"));
                None
            }
        };
        out.extend(self.stepper.violations());
        if !(self.diagnostic.delta > 0.0) {
            out.push(format!("diagnostic.delta must be positive (got {})", self.diagnostic.delta));
        }
        if let Some(c1) = self.diagnostic.c1 {
            if !(c1.is_finite() && c1 >= 0.0) {
                out.push(format!("diagnostic.c1 must be nonnegative (got {c1})"));
            }
        }
        if self.output.series_stride == 0 {
            out.push("output.series_stride must be at least 1".into());
        }
        if self.field.nx == 0 || self.field.ny < 2 {
            out.push("field grid needs nx >= 1 and ny >= 2".into());
        }
        let mut profiles_ok = true;
        for (name, prof) in [("f", &self.initial.f), ("h", &self.initial.h)] {
            if let Err(m) = check_profile(prof) {
                out.push(format!("initial.{name}: {m}"));
                profiles_ok = false;
            }
        }
        if let (Some(g), true) = (grid, profiles_ok) {
            match self.initial_state_unchecked(g, base) {
                Ok(x) if physics_complete => {
                    if let Err(e) = check_admissible(&x) {
                        out.push(format!("initial data: {e}"));
                    }
                }
                Ok(_) => {}
                Err(m) => out.push(m),
            }
        }
        out
    }

    fn initial_state_unchecked(&self, g: Grid, base: &Path) -> Result<InterfaceState, String> {
        let f = build_profile(&self.initial.f, g, "f", base).map_err(|m| format!("initial.f: {m}"))?;
        let h = build_profile(&self.initial.h, g, "h", base).map_err(|m| format!("initial.h: {m}"))?;
        InterfaceState::new(f, h, self.params()).map_err(|e| e.to_string())
    }

    /// The validated initial state; file profiles resolve against `base`.
    pub fn initial_state(&self, base: &Path) -> Result<InterfaceState, ConfigError> {
        let v = self.violations(base);
        if !v.is_empty() {
            return Err(ConfigError::Invalid(v));
        }
        let g = self.grid().map_err(|e| ConfigError::Invalid(vec![e.to_string()]))?;
        self.initial_state_unchecked(g, base).map_err(|m| ConfigError::Invalid(vec![m]))
    }
}

fn check_profile(p: &Profile) -> Result<(), String> {
    match p {
        Profile::Flat | Profile::File { .. } => Ok(()),
        Profile::GaussianBumps { amplitude, width, centers } => {
            if !(width.is_finite() && *width > 0.0) {
                Err(format!("width must be positive (got {width})"))
            } else if !amplitude.is_finite() || centers.iter().any(|c| !c.is_finite()) {
                Err("amplitude and centers must be finite".into())
            } else {
                Ok(())
            }
        }
        Profile::Sinusoid { amplitude, .. } => {
            if amplitude.is_finite() {
                Ok(())
            } else {
                Err("amplitude must be finite".into())
            }
        }
    }
}

fn build_profile(p: &Profile, g: Grid, own: &str, base: &Path) -> Result<GridFunction, String> {
    match p {
        Profile::Flat => Ok(GridFunction::zeros(g)),
        Profile::GaussianBumps { amplitude, width, centers } => Ok(GridFunction::from_fn(g, |x| {
            centers
                .iter()
                .map(|c| {
                    let d = g.wrap(x - c);
                    amplitude * (-(d / width).powi(2)).exp()
                })
                .sum()
        })),
        Profile::Sinusoid { k, amplitude } => {
            if 2 * *k as usize >= g.n_points() {
                return Err(format!("mode {k} is not resolved by {} points", g.n_points()));
            }
            let xi = 2.0 * PI * *k as f64 / g.period();
            Ok(GridFunction::from_fn(g, |x| amplitude * (xi * x).cos()))
        }
        Profile::File { path, column } => {
            let full = if path.is_absolute() { path.clone() } else { base.join(path) };
            let snap = read_snapshot(&full).map_err(|e| format!("{}: {e}", full.display()))?;
            let col = column.as_deref().unwrap_or(own);
            let values = match col {
                "f" => snap.f,
                "h" => snap.h,
                other => return Err(format!("unknown column {other:?}; expected \"f\" or \"h\"")),
            };
            GridFunction::new(g, values).map_err(|e| format!("{}: {e}", full.display()))
        }
    }
}

pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))
}

/// A bare JSON config or the `config` member of a `meta.json`.
pub fn parse_json_config(text: &str) -> Result<RunConfig, ConfigError> {
    let mut value: serde_json::Value = serde_json::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
    if let Some(inner) = value.get_mut("config") {
        value = inner.take();
    }
    serde_json::from_value(value).map_err(|e| ConfigError::Parse(e.to_string()))
}

/// Reads and validates a config; relative file profiles resolve against the
/// config's directory. `.json` files are read as JSON, anything else as TOML.
pub fn load_config(path: &Path) -> Result<RunConfig, ConfigError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ConfigError::Read { path: path.to_path_buf(), message: e.to_string() })?;
    let cfg = if path.extension().is_some_and(|e| e == "json") { parse_json_config(&text)? } else { parse_config(&text)? };
    let v = cfg.violations(&config_dir(path));
    if v.is_empty() {
        Ok(cfg)
    } else {
        Err(ConfigError::Invalid(v))
    }
}

pub fn config_dir(path: &Path) -> PathBuf {
    path.parent().map(Path::to_path_buf).unwrap_or_default()
}
