//! Physical parameters and interface states.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid_spectral::{Grid, GridFunction};

/// Permeability `k`, viscosity `mu`, gravity `g`, the three densities
/// (top to bottom) and the far-field separation `c_inf` of the interfaces.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalParams {
    pub k: f64,
    pub mu: f64,
    pub g: f64,
    pub rho1: f64,
    pub rho2: f64,
    pub rho3: f64,
    pub c_inf: f64,
}

impl PhysicalParams {
    pub fn new(k: f64, mu: f64, g: f64, rho: [f64; 3], c_inf: f64) -> Result<Self> {
        let p = Self { k, mu, g, rho1: rho[0], rho2: rho[1], rho3: rho[2], c_inf };
        let problems = p.violations();
        if problems.is_empty() {
            Ok(p)
        } else {
            Err(Error::InvalidParameter(problems.join("; ")))
        }
    }

    /// Unit `k`, `mu`, `g` and densities chosen to realize the given
    /// `theta1`, `theta2`.
    pub fn from_thetas(theta1: f64, theta2: f64, c_inf: f64) -> Result<Self> {
        let rho2 = 10.0;
        Self::new(1.0, 1.0, 1.0, [rho2 + 2.0 * theta1, rho2, rho2 - 2.0 * theta2], c_inf)
    }

    /// `k g (rho1 - rho2) / (2 mu)`.
    pub fn theta1(&self) -> f64 {
        self.k * self.g * (self.rho1 - self.rho2) / (2.0 * self.mu)
    }

    /// `k g (rho2 - rho3) / (2 mu)`.
    pub fn theta2(&self) -> f64 {
        self.k * self.g * (self.rho2 - self.rho3) / (2.0 * self.mu)
    }

    pub fn is_stable(&self) -> bool {
        self.rho1 < self.rho2 && self.rho2 < self.rho3
    }

    /// Every violated constraint, phrased for a user.
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        for (name, v) in [("k", self.k), ("mu", self.mu), ("g", self.g), ("c_inf", self.c_inf)] {
            if !(v.is_finite() && v > 0.0) {
                out.push(format!("{name} must be positive and finite (got {v})"));
            }
        }
        for (name, v) in [("rho1", self.rho1), ("rho2", self.rho2), ("rho3", self.rho3)] {
            if !v.is_finite() {
                out.push(format!("{name} must be finite (got {v})"));
            }
        }
        out
    }

    /// Violations plus the stable density ordering.
    pub fn stable_violations(&self) -> Vec<String> {
        let mut out = self.violations();
        if !(self.rho1 < self.rho2 && self.rho2 < self.rho3) {
            out.push(format!(
                "densities must be strictly increasing downwards: rho1 < rho2 < rho3 (got {}, {}, {})",
                self.rho1, self.rho2, self.rho3
            ));
        }
        out
    }
}

/// The pair `X = (f, h)`: upper interface `y = c_inf + f(x)`, lower
/// interface `y = h(x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct InterfaceState {
    pub f: GridFunction,
    pub h: GridFunction,
    pub params: PhysicalParams,
}

impl InterfaceState {
    pub fn new(f: GridFunction, h: GridFunction, params: PhysicalParams) -> Result<Self> {
        if f.grid() != h.grid() {
            return Err(Error::GridMismatch { expected: f.len(), found: h.len() });
        }
        Ok(Self { f, h, params })
    }

    pub fn flat(grid: Grid, params: PhysicalParams) -> Self {
        Self { f: GridFunction::zeros(grid), h: GridFunction::zeros(grid), params }
    }

    pub fn grid(&self) -> Grid {
        self.f.grid()
    }

    pub fn c_inf(&self) -> f64 {
        self.params.c_inf
    }

    /// `X + t Y`.
    pub fn perturbed(&self, dir: &Direction, t: f64) -> Self {
        Self {
            f: self.f.zip_map(&dir.u, |a, b| a + t * b),
            h: self.h.zip_map(&dir.v, |a, b| a + t * b),
            params: self.params,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.f.values().iter().chain(self.h.values()).all(|v| v.is_finite())
    }
}

/// A tangent direction `Y = (u, v)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Direction {
    pub u: GridFunction,
    pub v: GridFunction,
}

impl Direction {
    pub fn new(u: GridFunction, v: GridFunction) -> Result<Self> {
        if u.grid() != v.grid() {
            return Err(Error::GridMismatch { expected: u.len(), found: v.len() });
        }
        Ok(Self { u, v })
    }

    pub fn grid(&self) -> Grid {
        self.u.grid()
    }
}
