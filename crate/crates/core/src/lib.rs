//! Three-phase Muskat interface dynamics on a periodic strip.
//!
//! Two graphs, `y = c_inf + f(x)` and `y = h(x)`, separate three fluids of
//! increasing density in a porous medium. Their evolution is a nonlocal
//! parabolic system `dX/dt = Phi(X)` for `X = (f, h)`, assembled here from
//! singular and layer integral operators discretized on a uniform periodic
//! grid.

pub mod error;
pub mod evolution;
pub mod field_eval;
pub mod grid_spectral;
pub mod kernels;
pub mod layer_potentials;
pub mod linear_analysis;
pub mod muskat_rhs;
pub mod nonlocal_operators;
pub mod quadrature;
pub mod state;

pub use error::{Error, Result};
pub use grid_spectral::{Grid, GridFunction, SobolevIndex};
pub use layer_potentials::{KernelRoute, LayerKind, LayerRequest};
pub use quadrature::QuadratureScheme;
pub use state::{Direction, InterfaceState, PhysicalParams};
