//! Finite volume solvers for the Saint-Venant-Exner sediment transport system.
//!
//! The crate is organised bottom-up:
//!
//! * [`model`] holds the physical parameters, grids, cell-averaged states and
//!   the eigenvalue analysis of the 1D quasilinear system.
//! * [`numerics`] provides the spatial bricks: limited reconstruction, the
//!   Rusanov interface flux, the difference operators and the two linear
//!   solvers used by the implicit free-surface solves.
//! * [`solver1d`] and [`solver2d`] contain the time integrators.
//! * [`scalar`] implements the quasi-stationary scalar reduction and its
//!   Lax-Wendroff integrator.
//! * [`harness`] defines the experiment presets, error metrics and reports.

pub mod error;
pub mod harness;
pub mod model;
pub mod numerics;
pub mod scalar;
pub mod solver1d;
pub mod solver2d;

pub use error::{ExnerError, Result};
pub use model::{
    beta_coefficient, eigenvalues_asymptotic, eigenvalues_exact, grass_flux_1d, grass_flux_2d,
    GrassParams, Grid1D, Grid2D, State1D, State2D, WaveAnalysis, GRAVITY, H_DRY,
};
pub use numerics::LimiterParams;
pub use solver1d::{BoundaryCondition1D, ImexTableau, Solver1D, TimeControls};
pub use solver2d::Solver2D;
