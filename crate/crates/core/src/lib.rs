//! Axisymmetric cooling-fin model with measure-valued lateral surface.
//!
//! The crate solves the steady fin equation by finite volumes, evaluates the
//! inlet heat flux and its closed-form suprema, builds explicit maximizing
//! sequences, and optimizes the surface density under a pointwise cap and a
//! total surface budget.

pub mod error;
pub mod exec;
pub mod functionals;
pub mod grid;
pub mod optimizer;
pub mod params;
pub mod profile;
pub mod sampling;
pub mod sequences;
pub mod solver;
pub mod tridiag;

pub use error::{FinError, Result};
pub use exec::Execution;
pub use functionals::{
    directional_derivative, flux_report, generalized_supremum, gradient_density,
    heat_flux_boundary, heat_flux_boundary_measure, heat_flux_relaxed, surface, surface_bound,
    surface_gradient, surface_supremum, volume, FluxReport,
};
pub use grid::Grid;
pub use params::{Convection, PhysicalParams};
pub use profile::{Atom, RadiusProfile, SurfaceMeasure};
pub use solver::{
    analytic_theta_constant, compute_gamma, solve_linearized, solve_temperature, LinearizedField,
    TemperatureField,
};
