//! Stationary Fokker-Planck solvers driven by Monte Carlo reference data.
//!
//! Two routes are provided. The grid route discretizes the generator with
//! finite differences and corrects a noisy histogram either by projecting it
//! onto the null space of the discrete operator or by a penalized least
//! squares solve. The mesh-free route trains a sigmoid network on a loss that
//! combines the squared PDE residual at collocation points with the misfit to
//! sparse reference densities.

pub mod cgfilter;
pub mod error;
pub mod grid;
pub mod io;
pub mod gridsolver;
pub mod linalg;
pub mod models;
pub mod neural;
pub mod quadrature;
pub mod rng;
pub mod sampler;

pub use error::{Error, Result};
pub use grid::{DensityField, Domain, GridSpec};
pub use models::{exact_density, exact_jet, generator_apply, make_builtin, ExactSolution, SdeModel};
pub use sampler::{ReferenceSet, TrajectoryConfig};
