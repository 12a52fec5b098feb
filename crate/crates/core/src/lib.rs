//! Order reduction of explicit Runge-Kutta methods at time-dependent Dirichlet
//! boundaries, and boundary closures that repair it.
//!
//! The crate is organised bottom-up:
//!
//! - [`tableau`]: Butcher tableaux, boundary error scalars, stability functions.
//! - [`closures`]: five-point boundary closures and the SSP-RK3 cancellation algebra.
//! - [`operator`]: the assembled first-derivative operator with Dirichlet elimination.
//! - [`eigen`]: dense real nonsymmetric eigensolver.
//! - [`problems`]: benchmark problems with exact solutions.
//! - [`marching`]: RK time stepping with stage boundary overwrite, truncation probes.
//! - [`analysis`]: convergence studies, spectra, critical CFL, Gershgorin discs.
//! - [`evolve`]: differential-evolution closure design.
//! - [`report`]: CSV and JSON serialization shared with the plotting tools.

pub mod analysis;
pub mod closures;
pub mod eigen;
pub mod evolve;
pub mod marching;
pub mod operator;
pub mod problems;
pub mod report;
pub mod tableau;

pub use closures::{ClosurePair, ClosureRow};
pub use operator::{Grid1D, SpatialOperator};
pub use problems::Problem;
pub use tableau::{Tableau, TableauScalars};
