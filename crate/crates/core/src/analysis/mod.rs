//! Convergence studies, spectra and stability diagnostics.

mod convergence;
mod dispersion;
mod spectrum;

use thiserror::Error;

use crate::eigen::EigenError;
use crate::marching::MarchError;
use crate::operator::OperatorError;
use crate::problems::ProblemError;

pub use convergence::{
    cfl_order_sweep, convergence_study, empirical_order, l2_error, ConvergenceReport, LevelResult, LevelStatus, OrderFit,
    StudyConfig, SweepRow, DTS_2D, FAST_DTS, PAPER_DTS, SWEEP_DTS,
};
pub use dispersion::{dispersion_curves, dispersion_table, modified_wavenumber, theta_grid, DispersionCurve, WavenumberPoint};
pub use spectrum::{
    critical_cfl, eigen_trajectory, gershgorin, max_amplification, operator_eigenvalues, periodic_spectrum, spectrum,
    CriticalCfl, Disc, GershgorinReport, SpectrumReport, TrajectoryPoint, CFL_SEARCH_MAX, CFL_SEARCH_MIN,
    CFL_SEARCH_TOL, DEFAULT_SPECTRUM_NODES, MAX_SPECTRUM_NODES, RESIDUAL_FACTOR, SPECTRUM_CONVENTION, STABILITY_SLACK,
};

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("field lengths differ: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("need at least two points for an order fit, got {0}")]
    TooFewPoints(usize),
    #[error("errors and step sizes must be positive and finite (got error {error}, dt {dt})")]
    NonPositive { error: f64, dt: f64 },
    #[error("invalid study configuration: {0}")]
    Config(String),
    #[error("eigenpair residual {residual:e} exceeds {bound:e}")]
    ResidualContract { residual: f64, bound: f64 },
    #[error("eigenvalue {re}{im:+}i lies outside every Gershgorin disc")]
    Gershgorin { re: f64, im: f64 },
    #[error("eigensolver failed ({source}); matrix dumped to {}", dump.as_deref().map_or("<unwritable>".into(), |p| p.display().to_string()))]
    NoConvergence { source: EigenError, dump: Option<std::path::PathBuf> },
    #[error(transparent)]
    Eigen(#[from] EigenError),
    #[error(transparent)]
    March(#[from] MarchError),
    #[error(transparent)]
    Problem(#[from] ProblemError),
    #[error(transparent)]
    Operator(#[from] OperatorError),
}
