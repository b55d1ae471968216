//! Experiment configuration, convergence studies and the fits behind the
//! convergence tables.

mod config;
mod fit;
mod study;

pub use config::{AdaptiveParams, BoundaryChoice, Domain, ExperimentConfig};
pub use fit::{extrapolate, fit_order, Extrapolation};
pub use study::{convergence_study, run_adapt, run_study, ConvergenceReport, EigenSeries, StudyRow};
