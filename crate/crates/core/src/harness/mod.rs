//! Configuration, experiment runners, fits and persistence.

pub mod config;
pub mod experiments;
pub mod fit;
pub mod output;

pub use config::{Experiment, ExperimentConfig};
pub use experiments::{execute, RunOutput};
pub use fit::{fit_censored, fit_powerlaw, FitResult};
