//! Data-generating processes for the matrix factor model and the Monte-Carlo
//! study driver.

mod config;
mod dgp;
pub mod rng;
mod study;

pub use config::{FactorSpec, NoiseSpec, SimConfig};
pub use dgp::{gen_factors, gen_loadings, gen_noise, simulate, sqrt_spd, SimTruth};
pub use study::{
    run_study, signal_distance, spectral_norm, Axis, CellKey, CellReport, GridConfig, Metric,
    ModelChoice, StudyReport, Summary, TSpec,
};
