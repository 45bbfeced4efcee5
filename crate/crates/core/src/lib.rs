//! Matrix-variate factor models for matrix-valued time series.
//!
//! Observations `X_t` (`p1 x p2`) are modelled as `X_t = R F_t C' + E_t` with a
//! low-dimensional latent factor matrix `F_t` and white idiosyncratic noise.
//! The row and column loading spaces are estimated by eigen-analysis of
//! aggregated lagged auto-cross-covariances; factor counts are chosen by
//! eigenvalue ratios.
//!
//! The numerical core is generic over the [`Scalar`] type (`f32` or `f64`);
//! the `*64` aliases at the crate root fix the common double-precision case.
//!
//! Module map:
//! - [`series`]: storage, standardization and the lagged block covariance.
//! - [`estimator`]: M-matrix assembly, eigen-analysis, rank selection,
//!   factor/signal recovery, subspace distance and varimax.
//! - [`baseline`]: the vectorized estimator applied to `vec(X_t)`.
//! - [`simulation`]: data-generating processes and the Monte-Carlo study driver.
//! - [`validation`]: K-fold, rolling validation and rate studies.
//! - [`io`]: long-format CSV ingestion and JSON/CSV export.

pub mod baseline;
pub mod error;
pub mod estimator;
pub mod io;
pub mod scalar;
pub mod series;
pub mod simulation;
pub mod validation;

pub use baseline::{build_m_vec, fit_vec, signal_vec, VecFactorFit};
pub use error::{Error, Result};
pub use estimator::{
    build_m, estimate_rank, extract_factors, fit, reconstruct_signal, subspace_distance, sym_eig,
    varimax, EstimatorOptions, FactorFit, LoadingEstimate, MMatrix, RankMode, Side, Varimax,
};
pub use scalar::Scalar;
pub use series::{lagged_block_cov, standardize, transpose_series, vec_series, LaggedBlockCov, MatrixSeries};

pub type MatrixSeries64 = MatrixSeries<f64>;
pub type MatrixSeries32 = MatrixSeries<f32>;
pub type FactorFit64 = FactorFit<f64>;
pub type FactorFit32 = FactorFit<f32>;
pub type LoadingEstimate64 = LoadingEstimate<f64>;
pub type VecFactorFit64 = VecFactorFit<f64>;
pub type MMatrix64 = MMatrix<f64>;
pub type LaggedBlockCov64 = LaggedBlockCov<f64>;
