//! Loading-space estimation for the matrix factor model.
//!
//! The row loading space is estimated from the leading eigenvectors of
//! `M1 = sum_{h<=h0} sum_{i,j} W_ij(h) W_ij(h)'`, where `W_ij(h)` are the
//! lag-`h` auto-cross-covariance blocks between columns `i` and `j` of the
//! observations; the column space uses the same construction on `X_t'`.

mod distance;
mod eigen;
mod fit;
mod mmatrix;
mod rank;
mod varimax;

pub use distance::{check_orthonormal, orthonormalize, subspace_distance};
pub use eigen::{apply_sign_convention, psd_spectrum, sym_eig, top_eigen, SymEigen};
pub use fit::{
    extract_factors, fit, fit_from_covs, reconstruct_signal, EstimatorOptions, FactorFit, LoadingEstimate,
    RankMode,
};
pub use mmatrix::{build_m, LagCovSet, MMatrix, Side};
pub use rank::{estimate_rank, DEFAULT_EPS_ABS};
pub use varimax::{varimax, varimax_criterion, varimax_with, Varimax, VarimaxOptions};
