use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::eigen::{psd_spectrum, sym_eig};
use super::mmatrix::{LagCovSet, Side};
use super::rank::{estimate_rank, DEFAULT_EPS_ABS};
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::series::{MatrixSeries, Standardizer};

/// How the numbers of row/column factors are chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RankMode {
    /// Eigenvalue-ratio estimate on each side.
    Auto,
    /// Fixed `(k1, k2)`; zero is allowed and yields an empty loading.
    Fixed(usize, usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimatorOptions {
    /// Number of lags aggregated into `M` (`1 <= h0 <= T-1`).
    pub h0: usize,
    pub rank: RankMode,
    /// Standardize each cell series before estimation. The fitted location and
    /// scale are kept and applied to any series later projected with the fit.
    pub standardize: bool,
    /// Leading-eigenvalue floor for the ratio estimator.
    pub eps_abs: f64,
}

impl Default for EstimatorOptions {
    fn default() -> Self {
        Self { h0: 1, rank: RankMode::Auto, standardize: false, eps_abs: DEFAULT_EPS_ABS }
    }
}

impl EstimatorOptions {
    pub fn fixed(h0: usize, k1: usize, k2: usize) -> Self {
        Self { h0, rank: RankMode::Fixed(k1, k2), ..Self::default() }
    }

    pub fn auto(h0: usize) -> Self {
        Self { h0, ..Self::default() }
    }
}

/// Orthonormal loading estimate for one side.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadingEstimate<T: Scalar> {
    /// `p x k`, orthonormal columns, each with positive column sum.
    pub q: DMatrix<T>,
    /// The `k` retained eigenvalues, descending.
    pub eigenvalues: Vec<T>,
    /// All `p` eigenvalues of `M`, descending, with rounding-level values set to zero.
    pub full_spectrum: Vec<T>,
}

impl<T: Scalar> LoadingEstimate<T> {
    pub fn k(&self) -> usize {
        self.q.ncols()
    }

    pub fn p(&self) -> usize {
        self.q.nrows()
    }

    /// Projector `q q'`.
    pub fn projector(&self) -> DMatrix<T> {
        &self.q * self.q.transpose()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FactorFit<T: Scalar> {
    pub q1: LoadingEstimate<T>,
    pub q2: LoadingEstimate<T>,
    pub options: EstimatorOptions,
    /// Present when `options.standardize` was set.
    pub standardizer: Option<Standardizer<T>>,
}

impl<T: Scalar> FactorFit<T> {
    pub fn ranks(&self) -> (usize, usize) {
        (self.q1.k(), self.q2.k())
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.q1.p(), self.q2.p())
    }

    /// Loading parameter count `p1 k1 + p2 k2`.
    pub fn parameter_count(&self) -> usize {
        self.q1.p() * self.q1.k() + self.q2.p() * self.q2.k()
    }

    /// A copy with the loadings truncated to `(k1, k2)` leading columns.
    pub fn truncated(&self, k1: usize, k2: usize) -> Result<Self> {
        Ok(Self {
            q1: truncate(&self.q1, k1)?,
            q2: truncate(&self.q2, k2)?,
            options: EstimatorOptions { rank: RankMode::Fixed(k1, k2), ..self.options },
            standardizer: self.standardizer.clone(),
        })
    }

    /// Brings `series` onto the scale the loadings were estimated on.
    pub fn prepare(&self, series: &MatrixSeries<T>) -> Result<MatrixSeries<T>> {
        let (p1, p2) = self.dims();
        if (series.p1(), series.p2()) != (p1, p2) {
            return Err(Error::dims(
                format!("{p1}x{p2}"),
                format!("{}x{}", series.p1(), series.p2()),
            ));
        }
        match &self.standardizer {
            Some(s) => s.apply(series),
            None => Ok(series.clone()),
        }
    }
}

fn truncate<T: Scalar>(l: &LoadingEstimate<T>, k: usize) -> Result<LoadingEstimate<T>> {
    let avail = l.full_spectrum.len();
    if k > avail {
        return Err(Error::InvalidConfig(format!("rank {k} exceeds dimension {avail}")));
    }
    if k > l.k() {
        return Err(Error::InvalidConfig(format!(
            "cannot extend a rank-{} estimate to rank {k}",
            l.k()
        )));
    }
    Ok(LoadingEstimate {
        q: l.q.columns(0, k).into_owned(),
        eigenvalues: l.full_spectrum[..k].to_vec(),
        full_spectrum: l.full_spectrum.clone(),
    })
}

pub(crate) fn loading_from_m<T: Scalar>(
    m: &DMatrix<T>,
    k: Option<usize>,
    eps_abs: f64,
) -> Result<LoadingEstimate<T>> {
    let eig = sym_eig(m)?;
    let full_spectrum = psd_spectrum(eig.values.as_slice());
    let p = full_spectrum.len();
    let k = match k {
        Some(k) if k > p => {
            return Err(Error::InvalidConfig(format!("rank {k} exceeds dimension {p}")))
        }
        Some(k) => k,
        None => estimate_rank(&full_spectrum, eps_abs)?,
    };
    Ok(LoadingEstimate {
        q: eig.leading(k),
        eigenvalues: full_spectrum[..k].to_vec(),
        full_spectrum,
    })
}

/// Estimates both loading spaces from precomputed lagged covariances.
pub fn fit_from_covs<T: Scalar>(covs: &LagCovSet<T>, options: EstimatorOptions) -> Result<FactorFit<T>> {
    let (k1, k2) = match options.rank {
        RankMode::Auto => (None, None),
        RankMode::Fixed(a, b) => (Some(a), Some(b)),
    };
    let q1 = loading_from_m(&covs.m(Side::Row).m, k1, options.eps_abs)?;
    let q2 = loading_from_m(&covs.m(Side::Column).m, k2, options.eps_abs)?;
    Ok(FactorFit { q1, q2, options, standardizer: None })
}

/// Row and column loading estimates for a matrix series.
pub fn fit<T: Scalar>(series: &MatrixSeries<T>, options: EstimatorOptions) -> Result<FactorFit<T>> {
    let (standardizer, data) = if options.standardize {
        let s = Standardizer::fit(series, true)?;
        let d = s.apply(series)?;
        (Some(s), std::borrow::Cow::Owned(d))
    } else {
        (None, std::borrow::Cow::Borrowed(series))
    };
    let covs = LagCovSet::compute(&data, options.h0)?;
    let mut out = fit_from_covs(&covs, options)?;
    out.standardizer = standardizer;
    Ok(out)
}

/// `Z_t = Q1' X_t Q2` for every `t`.
pub fn extract_factors<T: Scalar>(fit: &FactorFit<T>, series: &MatrixSeries<T>) -> Result<Vec<DMatrix<T>>> {
    let data = fit.prepare(series)?;
    let q1t = fit.q1.q.transpose();
    Ok(data.iter().map(|x| &q1t * x * &fit.q2.q).collect())
}

/// `S_t = Q1 Q1' X_t Q2 Q2'` for every `t`.
pub fn reconstruct_signal<T: Scalar>(fit: &FactorFit<T>, series: &MatrixSeries<T>) -> Result<MatrixSeries<T>> {
    let data = fit.prepare(series)?;
    let p1 = fit.q1.projector();
    let p2 = fit.q2.projector();
    data.map(|x| &p1 * x * &p2)
}
