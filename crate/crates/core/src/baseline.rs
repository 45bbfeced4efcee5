//! The vectorized factor estimator: the same lagged-covariance eigen-analysis
//! applied to `vec(X_t)` with an unstructured `p1p2 x k` loading.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::estimator::{apply_sign_convention, estimate_rank, psd_spectrum, sym_eig, top_eigen, LagCovSet, MMatrix, Side};
use crate::scalar::Scalar;
use crate::series::MatrixSeries;

/// Largest `p1*p2` for which the dense vectorized aggregate is formed.
pub const MAX_VEC_DIM: usize = 4096;

/// Above this dimension a fixed-rank fit uses subspace iteration instead of a
/// full eigen-decomposition.
const DENSE_EIG_LIMIT: usize = 400;

#[derive(Debug, Clone, PartialEq)]
pub struct VecFactorFit<T: Scalar> {
    /// `p1p2 x k`, orthonormal columns.
    pub q: DMatrix<T>,
    /// Leading eigenvalues of the vectorized `M`, descending. Complete (all
    /// `p1p2` values) except for large fixed-rank fits, which only resolve the
    /// leading block.
    pub spectrum: Vec<T>,
    pub p1: usize,
    pub p2: usize,
    pub h0: usize,
}

impl<T: Scalar> VecFactorFit<T> {
    pub fn k(&self) -> usize {
        self.q.ncols()
    }

    /// Loading parameter count `p1 p2 k`.
    pub fn parameter_count(&self) -> usize {
        self.p1 * self.p2 * self.k()
    }

    pub fn truncated(&self, k: usize) -> Result<Self> {
        if k > self.k() {
            return Err(Error::InvalidConfig(format!("cannot extend rank {} to {k}", self.k())));
        }
        Ok(Self { q: self.q.columns(0, k).into_owned(), ..self.clone() })
    }
}

fn guard(p1: usize, p2: usize) -> Result<()> {
    if p1 * p2 > MAX_VEC_DIM {
        return Err(Error::TooLarge(p1 * p2));
    }
    Ok(())
}

/// `M = sum_{h=1}^{h0} C(h) C(h)'` for the vectorized series.
pub fn build_m_vec<T: Scalar>(series: &MatrixSeries<T>, h0: usize) -> Result<MMatrix<T>> {
    guard(series.p1(), series.p2())?;
    let covs = LagCovSet::compute(series, h0)?;
    Ok(MMatrix { m: covs.m_vec(), h0, side: Side::Row })
}

/// Vectorized fit from precomputed lagged covariances; `k = None` selects the
/// rank by eigenvalue ratios with search bound `floor(min(p1p2, n)/2)`, where
/// `n` is the number of lead observations bounding the rank of `M`.
pub fn fit_vec_from_covs<T: Scalar>(covs: &LagCovSet<T>, k: Option<usize>, eps_abs: f64) -> Result<VecFactorFit<T>> {
    let (p1, p2) = covs.dims();
    guard(p1, p2)?;
    let p = p1 * p2;
    let h0 = covs.h0();
    if let Some(k) = k {
        if k > p {
            return Err(Error::InvalidConfig(format!("rank {k} exceeds dimension {p}")));
        }
    }
    let select = |spectrum: &[T]| match k {
        Some(k) => Ok(k),
        None => estimate_rank(&spectrum[..spectrum.len().min(covs.rank_bound())], eps_abs),
    };
    if let Some(u) = covs.lead_basis().filter(|u| k.is_none_or(|k| k <= u.ncols())) {
        // M lives in span(u): diagonalize u' M u instead.
        let mut small = DMatrix::zeros(u.ncols(), u.ncols());
        for c in &covs.covs {
            let b = u.transpose() * &c.cov;
            small.gemm(T::one(), &b, &b.transpose(), T::one());
        }
        let eig = sym_eig(&small)?;
        let mut spectrum = psd_spectrum(eig.values.as_slice());
        spectrum.resize(p, T::zero());
        let k = select(&spectrum)?;
        let mut q = u * eig.vectors.columns(0, k);
        apply_sign_convention(&mut q);
        return Ok(VecFactorFit { q, spectrum, p1, p2, h0 });
    }
    if let Some(k) = k {
        if p > DENSE_EIG_LIMIT && k + 10 < p {
            let top = top_eigen(p, k, |v| covs.apply_m_vec(v), 1e-11, 20_000)?;
            let mut q = top.vectors;
            apply_sign_convention(&mut q);
            let spectrum = psd_spectrum(top.values.as_slice());
            return Ok(VecFactorFit { q, spectrum, p1, p2, h0 });
        }
    }
    let eig = sym_eig(&covs.m_vec())?;
    let spectrum = psd_spectrum(eig.values.as_slice());
    let k = select(&spectrum)?;
    Ok(VecFactorFit { q: eig.leading(k), spectrum, p1, p2, h0 })
}

/// Top-`k` (or ratio-selected) eigenvectors of the vectorized `M`.
pub fn fit_vec<T: Scalar>(series: &MatrixSeries<T>, h0: usize, k: Option<usize>) -> Result<VecFactorFit<T>> {
    guard(series.p1(), series.p2())?;
    let covs = LagCovSet::compute(series, h0)?;
    fit_vec_from_covs(&covs, k, crate::estimator::DEFAULT_EPS_ABS)
}

/// Projects every `vec(X_t)` onto the span of `q` and reshapes to `p1 x p2`.
pub fn signal_vec<T: Scalar>(fit: &VecFactorFit<T>, series: &MatrixSeries<T>) -> Result<MatrixSeries<T>> {
    if (series.p1(), series.p2()) != (fit.p1, fit.p2) {
        return Err(Error::dims(
            format!("{}x{}", fit.p1, fit.p2),
            format!("{}x{}", series.p1(), series.p2()),
        ));
    }
    let y = series.vec_matrix();
    let z = fit.q.transpose() * &y;
    let proj = &fit.q * z;
    MatrixSeries::from_vec_columns(&proj, fit.p1, fit.p2)
}
