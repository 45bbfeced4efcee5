use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use super::eigen::sym_eig;
use crate::series::{lagged_cov_from_vec, symmetrize, LaggedBlockCov, MatrixSeries};

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Row,
    Column,
}

/// Symmetric nonnegative-definite aggregate of lagged covariance products.
#[derive(Debug, Clone, PartialEq)]
pub struct MMatrix<T: Scalar> {
    pub m: DMatrix<T>,
    pub h0: usize,
    pub side: Side,
}

/// `C(1), ..., C(h0)` of one series. Everything the estimators need is
/// derived from these, so each lag is materialized once.
#[derive(Debug, Clone)]
pub struct LagCovSet<T: Scalar> {
    pub covs: Vec<LaggedBlockCov<T>>,
    lead_count: usize,
    lead_basis: Option<DMatrix<T>>,
}

/// Lead-column counts up to which an orthonormal basis of their span is kept
/// for the small-sample vectorized fit.
pub const LEAD_BASIS_LIMIT: usize = 400;

/// Orthonormal basis of the column span of `l`, from the eigen-decomposition
/// of its Gram matrix.
fn range_basis<T: Scalar>(l: &DMatrix<T>) -> Result<DMatrix<T>> {
    let eig = sym_eig(&(l.transpose() * l))?;
    let top = eig.values.iter().copied().fold(T::zero(), T::max);
    let floor = top * T::of(1e-12);
    let keep = eig.values.iter().take_while(|&&v| v > floor && v > T::zero()).count();
    let mut u = l * eig.vectors.columns(0, keep);
    for (j, mut col) in u.column_iter_mut().enumerate() {
        col /= eig.values[j].sqrt();
    }
    Ok(u)
}

fn lead_basis<T: Scalar>(leads: &[DMatrix<T>], p: usize, count: usize) -> Result<Option<DMatrix<T>>> {
    if count == 0 || count >= p || count > LEAD_BASIS_LIMIT {
        return Ok(None);
    }
    let mut l = DMatrix::zeros(p, count);
    let mut at = 0;
    for part in leads {
        l.columns_mut(at, part.ncols()).copy_from(part);
        at += part.ncols();
    }
    range_basis(&l).map(Some)
}

impl<T: Scalar> LagCovSet<T> {
    pub fn compute(series: &MatrixSeries<T>, h0: usize) -> Result<Self> {
        let len = series.len();
        if h0 == 0 || h0 >= len {
            return Err(Error::LagTooLarge { lag: h0, len });
        }
        let y = series.vec_matrix();
        let covs = (1..=h0)
            .map(|h| lagged_cov_from_vec(&y, series.p1(), series.p2(), h))
            .collect::<Result<Vec<_>>>()?;
        let count = len - 1;
        let basis = lead_basis(&[y.columns(0, count).into_owned()], y.nrows(), count)?;
        Ok(Self { covs, lead_count: count, lead_basis: basis })
    }

    /// Lagged covariances pooled over disjoint contiguous segments of one
    /// series. Pairs that straddle a segment boundary are skipped, and each lag
    /// is normalized by its number of within-segment pairs.
    pub fn compute_segments(segments: &[&MatrixSeries<T>], h0: usize) -> Result<Self> {
        let first = segments.first().ok_or_else(|| Error::InvalidSeries("no segments".into()))?;
        let (p1, p2) = (first.p1(), first.p2());
        for s in segments {
            if (s.p1(), s.p2()) != (p1, p2) {
                return Err(Error::dims(format!("{p1}x{p2}"), format!("{}x{}", s.p1(), s.p2())));
            }
        }
        let longest = segments.iter().map(|s| s.len()).max().unwrap_or(0);
        if h0 == 0 || h0 >= longest {
            return Err(Error::LagTooLarge { lag: h0, len: longest });
        }
        let ys: Vec<DMatrix<T>> = segments.iter().map(|s| s.vec_matrix()).collect();
        let p = p1 * p2;
        let mut covs = Vec::with_capacity(h0);
        for h in 1..=h0 {
            let mut cov = DMatrix::zeros(p, p);
            let mut pairs = 0usize;
            for y in &ys {
                if y.ncols() > h {
                    let n = y.ncols() - h;
                    let lagged = y.columns(h, n).transpose();
                    cov.gemm(T::one(), &y.columns(0, n), &lagged, T::one());
                    pairs += n;
                }
            }
            cov /= T::of(pairs as f64);
            covs.push(LaggedBlockCov { h, p1, p2, cov });
        }
        let leads: Vec<DMatrix<T>> =
            ys.iter().filter(|y| y.ncols() > 1).map(|y| y.columns(0, y.ncols() - 1).into_owned()).collect();
        let count = leads.iter().map(|l| l.ncols()).sum();
        let basis = lead_basis(&leads, p, count)?;
        Ok(Self { covs, lead_count: count, lead_basis: basis })
    }

    pub fn h0(&self) -> usize {
        self.covs.len()
    }

    /// Number of lead observations behind the lag-1 covariance. The
    /// vectorized `M` has rank at most this.
    pub fn rank_bound(&self) -> usize {
        self.lead_count
    }

    /// Orthonormal basis of the lead observations when there are fewer of
    /// them than `p1p2` (and at most [`LEAD_BASIS_LIMIT`]).
    pub fn lead_basis(&self) -> Option<&DMatrix<T>> {
        self.lead_basis.as_ref()
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.covs[0].p1, self.covs[0].p2)
    }

    /// `M` for the row (`p1 x p1`) or column (`p2 x p2`) loading space.
    pub fn m(&self, side: Side) -> MMatrix<T> {
        let (p1, p2) = self.dims();
        let n = if side == Side::Row { p1 } else { p2 };
        let mut m = DMatrix::zeros(n, n);
        for c in &self.covs {
            match side {
                Side::Row => m += c.row_gram(),
                Side::Column => m += c.column_gram(),
            }
        }
        symmetrize(&mut m);
        MMatrix { m, h0: self.h0(), side }
    }

    /// The vectorized aggregate `sum_h C(h) C(h)'` (`p1p2 x p1p2`).
    pub fn m_vec(&self) -> DMatrix<T> {
        let p = self.covs[0].cov.nrows();
        let mut m = DMatrix::zeros(p, p);
        for c in &self.covs {
            let ct = c.cov.transpose();
            m.gemm(T::one(), &c.cov, &ct, T::one());
        }
        symmetrize(&mut m);
        m
    }

    /// `sum_h C(h) (C(h)' v)` without forming the vectorized aggregate.
    pub fn apply_m_vec(&self, v: &DMatrix<T>) -> DMatrix<T> {
        let mut out = DMatrix::zeros(v.nrows(), v.ncols());
        for c in &self.covs {
            let ct = c.cov.transpose();
            let w = &ct * v;
            out.gemm(T::one(), &c.cov, &w, T::one());
        }
        out
    }
}

/// `M = sum_{h=1}^{h0} sum_{i,j} W_ij(h) W_ij(h)'` for the requested side; the
/// column side is the row construction applied to the transposed series.
pub fn build_m<T: Scalar>(series: &MatrixSeries<T>, h0: usize, side: Side) -> Result<MMatrix<T>> {
    Ok(LagCovSet::compute(series, h0)?.m(side))
}
