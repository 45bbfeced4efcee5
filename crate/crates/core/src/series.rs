//! Matrix-valued time series storage, preprocessing and the lagged block
//! auto-cross-covariance kernel.

use nalgebra::{DMatrix, DMatrixView, DVector};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// An ordered sequence of `T` real `p1 x p2` matrices.
///
/// Invariants: `T >= 2`, `p1, p2 >= 1`, identical shapes, finite entries.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixSeries<T: Scalar> {
    data: Vec<DMatrix<T>>,
    p1: usize,
    p2: usize,
}

impl<T: Scalar> MatrixSeries<T> {
    pub fn new(data: Vec<DMatrix<T>>) -> Result<Self> {
        let first = data
            .first()
            .ok_or_else(|| Error::InvalidSeries("empty series".into()))?;
        let (p1, p2) = first.shape();
        if data.len() < 2 {
            return Err(Error::InvalidSeries(format!("need T >= 2, got {}", data.len())));
        }
        if p1 == 0 || p2 == 0 {
            return Err(Error::InvalidSeries("matrices must be non-empty".into()));
        }
        for (t, x) in data.iter().enumerate() {
            if x.shape() != (p1, p2) {
                return Err(Error::dims(
                    format!("{p1}x{p2}"),
                    format!("{}x{} at t={}", x.nrows(), x.ncols(), t + 1),
                ));
            }
            if let Some(pos) = x.iter().position(|v| !v.is_finite_value()) {
                return Err(Error::NonFinite { t: t + 1, row: pos % p1 + 1, col: pos / p1 + 1 });
            }
        }
        Ok(Self { data, p1, p2 })
    }

    /// Builds a series from `len` matrices produced by `f(t)`.
    pub fn from_fn(len: usize, mut f: impl FnMut(usize) -> DMatrix<T>) -> Result<Self> {
        Self::new((0..len).map(&mut f).collect())
    }

    /// Inverse of [`vec_series`]: each column of `cols` (length `p1*p2`) becomes one matrix.
    pub fn from_vec_columns(cols: &DMatrix<T>, p1: usize, p2: usize) -> Result<Self> {
        if cols.nrows() != p1 * p2 {
            return Err(Error::dims(format!("{} rows", p1 * p2), format!("{} rows", cols.nrows())));
        }
        Self::new(
            cols.column_iter()
                .map(|c| DMatrix::from_column_slice(p1, p2, c.as_slice()))
                .collect(),
        )
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    /// `(T, p1, p2)`.
    pub fn dims(&self) -> (usize, usize, usize) {
        (self.data.len(), self.p1, self.p2)
    }

    pub fn p1(&self) -> usize {
        self.p1
    }

    pub fn p2(&self) -> usize {
        self.p2
    }

    /// Zero-based access.
    pub fn get(&self, t: usize) -> &DMatrix<T> {
        &self.data[t]
    }

    pub fn iter(&self) -> std::slice::Iter<'_, DMatrix<T>> {
        self.data.iter()
    }

    pub fn matrices(&self) -> &[DMatrix<T>] {
        &self.data
    }

    pub fn into_matrices(self) -> Vec<DMatrix<T>> {
        self.data
    }

    /// Contiguous sub-series `[start, end)`.
    pub fn slice(&self, start: usize, end: usize) -> Result<Self> {
        if start >= end || end > self.len() {
            return Err(Error::InvalidSeries(format!(
                "slice {start}..{end} out of range for T={}",
                self.len()
            )));
        }
        Self::new(self.data[start..end].to_vec())
    }

    /// Sub-series at the given (ordered) time indices.
    pub fn select(&self, idx: &[usize]) -> Result<Self> {
        Self::new(idx.iter().map(|&t| self.data[t].clone()).collect())
    }

    /// `p1*p2 x T` matrix whose column `t` is `vec(X_t)` (column-major stacking).
    pub fn vec_matrix(&self) -> DMatrix<T> {
        let p = self.p1 * self.p2;
        let mut out = DMatrix::zeros(p, self.len());
        for (t, x) in self.data.iter().enumerate() {
            out.column_mut(t).copy_from_slice(x.as_slice());
        }
        out
    }

    /// Multiplies every observation by `c`.
    pub fn scaled(&self, c: T) -> Self {
        Self { data: self.data.iter().map(|x| x * c).collect(), p1: self.p1, p2: self.p2 }
    }

    /// Applies `f` to every observation; the result must keep a common shape.
    pub fn map(&self, f: impl FnMut(&DMatrix<T>) -> DMatrix<T>) -> Result<Self> {
        Self::new(self.data.iter().map(f).collect())
    }

    /// Sum of squared entries over all observations.
    pub fn sum_of_squares(&self) -> T {
        self.data.iter().fold(T::zero(), |acc, x| acc + x.norm_squared())
    }

    /// Converts the scalar type (e.g. `f64` -> `f32`).
    pub fn cast<U: Scalar>(&self) -> MatrixSeries<U> {
        MatrixSeries {
            data: self.data.iter().map(|x| x.map(|v| U::of(v.to_f64_lossy()))).collect(),
            p1: self.p1,
            p2: self.p2,
        }
    }
}

/// Per-cell location/scale estimated on one series and applicable to another,
/// so held-out data can be standardized with training statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct Standardizer<T: Scalar> {
    pub mean: DMatrix<T>,
    pub scale: DMatrix<T>,
}

impl<T: Scalar> Standardizer<T> {
    /// Sample mean and standard deviation (divisor `T-1`) of every cell.
    /// With `scale = false` only centering is performed.
    pub fn fit(series: &MatrixSeries<T>, scale: bool) -> Result<Self> {
        let (len, p1, p2) = series.dims();
        let n = T::of(len as f64);
        let mut mean = DMatrix::zeros(p1, p2);
        for x in series.iter() {
            mean += x;
        }
        mean /= n;
        let mut sd = DMatrix::from_element(p1, p2, T::one());
        if scale {
            let mut ss = DMatrix::<T>::zeros(p1, p2);
            for x in series.iter() {
                let d = x - &mean;
                ss += d.component_mul(&d);
            }
            let denom = T::of((len - 1) as f64);
            for j in 0..p2 {
                for i in 0..p1 {
                    let s = (ss[(i, j)] / denom).sqrt();
                    // Constant cells have exactly zero spread up to rounding of the mean.
                    let tol = T::of(1e-12) * (T::one() + mean[(i, j)].abs());
                    if s <= tol {
                        return Err(Error::ZeroVarianceCell { row: i + 1, col: j + 1 });
                    }
                    sd[(i, j)] = s;
                }
            }
        }
        Ok(Self { mean, scale: sd })
    }

    pub fn apply(&self, series: &MatrixSeries<T>) -> Result<MatrixSeries<T>> {
        if (series.p1(), series.p2()) != self.mean.shape() {
            return Err(Error::dims(
                format!("{}x{}", self.mean.nrows(), self.mean.ncols()),
                format!("{}x{}", series.p1(), series.p2()),
            ));
        }
        series.map(|x| (x - &self.mean).component_div(&self.scale))
    }
}

/// Centers every cell series to mean zero and scales it to unit sample
/// standard deviation (divisor `T-1`).
pub fn standardize<T: Scalar>(series: &MatrixSeries<T>) -> Result<MatrixSeries<T>> {
    Standardizer::fit(series, true)?.apply(series)
}

/// Centers every cell series without rescaling.
pub fn center<T: Scalar>(series: &MatrixSeries<T>) -> MatrixSeries<T> {
    let s = Standardizer::fit(series, false).expect("centering cannot fail");
    s.apply(series).expect("shape preserved")
}

/// Replaces every `X_t` by `X_t'`.
pub fn transpose_series<T: Scalar>(series: &MatrixSeries<T>) -> MatrixSeries<T> {
    MatrixSeries {
        data: series.iter().map(|x| x.transpose()).collect(),
        p1: series.p2,
        p2: series.p1,
    }
}

/// `vec(X_t)` for every `t`, stacking columns.
pub fn vec_series<T: Scalar>(series: &MatrixSeries<T>) -> Vec<DVector<T>> {
    series.iter().map(|x| DVector::from_column_slice(x.as_slice())).collect()
}

/// The lag-`h` auto-cross-covariance `C(h) = (1/(T-h)) sum_t vec(X_t) vec(X_{t+h})'`
/// of the vectorized series, viewed as a `p2 x p2` grid of `p1 x p1` blocks.
/// Block `(i, j)` is `(1/(T-h)) sum_t x_{t,i} x_{t+h,j}'` where `x_{t,i}` is the
/// `i`-th column of `X_t`.
#[derive(Debug, Clone, PartialEq)]
pub struct LaggedBlockCov<T: Scalar> {
    pub h: usize,
    pub p1: usize,
    pub p2: usize,
    /// The full `p1*p2 x p1*p2` matrix.
    pub cov: DMatrix<T>,
}

impl<T: Scalar> LaggedBlockCov<T> {
    /// Block `(i, j)` (zero-based column indices of `X_t`).
    pub fn block(&self, i: usize, j: usize) -> DMatrix<T> {
        self.cov.view((i * self.p1, j * self.p1), (self.p1, self.p1)).into_owned()
    }

    /// `sum_{i,j} B_ij B_ij'` (`p1 x p1`).
    ///
    /// The column-major buffer of `C(h)` read as a `p1 x (p2 * p1p2)` matrix
    /// has the rows of every block row side by side, so this is one product.
    pub fn row_gram(&self) -> DMatrix<T> {
        let p = self.p1 * self.p2;
        let w = DMatrixView::from_slice(self.cov.as_slice(), self.p1, self.p2 * p);
        let mut out = &w * w.transpose();
        symmetrize(&mut out);
        out
    }

    /// The same aggregate for the transposed series (`p2 x p2`), read directly
    /// from `C(h)` without permuting it.
    pub fn column_gram(&self) -> DMatrix<T> {
        let (p1, p2) = (self.p1, self.p2);
        let mut out = DMatrix::<T>::zeros(p2, p2);
        for a in 0..p1 {
            let rows: Vec<usize> = (0..p2).map(|b| a + p1 * b).collect();
            let v = self.cov.select_rows(&rows);
            out.gemm(T::one(), &v, &v.transpose(), T::one());
        }
        symmetrize(&mut out);
        out
    }

    /// `C(h)` of the transposed series: entry `((b,a),(d,c))` equals entry
    /// `((a,b),(c,d))` of this one.
    pub fn transposed(&self) -> Self {
        let (p1, p2) = (self.p1, self.p2);
        let p = p1 * p2;
        let cov = DMatrix::from_fn(p, p, |r, c| {
            let (b, a) = (r % p2, r / p2);
            let (d, cc) = (c % p2, c / p2);
            self.cov[(a + p1 * b, cc + p1 * d)]
        });
        Self { h: self.h, p1: p2, p2: p1, cov }
    }
}

pub(crate) fn symmetrize<T: Scalar>(m: &mut DMatrix<T>) {
    let n = m.nrows();
    let half = T::of(0.5);
    for j in 0..n {
        for i in (j + 1)..n {
            let v = (m[(i, j)] + m[(j, i)]) * half;
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
}

/// `C(h)` for `1 <= h <= T-1`.
pub fn lagged_block_cov<T: Scalar>(series: &MatrixSeries<T>, h: usize) -> Result<LaggedBlockCov<T>> {
    let y = series.vec_matrix();
    lagged_cov_from_vec(&y, series.p1(), series.p2(), h)
}

/// Same as [`lagged_block_cov`] from the precomputed `p1*p2 x T` matrix of
/// vectorized observations.
pub fn lagged_cov_from_vec<T: Scalar>(
    y: &DMatrix<T>,
    p1: usize,
    p2: usize,
    h: usize,
) -> Result<LaggedBlockCov<T>> {
    let len = y.ncols();
    if h == 0 || h >= len {
        return Err(Error::LagTooLarge { lag: h, len });
    }
    let n = len - h;
    let lead = y.columns(0, n);
    let lagged = y.columns(h, n).transpose();
    let mut cov = lead * lagged;
    cov /= T::of(n as f64);
    Ok(LaggedBlockCov { h, p1, p2, cov })
}
