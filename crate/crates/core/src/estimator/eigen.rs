use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Eigen-decomposition with eigenvalues in descending order and columns of
/// `vectors` signed so that `1'q > 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymEigen<T: Scalar> {
    pub values: DVector<T>,
    pub vectors: DMatrix<T>,
}

impl<T: Scalar> SymEigen<T> {
    /// The first `k` eigenvectors.
    pub fn leading(&self, k: usize) -> DMatrix<T> {
        self.vectors.columns(0, k).into_owned()
    }
}

const MAX_QL_SWEEPS: usize = 10_000;

/// Eigenvalues of a PSD aggregate with everything below `1e-10 * lead`
/// (looser for `f32`) set to zero.
pub fn psd_spectrum<T: Scalar>(values: &[T]) -> Vec<T> {
    let lead = values.first().copied().unwrap_or(T::zero()).max(T::zero());
    let floor = lead * T::of(1e-10f64.max(1e2 * T::default_epsilon().to_f64_lossy()));
    values.iter().map(|&v| if v > floor { v } else { T::zero() }).collect()
}

/// Full symmetric eigen-decomposition.
///
/// The input is symmetrized first. Eigenvalues come out descending; each
/// eigenvector is flipped so its entries sum to a positive number, or, when
/// they sum to zero, so its first nonzero entry is positive.
pub fn sym_eig<T: Scalar>(m: &DMatrix<T>) -> Result<SymEigen<T>> {
    if !m.is_square() {
        return Err(Error::dims("square matrix", format!("{}x{}", m.nrows(), m.ncols())));
    }
    let n = m.nrows();
    let mut sym = m.clone();
    crate::series::symmetrize(&mut sym);
    let eig = SymmetricEigen::try_new(sym, T::default_epsilon(), MAX_QL_SWEEPS)
        .ok_or(Error::ConvergenceFailure)?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .partial_cmp(&eig.eigenvalues[a])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let values = DVector::from_iterator(n, order.iter().map(|&i| eig.eigenvalues[i]));
    let mut vectors = DMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    apply_sign_convention(&mut vectors);
    Ok(SymEigen { values, vectors })
}

/// Flips columns so that `1'q > 0`; ties (`1'q == 0`) use the first nonzero entry.
pub fn apply_sign_convention<T: Scalar>(q: &mut DMatrix<T>) {
    let tiny = T::default_epsilon() * T::of(q.nrows().max(1) as f64).sqrt();
    for mut col in q.column_iter_mut() {
        let sum = col.sum();
        let flip = if sum.abs() > tiny {
            sum < T::zero()
        } else {
            col.iter().find(|v| v.abs() > tiny).is_some_and(|v| *v < T::zero())
        };
        if flip {
            col.neg_mut();
        }
    }
}

/// Leading `k` eigenpairs of a symmetric PSD operator of dimension `n`, by
/// block subspace iteration with Rayleigh-Ritz extraction.
///
/// `apply` maps an `n x b` block to its image. Converges when the residual of
/// each of the `k` leading Ritz pairs is below `tol * theta_1`.
pub fn top_eigen<T: Scalar>(
    n: usize,
    k: usize,
    apply: impl Fn(&DMatrix<T>) -> DMatrix<T>,
    tol: f64,
    max_iter: usize,
) -> Result<SymEigen<T>> {
    if k == 0 {
        return Ok(SymEigen { values: DVector::zeros(0), vectors: DMatrix::zeros(n, 0) });
    }
    let b = (k + 10).min(n);
    // Deterministic, well-spread start block.
    let mut v = DMatrix::from_fn(n, b, |i, j| {
        let x = ((i as u64 + 1).wrapping_mul(2654435761) ^ (j as u64 + 1).wrapping_mul(40503)) % 1009;
        T::of(x as f64 / 1009.0 - 0.5)
    });
    let tol = T::of(tol);
    for _ in 0..max_iter {
        let q = v.qr().q();
        let w = apply(&q);
        let h = q.transpose() * &w;
        let ritz = sym_eig(&h)?;
        let s = &ritz.vectors;
        let ws = &w * s;
        let qs = &q * s;
        let scale = ritz.values[0].abs();
        let converged = (0..k).all(|j| {
            let r = ws.column(j) - qs.column(j) * ritz.values[j];
            r.norm() <= tol * scale
        });
        if converged {
            let mut vectors = qs.columns(0, k).into_owned();
            apply_sign_convention(&mut vectors);
            let values = DVector::from_iterator(k, ritz.values.iter().take(k).copied());
            return Ok(SymEigen { values, vectors });
        }
        v = ws;
    }
    Err(Error::ConvergenceFailure)
}
