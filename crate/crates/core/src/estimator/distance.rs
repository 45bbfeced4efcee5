use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

fn orthonormal_tol<T: Scalar>() -> f64 {
    1e-8f64.max(1e3 * T::default_epsilon().to_f64_lossy())
}

/// Errors with `NotOrthonormal` unless `o'o = I` within `1e-8` (looser for `f32`).
pub fn check_orthonormal<T: Scalar>(o: &DMatrix<T>) -> Result<()> {
    let k = o.ncols();
    let g = o.transpose() * o - DMatrix::<T>::identity(k, k);
    let dev = if k == 0 { 0.0 } else { g.amax().to_f64_lossy() };
    if dev > orthonormal_tol::<T>() {
        return Err(Error::NotOrthonormal(dev));
    }
    Ok(())
}

/// Orthonormal basis of the column space of a full-column-rank matrix (thin QR).
pub fn orthonormalize<T: Scalar>(a: &DMatrix<T>) -> DMatrix<T> {
    if a.ncols() == 0 {
        return DMatrix::zeros(a.nrows(), 0);
    }
    a.clone().qr().q()
}

/// `D(O1, O2) = sqrt(1 - tr(O1 O1' O2 O2') / max(q1, q2))`, between 0 (same
/// column space) and 1 (orthogonal spaces).
pub fn subspace_distance<T: Scalar>(o1: &DMatrix<T>, o2: &DMatrix<T>) -> Result<T> {
    if o1.nrows() != o2.nrows() {
        return Err(Error::dims(format!("{} rows", o1.nrows()), format!("{} rows", o2.nrows())));
    }
    check_orthonormal(o1)?;
    check_orthonormal(o2)?;
    let q = o1.ncols().max(o2.ncols());
    if q == 0 {
        return Ok(T::zero());
    }
    // With O orthonormal, q - tr(O1 O1' O2 O2') = ||(I - Os Os') Ob||_F^2 where
    // Ob has q columns; the residual form avoids cancellation near D = 0.
    let (small, big) = if o1.ncols() <= o2.ncols() { (o1, o2) } else { (o2, o1) };
    let resid = big - small * (small.transpose() * big);
    let radicand = resid.norm_squared() / T::of(q as f64);
    Ok(radicand.max(T::zero()).min(T::one()).sqrt())
}
