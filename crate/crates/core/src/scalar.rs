use nalgebra::RealField;
use num_traits::{FromPrimitive, ToPrimitive};

/// Real scalar the estimators are generic over.
///
/// Implemented for `f32` and `f64`. Dense products on these types dispatch to
/// the optimized GEMM kernel inside `nalgebra`.
pub trait Scalar: RealField + Copy + FromPrimitive + ToPrimitive + Send + Sync + 'static {
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("f64 is representable")
    }

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    fn is_finite_value(self) -> bool {
        self.to_f64().is_some_and(f64::is_finite)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}
