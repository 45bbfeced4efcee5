use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Default absolute floor on the leading eigenvalue below which the spectrum
/// is treated as all noise.
pub const DEFAULT_EPS_ABS: f64 = 1e-12;

/// Eigenvalue-ratio rank: `argmin_{1 <= i <= floor(p/2)} lambda_{i+1} / lambda_i`
/// over a descending spectrum of length `p`. Ties go to the smallest `i`.
///
/// Ratios whose denominator is zero (the spectrum has already collapsed)
/// count as 1 so they never beat an actual drop.
pub fn estimate_rank<T: Scalar>(spectrum: &[T], eps_abs: f64) -> Result<usize> {
    let p = spectrum.len();
    if p < 2 {
        return Err(Error::InvalidConfig(format!("rank selection needs p >= 2, got {p}")));
    }
    let lead = spectrum[0];
    if lead <= T::of(eps_abs) {
        return Err(Error::DegenerateSpectrum(lead.to_f64_lossy()));
    }
    let mut best = 1;
    let mut best_ratio = T::one();
    let mut first = true;
    for i in 1..=p / 2 {
        let (num, den) = (spectrum[i].max(T::zero()), spectrum[i - 1].max(T::zero()));
        let ratio = if den > T::zero() { num / den } else { T::one() };
        if first || ratio < best_ratio {
            best = i;
            best_ratio = ratio;
            first = false;
        }
    }
    Ok(best)
}
