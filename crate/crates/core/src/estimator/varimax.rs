use nalgebra::DMatrix;

use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VarimaxOptions {
    /// Normalize rows to unit length before rotating (Kaiser's variant).
    pub kaiser: bool,
    /// Stop when the relative criterion change over a sweep falls below this.
    pub rel_tol: f64,
    pub max_sweeps: usize,
}

impl Default for VarimaxOptions {
    fn default() -> Self {
        Self { kaiser: false, rel_tol: 1e-8, max_sweeps: 1000 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Varimax<T: Scalar> {
    /// `loading * rotation`.
    pub rotated: DMatrix<T>,
    /// Orthogonal `k x k`.
    pub rotation: DMatrix<T>,
    pub criterion_before: T,
    pub criterion_after: T,
    pub sweeps: usize,
}

/// Sum over columns of the variance of the squared loadings.
pub fn varimax_criterion<T: Scalar>(l: &DMatrix<T>) -> T {
    let p = T::of(l.nrows().max(1) as f64);
    l.column_iter().fold(T::zero(), |acc, c| {
        let (mut s2, mut s4) = (T::zero(), T::zero());
        for &v in c.iter() {
            let v2 = v * v;
            s2 += v2;
            s4 += v2 * v2;
        }
        let mean = s2 / p;
        acc + s4 / p - mean * mean
    })
}

/// Raw varimax rotation with default options.
pub fn varimax<T: Scalar>(loading: &DMatrix<T>) -> Varimax<T> {
    varimax_with(loading, VarimaxOptions::default())
}

/// Varimax by cyclic pairwise planar rotations. Each plane rotation uses the
/// closed-form optimal angle, so the criterion never decreases.
pub fn varimax_with<T: Scalar>(loading: &DMatrix<T>, opts: VarimaxOptions) -> Varimax<T> {
    let (p, k) = loading.shape();
    let mut work = loading.clone();
    let norms: Vec<T> = if opts.kaiser {
        work.row_iter().map(|r| r.norm()).collect()
    } else {
        vec![T::one(); p]
    };
    if opts.kaiser {
        for (i, &n) in norms.iter().enumerate() {
            if n > T::zero() {
                work.row_mut(i).unscale_mut(n);
            }
        }
    }
    let before = varimax_criterion(loading);
    let mut rotation = DMatrix::<T>::identity(k, k);
    let mut sweeps = 0;
    if k >= 2 {
        let pf = T::of(p as f64);
        let two = T::of(2.0);
        let four = T::of(4.0);
        let mut crit = varimax_criterion(&work);
        while sweeps < opts.max_sweeps {
            sweeps += 1;
            for a in 0..k - 1 {
                for b in a + 1..k {
                    let (mut su, mut sv, mut suv2, mut suv) = (T::zero(), T::zero(), T::zero(), T::zero());
                    for i in 0..p {
                        let (x, y) = (work[(i, a)], work[(i, b)]);
                        let u = x * x - y * y;
                        let v = two * x * y;
                        su += u;
                        sv += v;
                        suv2 += u * u - v * v;
                        suv += u * v;
                    }
                    let num = two * suv - two * su * sv / pf;
                    let den = suv2 - (su * su - sv * sv) / pf;
                    let phi = num.atan2(den) / four;
                    if phi.abs() <= T::default_epsilon() {
                        continue;
                    }
                    let (s, c) = phi.sin_cos();
                    rotate_pair(&mut work, a, b, c, s);
                    rotate_pair(&mut rotation, a, b, c, s);
                }
            }
            let next = varimax_criterion(&work);
            let change = (next - crit).abs();
            let scale = crit.abs().max(T::default_epsilon());
            crit = next;
            if change / scale < T::of(opts.rel_tol) {
                break;
            }
        }
    }
    let rotated = loading * &rotation;
    let after = varimax_criterion(&rotated);
    Varimax { rotated, rotation, criterion_before: before, criterion_after: after, sweeps }
}

/// Right-multiplies columns `a, b` by the plane rotation `[c -s; s c]`.
fn rotate_pair<T: Scalar>(m: &mut DMatrix<T>, a: usize, b: usize, c: T, s: T) {
    for i in 0..m.nrows() {
        let (x, y) = (m[(i, a)], m[(i, b)]);
        m[(i, a)] = c * x + s * y;
        m[(i, b)] = -s * x + c * y;
    }
}
