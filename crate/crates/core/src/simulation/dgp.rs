use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal, Uniform};

use super::config::{compound_symmetric, FactorSpec, NoiseSpec, SimConfig};
use crate::error::{Error, Result};
use crate::estimator::{orthonormalize, sym_eig};
use crate::series::MatrixSeries;

/// Ground truth of a simulated dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct SimTruth {
    /// Row loading `p1 x k1`.
    pub r: DMatrix<f64>,
    /// Column loading `p2 x k2`.
    pub c: DMatrix<f64>,
    pub factors: Vec<DMatrix<f64>>,
    /// `S_t = R F_t C'`.
    pub signal: Vec<DMatrix<f64>>,
    pub noise: Option<Vec<DMatrix<f64>>>,
}

impl SimTruth {
    /// Orthonormal basis of the row loading space.
    pub fn q1(&self) -> DMatrix<f64> {
        orthonormalize(&self.r)
    }

    pub fn q2(&self) -> DMatrix<f64> {
        orthonormalize(&self.c)
    }
}

/// `p x k` loading with i.i.d. `U(-p^{-delta/2}, p^{-delta/2})` entries.
pub fn gen_loadings<R: Rng + ?Sized>(p: usize, k: usize, delta: f64, rng: &mut R) -> DMatrix<f64> {
    let a = (p as f64).powf(-delta / 2.0);
    let u = Uniform::new(-a, a).expect("positive bound");
    DMatrix::from_fn(p, k, |_, _| u.sample(rng))
}

/// `T` factor matrices (`k1 x k2`) whose entries are independent univariate
/// processes driven by standard normal innovations. AR processes start at zero
/// and discard `burn_in` steps.
pub fn gen_factors<R: Rng + ?Sized>(
    spec: &FactorSpec,
    k1: usize,
    k2: usize,
    t: usize,
    burn_in: usize,
    rng: &mut R,
) -> Result<Vec<DMatrix<f64>>> {
    let draw = |rng: &mut R| DMatrix::from_fn(k1, k2, |_, _| StandardNormal.sample(rng));
    match spec.ar_coefficients(k1, k2)? {
        Some(phi) => {
            let mut f = DMatrix::zeros(k1, k2);
            let mut out = Vec::with_capacity(t);
            for step in 0..burn_in + t {
                let e = draw(rng);
                f = phi.component_mul(&f) + e;
                if step >= burn_in {
                    out.push(f.clone());
                }
            }
            Ok(out)
        }
        None => {
            let FactorSpec::Ma2 { theta } = spec else { unreachable!() };
            let e: Vec<DMatrix<f64>> = (0..t + 2).map(|_| draw(rng)).collect();
            Ok((2..t + 2)
                .map(|s| &e[s] + &e[s - 1] * theta[0] + &e[s - 2] * theta[1])
                .collect())
        }
    }
}

/// Symmetric square root of an SPD matrix via its eigen-decomposition.
pub fn sqrt_spd(g: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let e = sym_eig(g)?;
    let n = g.nrows();
    if e.values.iter().any(|&v| v <= 0.0) {
        return Err(Error::NotSpd);
    }
    let mut scaled = e.vectors.clone();
    for j in 0..n {
        let s = e.values[j].sqrt();
        scaled.column_mut(j).scale_mut(s);
    }
    Ok(scaled * e.vectors.transpose())
}

/// `E_t = G1^{1/2} W_t G2^{1/2}` with i.i.d. standard normal `W_t`, so that
/// `Cov(vec(E_t)) = G2 (x) G1`.
pub fn gen_noise<R: Rng + ?Sized>(
    spec: &NoiseSpec,
    p1: usize,
    p2: usize,
    t: usize,
    rng: &mut R,
) -> Result<Vec<DMatrix<f64>>> {
    match *spec {
        NoiseSpec::None => Ok(vec![DMatrix::zeros(p1, p2); t]),
        NoiseSpec::Kronecker { diag1, off1, diag2, off2 } => {
            let a = sqrt_spd(&compound_symmetric(p1, diag1, off1))?;
            let b = sqrt_spd(&compound_symmetric(p2, diag2, off2))?;
            Ok((0..t)
                .map(|_| {
                    let w = DMatrix::from_fn(p1, p2, |_, _| StandardNormal.sample(rng));
                    &a * w * &b
                })
                .collect())
        }
    }
}

pub(crate) fn simulate_with<R: Rng + ?Sized>(
    config: &SimConfig,
    rng: &mut R,
    keep_noise: bool,
) -> Result<(MatrixSeries<f64>, SimTruth)> {
    config.validate()?;
    let r = gen_loadings(config.p1, config.k1, config.delta1, rng);
    let c = gen_loadings(config.p2, config.k2, config.delta2, rng);
    let factors = gen_factors(&config.factor_spec, config.k1, config.k2, config.t, config.burn_in, rng)?;
    let noise = gen_noise(&config.noise_spec, config.p1, config.p2, config.t, rng)?;
    let ct = c.transpose();
    let signal: Vec<DMatrix<f64>> = factors.iter().map(|f| &r * f * &ct).collect();
    let x = MatrixSeries::new(signal.iter().zip(&noise).map(|(s, e)| s + e).collect())?;
    let truth = SimTruth { r, c, factors, signal, noise: keep_noise.then_some(noise) };
    Ok((x, truth))
}

/// `X_t = R F_t C' + E_t` drawn from a generator seeded with `config.seed`.
pub fn simulate(config: &SimConfig) -> Result<(MatrixSeries<f64>, SimTruth)> {
    let mut rng = super::rng::seeded(config.seed);
    simulate_with(config, &mut rng, true)
}
