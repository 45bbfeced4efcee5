use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Per-entry univariate process of the latent factor matrix; innovations are
/// standard normal and AR processes are not rescaled to unit variance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum FactorSpec {
    /// AR(1) with a separate coefficient for each entry, given as `k1` rows of `k2`.
    Ar1 { phi: Vec<Vec<f64>> },
    /// AR(1) with one coefficient shared by all entries.
    Ar1Common { phi: f64 },
    /// `f_t = e_t + theta1 e_{t-1} + theta2 e_{t-2}`.
    Ma2 { theta: [f64; 2] },
}

impl FactorSpec {
    /// The coefficient matrix used in the loading-space experiments.
    pub fn default_ar() -> Self {
        FactorSpec::Ar1 { phi: vec![vec![-0.5, 0.6], vec![0.8, -0.4], vec![0.7, 0.3]] }
    }

    pub fn label(&self) -> String {
        match self {
            FactorSpec::Ar1 { .. } => "ar1".into(),
            FactorSpec::Ar1Common { phi } => format!("ar1({phi})"),
            FactorSpec::Ma2 { theta } => format!("ma2({},{})", theta[0], theta[1]),
        }
    }

    /// `k1 x k2` AR coefficients, or `None` for moving averages.
    pub fn ar_coefficients(&self, k1: usize, k2: usize) -> Result<Option<DMatrix<f64>>> {
        let m = match self {
            FactorSpec::Ma2 { .. } => return Ok(None),
            FactorSpec::Ar1Common { phi } => DMatrix::from_element(k1, k2, *phi),
            FactorSpec::Ar1 { phi } => {
                if phi.len() != k1 || phi.iter().any(|r| r.len() != k2) {
                    return Err(Error::InvalidConfig(format!("AR coefficients must be {k1}x{k2}")));
                }
                DMatrix::from_fn(k1, k2, |i, j| phi[i][j])
            }
        };
        if let Some(bad) = m.iter().find(|v| !(v.abs() < 1.0)) {
            return Err(Error::UnstableAr(*bad));
        }
        Ok(Some(m))
    }
}

/// Noise with `Cov(vec(E_t)) = G2 (x) G1`, each `G` having a constant diagonal
/// and constant off-diagonal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum NoiseSpec {
    None,
    Kronecker { diag1: f64, off1: f64, diag2: f64, off2: f64 },
}

impl Default for NoiseSpec {
    fn default() -> Self {
        NoiseSpec::Kronecker { diag1: 1.0, off1: 0.2, diag2: 1.0, off2: 0.2 }
    }
}

pub(crate) fn compound_symmetric(p: usize, diag: f64, off: f64) -> DMatrix<f64> {
    DMatrix::from_fn(p, p, |i, j| if i == j { diag } else { off })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub p1: usize,
    pub p2: usize,
    pub k1: usize,
    pub k2: usize,
    #[serde(rename = "T")]
    pub t: usize,
    pub delta1: f64,
    pub delta2: f64,
    pub factor_spec: FactorSpec,
    #[serde(default)]
    pub noise_spec: NoiseSpec,
    pub seed: u64,
    #[serde(default = "default_burn_in")]
    pub burn_in: usize,
}

fn default_burn_in() -> usize {
    100
}

impl SimConfig {
    /// The loading-space design: `k = (3, 2)`, AR(1) factors, default noise.
    pub fn standard(p1: usize, p2: usize, t: usize, delta1: f64, delta2: f64, seed: u64) -> Self {
        Self {
            p1,
            p2,
            k1: 3,
            k2: 2,
            t,
            delta1,
            delta2,
            factor_spec: FactorSpec::default_ar(),
            noise_spec: NoiseSpec::default(),
            seed,
            burn_in: default_burn_in(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.p1 == 0 || self.p2 == 0 || self.k1 == 0 || self.k2 == 0 {
            return Err(Error::InvalidConfig("dimensions and ranks must be positive".into()));
        }
        if self.k1 > self.p1 || self.k2 > self.p2 {
            return Err(Error::InvalidConfig("ranks cannot exceed dimensions".into()));
        }
        if self.t < 2 {
            return Err(Error::InvalidConfig("T must be at least 2".into()));
        }
        for d in [self.delta1, self.delta2] {
            if !(0.0..=1.0).contains(&d) {
                return Err(Error::InvalidConfig(format!("factor strength {d} outside [0, 1]")));
            }
        }
        self.factor_spec.ar_coefficients(self.k1, self.k2)?;
        if let NoiseSpec::Kronecker { diag1, off1, diag2, off2 } = self.noise_spec {
            for (p, d, o) in [(self.p1, diag1, off1), (self.p2, diag2, off2)] {
                // eigenvalues d - o (multiplicity p-1) and d + (p-1) o
                if !(d - o > 0.0 && d + (p as f64 - 1.0) * o > 0.0) {
                    return Err(Error::NotSpd);
                }
            }
        }
        Ok(())
    }
}
