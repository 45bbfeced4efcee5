use std::collections::BTreeMap;
use std::fmt::Write as _;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{FactorSpec, NoiseSpec, SimConfig};
use super::dgp::{simulate_with, SimTruth};
use super::rng::replicate_rng;
use crate::baseline::fit_vec_from_covs;
use crate::error::{Error, Result};
use crate::estimator::{
    estimate_rank, fit_from_covs, orthonormalize, subspace_distance, EstimatorOptions, FactorFit,
    LagCovSet, DEFAULT_EPS_ABS,
};
use crate::io::fmt_sig;
use crate::series::MatrixSeries;

/// Sample size of a grid cell: absolute, or a multiple of `p1 * p2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TSpec {
    Abs(usize),
    TimesP { times_p: f64 },
}

impl TSpec {
    pub fn resolve(&self, p1: usize, p2: usize) -> usize {
        match *self {
            TSpec::Abs(t) => t,
            TSpec::TimesP { times_p } => (times_p * (p1 * p2) as f64).round() as usize,
        }
    }

    pub fn label(&self) -> String {
        match *self {
            TSpec::Abs(t) => t.to_string(),
            TSpec::TimesP { times_p } => format!("{times_p}p"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    /// `D(Q1_hat, Q1)` with the true ranks.
    DQ1,
    DQ2,
    /// `D(Q2_hat (x) Q1_hat, Q2 (x) Q1)`.
    DQMat,
    /// `D(Q_vec_hat, Q2 (x) Q1)` for the vectorized estimator with `k = k1 k2`.
    DQVec,
    /// `(p1 p2)^{-1/2} mean_t ||S_hat_t - S_t||_2` for the matrix estimator.
    DSMat,
    DSVec,
    /// Frequencies of the ratio-selected `(k1_hat, k2_hat)`.
    RankPair,
    /// Frequencies of the ratio-selected total rank of the vectorized estimator.
    RankVec,
}

impl Metric {
    pub fn name(&self) -> &'static str {
        match self {
            Metric::DQ1 => "d_q1",
            Metric::DQ2 => "d_q2",
            Metric::DQMat => "d_q_mat",
            Metric::DQVec => "d_q_vec",
            Metric::DSMat => "d_s_mat",
            Metric::DSVec => "d_s_vec",
            Metric::RankPair => "rank_pair",
            Metric::RankVec => "rank_vec",
        }
    }

    fn is_scalar(&self) -> bool {
        !matches!(self, Metric::RankPair | Metric::RankVec)
    }
}

/// Which estimators a study or validation run covers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelChoice {
    Matrix,
    Vector,
    #[default]
    Both,
}

/// Grid dimensions, used to lay out table-shaped output.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    Factor,
    Delta,
    Dims,
    T,
    H0,
}

/// Simulation grid. Every list is swept; cells are enumerated in the order
/// factors, deltas, dims, T, h0 (last fastest). Cells that differ only in
/// `h0` share their simulated data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridConfig {
    /// `(p1, p2)` pairs.
    pub dims: Vec<[usize; 2]>,
    /// `(delta1, delta2)` pairs.
    pub deltas: Vec<[f64; 2]>,
    #[serde(rename = "T")]
    pub t: Vec<TSpec>,
    #[serde(default = "default_h0")]
    pub h0: Vec<usize>,
    #[serde(default = "default_factors")]
    pub factors: Vec<FactorSpec>,
    #[serde(default)]
    pub noise_spec: NoiseSpec,
    #[serde(default = "default_k1")]
    pub k1: usize,
    #[serde(default = "default_k2")]
    pub k2: usize,
    #[serde(default = "default_burn_in")]
    pub burn_in: usize,
    pub replicates: usize,
    pub seed: u64,
    pub metrics: Vec<Metric>,
    /// Axes spread across columns in the table-shaped CSV; the rest index rows.
    #[serde(default = "default_columns")]
    pub columns: Vec<Axis>,
}

fn default_h0() -> Vec<usize> {
    vec![1]
}
fn default_factors() -> Vec<FactorSpec> {
    vec![FactorSpec::default_ar()]
}
fn default_k1() -> usize {
    3
}
fn default_k2() -> usize {
    2
}
fn default_burn_in() -> usize {
    100
}
fn default_columns() -> Vec<Axis> {
    vec![Axis::T, Axis::H0]
}

impl GridConfig {
    /// A grid with the default AR design and noise.
    pub fn new(dims: Vec<[usize; 2]>, deltas: Vec<[f64; 2]>, t: Vec<TSpec>, metrics: Vec<Metric>, replicates: usize, seed: u64) -> Self {
        Self {
            dims,
            deltas,
            t,
            h0: default_h0(),
            factors: default_factors(),
            noise_spec: NoiseSpec::default(),
            k1: default_k1(),
            k2: default_k2(),
            burn_in: default_burn_in(),
            replicates,
            seed,
            metrics,
            columns: default_columns(),
        }
    }

    fn validate(&self) -> Result<()> {
        if self.replicates == 0 {
            return Err(Error::InvalidConfig("replicates must be >= 1".into()));
        }
        if self.dims.is_empty() || self.deltas.is_empty() || self.t.is_empty() || self.h0.is_empty() || self.factors.is_empty() {
            return Err(Error::InvalidConfig("every swept list needs at least one entry".into()));
        }
        if self.h0.contains(&0) {
            return Err(Error::InvalidConfig("h0 must be >= 1".into()));
        }
        Ok(())
    }

    fn data_cells(&self) -> Vec<DataCell> {
        let mut out = Vec::new();
        for f in &self.factors {
            for d in &self.deltas {
                for dims in &self.dims {
                    for ts in &self.t {
                        let t = ts.resolve(dims[0], dims[1]);
                        out.push(DataCell {
                            index: out.len() as u64,
                            config: SimConfig {
                                p1: dims[0],
                                p2: dims[1],
                                k1: self.k1,
                                k2: self.k2,
                                t,
                                delta1: d[0],
                                delta2: d[1],
                                factor_spec: f.clone(),
                                noise_spec: self.noise_spec,
                                seed: self.seed,
                                burn_in: self.burn_in,
                            },
                            t_label: ts.label(),
                        });
                    }
                }
            }
        }
        out
    }
}

struct DataCell {
    index: u64,
    config: SimConfig,
    t_label: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellKey {
    pub factor: String,
    pub delta1: f64,
    pub delta2: f64,
    pub p1: usize,
    pub p2: usize,
    #[serde(rename = "T")]
    pub t: usize,
    pub t_label: String,
    pub h0: usize,
}

impl CellKey {
    fn axis_label(&self, axis: Axis) -> String {
        match axis {
            Axis::Factor => self.factor.clone(),
            Axis::Delta => format!("({},{})", self.delta1, self.delta2),
            Axis::Dims => format!("({},{})", self.p1, self.p2),
            Axis::T => format!("T={}", self.t_label),
            Axis::H0 => format!("h0={}", self.h0),
        }
    }
}

/// Mean, sample standard deviation (divisor `n-1`) and count.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: f64,
    pub sd: f64,
    pub n: usize,
}

impl Summary {
    pub fn of(values: &[f64]) -> Self {
        let n = values.len();
        let mean = neumaier(values.iter().copied()) / n as f64;
        let sd = if n > 1 {
            (neumaier(values.iter().map(|v| (v - mean) * (v - mean))) / (n - 1) as f64).sqrt()
        } else {
            0.0
        };
        Self { mean, sd, n }
    }

    /// Standard error of the mean.
    pub fn se(&self) -> f64 {
        self.sd / (self.n as f64).sqrt()
    }
}

/// Compensated (Neumaier) summation.
pub(crate) fn neumaier(values: impl Iterator<Item = f64>) -> f64 {
    let (mut sum, mut comp) = (0.0f64, 0.0f64);
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellReport {
    pub key: CellKey,
    pub metrics: BTreeMap<String, Summary>,
    /// `"(k1,k2)" -> relative frequency`.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub rank_pairs: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub rank_vec: BTreeMap<String, f64>,
}

impl CellReport {
    pub fn metric(&self, m: Metric) -> Option<Summary> {
        self.metrics.get(m.name()).copied()
    }

    pub fn rank_pair_freq(&self, k1: usize, k2: usize) -> f64 {
        self.rank_pairs.get(&format!("({k1},{k2})")).copied().unwrap_or(0.0)
    }

    pub fn rank_vec_freq(&self, k: usize) -> f64 {
        self.rank_vec.get(&k.to_string()).copied().unwrap_or(0.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyReport {
    pub grid: GridConfig,
    pub cells: Vec<CellReport>,
}

#[derive(Debug, Clone, Default)]
struct Outcome {
    values: Vec<(Metric, f64)>,
    rank_pair: Option<(usize, usize)>,
    rank_vec: Option<usize>,
}

/// Spectral norm (largest singular value).
pub fn spectral_norm(m: &DMatrix<f64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    let g = if m.nrows() <= m.ncols() { m * m.transpose() } else { m.transpose() * m };
    let ev = g.symmetric_eigenvalues();
    ev.max().max(0.0).sqrt()
}

/// `(p1 p2)^{-1/2} (1/T) sum_t ||est_t - truth_t||_2`.
pub fn signal_distance(estimate: &[DMatrix<f64>], truth: &[DMatrix<f64>]) -> Result<f64> {
    if estimate.len() != truth.len() || estimate.is_empty() {
        return Err(Error::dims(format!("{} matrices", truth.len()), format!("{}", estimate.len())));
    }
    let (p1, p2) = truth[0].shape();
    let total = neumaier(estimate.iter().zip(truth).map(|(a, b)| spectral_norm(&(a - b))));
    Ok(total / estimate.len() as f64 / ((p1 * p2) as f64).sqrt())
}

/// Matrix-estimator signal error using the low-rank structure: both `S_hat_t`
/// and `S_t` live in `span[Q1_hat, Q1] x span[Q2_hat, Q2]`, so the spectral norm
/// of the difference equals that of a small core matrix.
fn signal_distance_lowrank(fit: &FactorFit<f64>, x: &MatrixSeries<f64>, truth: &SimTruth, q1: &DMatrix<f64>, q2: &DMatrix<f64>) -> f64 {
    let u = orthonormalize(&concat(&fit.q1.q, q1));
    let v = orthonormalize(&concat(&fit.q2.q, q2));
    let ut = u.transpose();
    let a = &ut * &fit.q1.q;
    let b = fit.q2.q.transpose() * &v;
    let q1t = fit.q1.q.transpose();
    let (p1, p2) = (x.p1(), x.p2());
    let total = neumaier(x.iter().zip(&truth.signal).map(|(xt, st)| {
        let z = &q1t * xt * &fit.q2.q;
        let core = &a * z * &b - &ut * st * &v;
        spectral_norm(&core)
    }));
    total / x.len() as f64 / ((p1 * p2) as f64).sqrt()
}

fn concat(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(a.nrows(), a.ncols() + b.ncols());
    out.columns_mut(0, a.ncols()).copy_from(a);
    out.columns_mut(a.ncols(), b.ncols()).copy_from(b);
    out
}

fn run_replicate(cell: &DataCell, grid: &GridConfig, rep: usize) -> Result<Vec<Outcome>> {
    let mut rng = replicate_rng(grid.seed, cell.index, rep as u64);
    let (x, truth) = simulate_with(&cell.config, &mut rng, false)?;
    let (k1, k2) = (cell.config.k1, cell.config.k2);
    let q1 = truth.q1();
    let q2 = truth.q2();
    let q_kron = q2.kronecker(&q1);
    let wants = |m: Metric| grid.metrics.contains(&m);
    let need_mat = [Metric::DQ1, Metric::DQ2, Metric::DQMat, Metric::DSMat, Metric::RankPair].into_iter().any(wants);
    let need_vec = wants(Metric::DQVec) || wants(Metric::DSVec);

    let hmax = *grid.h0.iter().max().expect("validated");
    let mut covs = LagCovSet::compute(&x, hmax)?;
    let mut h0s: Vec<usize> = grid.h0.clone();
    h0s.sort_unstable();
    h0s.dedup();
    let mut by_h0 = BTreeMap::new();
    // Largest lag first so the covariance set can shrink in place.
    for &h0 in h0s.iter().rev() {
        covs.covs.truncate(h0);
        let mut out = Outcome::default();
        if need_mat {
            let fit = fit_from_covs(&covs, EstimatorOptions::fixed(h0, k1, k2))?;
            if wants(Metric::DQ1) {
                out.values.push((Metric::DQ1, subspace_distance(&fit.q1.q, &q1)?));
            }
            if wants(Metric::DQ2) {
                out.values.push((Metric::DQ2, subspace_distance(&fit.q2.q, &q2)?));
            }
            if wants(Metric::DQMat) {
                let kron = fit.q2.q.kronecker(&fit.q1.q);
                out.values.push((Metric::DQMat, subspace_distance(&kron, &q_kron)?));
            }
            if wants(Metric::DSMat) {
                out.values.push((Metric::DSMat, signal_distance_lowrank(&fit, &x, &truth, &q1, &q2)));
            }
            if wants(Metric::RankPair) {
                let a = estimate_rank(&fit.q1.full_spectrum, DEFAULT_EPS_ABS)?;
                let b = estimate_rank(&fit.q2.full_spectrum, DEFAULT_EPS_ABS)?;
                out.rank_pair = Some((a, b));
            }
        }
        if need_vec {
            let vf = fit_vec_from_covs(&covs, Some(k1 * k2), DEFAULT_EPS_ABS)?;
            if wants(Metric::DQVec) {
                out.values.push((Metric::DQVec, subspace_distance(&vf.q, &q_kron)?));
            }
            if wants(Metric::DSVec) {
                let shat = crate::baseline::signal_vec(&vf, &x)?;
                out.values.push((Metric::DSVec, signal_distance(shat.matrices(), &truth.signal)?));
            }
        }
        if wants(Metric::RankVec) {
            let vf = fit_vec_from_covs(&covs, None, DEFAULT_EPS_ABS)?;
            out.rank_vec = Some(vf.k());
        }
        by_h0.insert(h0, out);
    }
    Ok(grid.h0.iter().map(|h| by_h0[h].clone()).collect())
}

/// Runs every grid cell for `grid.replicates` replicates.
///
/// Replicates run in parallel on at most `threads` workers (all available when
/// `None`); results are aggregated in replicate order, so the report does not
/// depend on the thread count.
pub fn run_study(grid: &GridConfig, threads: Option<usize>) -> Result<StudyReport> {
    grid.validate()?;
    let cells = grid.data_cells();
    for c in &cells {
        c.config.validate()?;
    }
    let jobs: Vec<(usize, usize)> = (0..cells.len())
        .flat_map(|c| (0..grid.replicates).map(move |r| (c, r)))
        .collect();
    let work = || -> Result<Vec<Vec<Outcome>>> {
        jobs.par_iter().map(|&(c, r)| run_replicate(&cells[c], grid, r)).collect()
    };
    let results = match threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .map_err(|e| Error::InvalidConfig(e.to_string()))?
            .install(work)?,
        None => work()?,
    };

    let mut reports = Vec::new();
    for (ci, cell) in cells.iter().enumerate() {
        let reps = &results[ci * grid.replicates..(ci + 1) * grid.replicates];
        for (hi, &h0) in grid.h0.iter().enumerate() {
            let key = CellKey {
                factor: cell.config.factor_spec.label(),
                delta1: cell.config.delta1,
                delta2: cell.config.delta2,
                p1: cell.config.p1,
                p2: cell.config.p2,
                t: cell.config.t,
                t_label: cell.t_label.clone(),
                h0,
            };
            let mut metrics = BTreeMap::new();
            for m in grid.metrics.iter().filter(|m| m.is_scalar()) {
                let vals: Vec<f64> = reps
                    .iter()
                    .filter_map(|o| o[hi].values.iter().find(|(mm, _)| mm == m).map(|(_, v)| *v))
                    .collect();
                metrics.insert(m.name().to_string(), Summary::of(&vals));
            }
            let n = grid.replicates as f64;
            let mut rank_pairs = BTreeMap::new();
            let mut rank_vec = BTreeMap::new();
            for o in reps {
                if let Some((a, b)) = o[hi].rank_pair {
                    *rank_pairs.entry(format!("({a},{b})")).or_insert(0.0) += 1.0 / n;
                }
                if let Some(k) = o[hi].rank_vec {
                    *rank_vec.entry(k.to_string()).or_insert(0.0) += 1.0 / n;
                }
            }
            reports.push(CellReport { key, metrics, rank_pairs, rank_vec });
        }
    }
    Ok(StudyReport { grid: grid.clone(), cells: reports })
}

impl StudyReport {
    /// Looks up a cell by its coordinates.
    pub fn cell(&self, p1: usize, p2: usize, t: usize, delta: (f64, f64), h0: usize) -> Option<&CellReport> {
        self.cells.iter().find(|c| {
            let k = &c.key;
            (k.p1, k.p2, k.t, k.h0) == (p1, p2, t, h0) && (k.delta1, k.delta2) == delta
        })
    }

    fn scalar_metrics(&self) -> Vec<Metric> {
        self.grid.metrics.iter().copied().filter(Metric::is_scalar).collect()
    }

    /// One row per cell and metric: `factor,delta1,delta2,p1,p2,T,h0,metric,mean,sd,n`.
    pub fn to_long_csv(&self) -> String {
        let mut s = String::from("factor,delta1,delta2,p1,p2,T,h0,metric,mean,sd,n\n");
        for c in &self.cells {
            let k = &c.key;
            for m in self.scalar_metrics() {
                let sm = c.metrics[m.name()];
                let _ = writeln!(
                    s,
                    "{},{},{},{},{},{},{},{},{},{},{}",
                    k.factor, k.delta1, k.delta2, k.p1, k.p2, k.t, k.h0, m.name(),
                    fmt_sig(sm.mean, 6), fmt_sig(sm.sd, 6), sm.n
                );
            }
        }
        s
    }

    /// Table layout: rows indexed by the axes not listed in `grid.columns`, one
    /// column per (column-axis value, metric), cells formatted `mean(sd)`.
    /// `paper_scale` multiplies distances by 10.
    pub fn to_table_csv(&self, paper_scale: bool) -> String {
        let all = [Axis::Factor, Axis::Delta, Axis::Dims, Axis::T, Axis::H0];
        let row_axes: Vec<Axis> = all.iter().copied().filter(|a| !self.grid.columns.contains(a)).collect();
        let col_axes: Vec<Axis> = all.iter().copied().filter(|a| self.grid.columns.contains(a)).collect();
        let metrics = self.scalar_metrics();
        let label = |c: &CellReport, axes: &[Axis]| axes.iter().map(|&a| c.key.axis_label(a)).collect::<Vec<_>>().join("|");
        let mut rows: Vec<String> = Vec::new();
        let mut cols: Vec<String> = Vec::new();
        for c in &self.cells {
            let (r, k) = (label(c, &row_axes), label(c, &col_axes));
            if !rows.contains(&r) {
                rows.push(r);
            }
            if !cols.contains(&k) {
                cols.push(k);
            }
        }
        let scale = if paper_scale { 10.0 } else { 1.0 };
        let mut s = String::new();
        let header_axes: Vec<String> = row_axes.iter().map(|a| format!("{a:?}").to_lowercase()).collect();
        s.push_str(&header_axes.join(","));
        for k in &cols {
            for m in &metrics {
                let name = if k.is_empty() { m.name().to_string() } else { format!("{k}|{}", m.name()) };
                let _ = write!(s, ",{name}");
            }
        }
        s.push('\n');
        for r in &rows {
            let parts: Vec<&str> = if r.is_empty() { vec![] } else { r.split('|').collect() };
            s.push_str(&parts.iter().map(|p| quote(p)).collect::<Vec<_>>().join(","));
            for k in &cols {
                let cell = self.cells.iter().find(|c| &label(c, &row_axes) == r && &label(c, &col_axes) == k);
                for m in &metrics {
                    let v = cell
                        .and_then(|c| c.metric(*m))
                        .map(|sm| format!("{}({})", fmt_sig(sm.mean * scale, 6), fmt_sig(sm.sd * scale, 6)))
                        .unwrap_or_default();
                    let _ = write!(s, ",{v}");
                }
            }
            s.push('\n');
        }
        s
    }

    /// Rank-selection frequencies, one row per cell and estimate.
    pub fn to_rank_csv(&self) -> String {
        let mut s = String::from("factor,delta1,delta2,p1,p2,T,h0,model,rank,freq\n");
        for c in &self.cells {
            let k = &c.key;
            for (model, map) in [("matrix", &c.rank_pairs), ("vector", &c.rank_vec)] {
                for (r, f) in map {
                    let _ = writeln!(
                        s,
                        "{},{},{},{},{},{},{},{},{},{}",
                        k.factor, k.delta1, k.delta2, k.p1, k.p2, k.t, k.h0, model, quote(r), fmt_sig(*f, 6)
                    );
                }
            }
        }
        s
    }
}

fn quote(s: &str) -> String {
    if s.contains(',') {
        format!("\"{s}\"")
    } else {
        s.to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn summary_and_neumaier() {
        let s = Summary::of(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(s.mean, 2.5);
        assert!((s.sd - (5.0f64 / 3.0).sqrt()).abs() < 1e-15);
        assert_eq!(neumaier([1e16, 1.0, -1e16].into_iter()), 1.0);
    }

    #[test]
    fn spectral_norm_of_diagonal() {
        let m = DMatrix::from_row_slice(2, 3, &[3.0, 0.0, 0.0, 0.0, -4.0, 0.0]);
        assert!((spectral_norm(&m) - 4.0).abs() < 1e-12);
    }

    #[test]
    fn tspec_json() {
        let t: Vec<TSpec> = serde_json::from_str(r#"[200, {"times_p": 0.5}]"#).unwrap();
        assert_eq!(t[0].resolve(20, 20), 200);
        assert_eq!(t[1].resolve(20, 20), 200);
        assert_eq!(t[1].label(), "0.5p");
    }
}
