//! Out-of-sample model comparison: K-fold cross-validation with contiguous
//! folds, rolling (expanding-window) validation, and empirical rate studies.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baseline::{fit_vec_from_covs, signal_vec, VecFactorFit};
use crate::error::{Error, Result};
use crate::estimator::{fit_from_covs, reconstruct_signal, EstimatorOptions, FactorFit, LagCovSet, DEFAULT_EPS_ABS};
use crate::io::fmt_sig;
use crate::series::{MatrixSeries, Standardizer};
use crate::simulation::{run_study, GridConfig, Metric, SimConfig, Summary, TSpec};

/// A candidate model scored by the validators.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "lowercase")]
pub enum ModelSpec {
    Matrix { k1: usize, k2: usize },
    Vector { k: usize },
}

impl ModelSpec {
    pub fn label(&self) -> String {
        match self {
            ModelSpec::Matrix { k1, k2 } => format!("({k1},{k2})"),
            ModelSpec::Vector { k } => format!("({k})"),
        }
    }

    pub fn factor_count(&self) -> usize {
        match *self {
            ModelSpec::Matrix { k1, k2 } => k1 * k2,
            ModelSpec::Vector { k } => k,
        }
    }

    /// Loading parameters: `p1 k1 + p2 k2` or `p1 p2 k`.
    pub fn parameter_count(&self, p1: usize, p2: usize) -> usize {
        match *self {
            ModelSpec::Matrix { k1, k2 } => p1 * k1 + p2 * k2,
            ModelSpec::Vector { k } => p1 * p2 * k,
        }
    }

    /// Every matrix spec `(k1, k2)` in `1..=k1max x 1..=k2max`.
    pub fn matrix_grid(k1max: usize, k2max: usize) -> Vec<Self> {
        (1..=k1max).flat_map(|k1| (1..=k2max).map(move |k2| ModelSpec::Matrix { k1, k2 })).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationRow {
    pub spec: ModelSpec,
    pub rss: f64,
    pub sst: f64,
    pub ratio: f64,
    pub factors: usize,
    pub parameters: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    /// `"kfold"` or `"rolling"`.
    pub protocol: String,
    pub p1: usize,
    pub p2: usize,
    pub h0: usize,
    pub rows: Vec<ValidationRow>,
}

impl ValidationReport {
    pub fn row(&self, spec: ModelSpec) -> Option<&ValidationRow> {
        self.rows.iter().find(|r| r.spec == spec)
    }

    pub fn ratio(&self, spec: ModelSpec) -> Option<f64> {
        self.row(spec).map(|r| r.ratio)
    }

    /// `model,factor,RSS,SST,RSS/SST,factors,parameters`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("model,factor,RSS,SST,RSS/SST,factors,parameters\n");
        for r in &self.rows {
            let model = match r.spec {
                ModelSpec::Matrix { .. } => "matrix",
                ModelSpec::Vector { .. } => "vector",
            };
            let _ = writeln!(
                s,
                "{model},\"{}\",{},{},{},{},{}",
                r.spec.label(),
                fmt_sig(r.rss, 6),
                fmt_sig(r.sst, 6),
                fmt_sig(r.ratio, 6),
                r.factors,
                r.parameters
            );
        }
        s
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Residual and total sums of squares of `heldout` under a matrix fit. The
/// fit's standardizer, if any, is applied to `heldout` first.
pub fn rss_sst(fit: &FactorFit<f64>, heldout: &MatrixSeries<f64>) -> Result<(f64, f64)> {
    let data = fit.prepare(heldout)?;
    let shat = reconstruct_signal(&FactorFit { standardizer: None, ..fit.clone() }, &data)?;
    let rss = data.iter().zip(shat.iter()).map(|(x, s)| (x - s).norm_squared()).sum();
    Ok((rss, data.sum_of_squares()))
}

pub fn rss_sst_vec(fit: &VecFactorFit<f64>, heldout: &MatrixSeries<f64>) -> Result<(f64, f64)> {
    let shat = signal_vec(fit, heldout)?;
    let rss = heldout.iter().zip(shat.iter()).map(|(x, s)| (x - s).norm_squared()).sum();
    Ok((rss, heldout.sum_of_squares()))
}

/// Options shared by the validators.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ValidationOptions {
    pub h0: usize,
    /// Standardize with training-set means and scales.
    pub standardize: bool,
}

impl Default for ValidationOptions {
    fn default() -> Self {
        Self { h0: 1, standardize: false }
    }
}

/// Per-spec `(rss, sst)` for one train/test split. Loadings are estimated once
/// at the largest requested ranks and truncated for smaller specs.
fn score_split(
    train: &[&MatrixSeries<f64>],
    test: &MatrixSeries<f64>,
    specs: &[ModelSpec],
    opts: ValidationOptions,
) -> Result<Vec<(f64, f64)>> {
    let (standardizer, owned);
    let (train, test): (Vec<&MatrixSeries<f64>>, MatrixSeries<f64>) = if opts.standardize {
        let mut all = Vec::new();
        for s in train {
            all.extend(s.iter().cloned());
        }
        standardizer = Standardizer::fit(&MatrixSeries::new(all)?, true)?;
        owned = train.iter().map(|s| standardizer.apply(s)).collect::<Result<Vec<_>>>()?;
        (owned.iter().collect(), standardizer.apply(test)?)
    } else {
        (train.to_vec(), test.clone())
    };
    let covs = LagCovSet::compute_segments(&train, opts.h0)?;
    let k1 = specs.iter().filter_map(|s| if let ModelSpec::Matrix { k1, .. } = s { Some(*k1) } else { None }).max();
    let k2 = specs.iter().filter_map(|s| if let ModelSpec::Matrix { k2, .. } = s { Some(*k2) } else { None }).max();
    let kv = specs.iter().filter_map(|s| if let ModelSpec::Vector { k } = s { Some(*k) } else { None }).max();
    let mat = match (k1, k2) {
        (Some(a), Some(b)) => Some(fit_from_covs(&covs, EstimatorOptions::fixed(opts.h0, a, b))?),
        _ => None,
    };
    let vec = match kv {
        Some(k) => Some(fit_vec_from_covs(&covs, Some(k), DEFAULT_EPS_ABS)?),
        None => None,
    };
    specs
        .iter()
        .map(|spec| match *spec {
            ModelSpec::Matrix { k1, k2 } => rss_sst(&mat.as_ref().expect("matrix spec").truncated(k1, k2)?, &test),
            ModelSpec::Vector { k } => rss_sst_vec(&vec.as_ref().expect("vector spec").truncated(k)?, &test),
        })
        .collect()
}

fn assemble(protocol: &str, series: &MatrixSeries<f64>, specs: &[ModelSpec], h0: usize, parts: Vec<Vec<(f64, f64)>>) -> ValidationReport {
    let (p1, p2) = (series.p1(), series.p2());
    let rows = specs
        .iter()
        .enumerate()
        .map(|(i, spec)| {
            let rss: f64 = parts.iter().map(|p| p[i].0).sum();
            let sst: f64 = parts.iter().map(|p| p[i].1).sum();
            ValidationRow {
                spec: *spec,
                rss,
                sst,
                ratio: rss / sst,
                factors: spec.factor_count(),
                parameters: spec.parameter_count(p1, p2),
            }
        })
        .collect();
    ValidationReport { protocol: protocol.into(), p1, p2, h0, rows }
}

/// Contiguous fold boundaries: fold `k` covers `[T k / K, T (k+1) / K)`.
pub fn fold_bounds(len: usize, folds: usize) -> Vec<(usize, usize)> {
    (0..folds).map(|k| (len * k / folds, len * (k + 1) / folds)).collect()
}

/// K-fold cross-validation over contiguous time blocks. For each fold the
/// loadings are estimated on the remaining one or two segments, with lagged
/// pairs that would straddle the held-out block excluded.
pub fn kfold_cv(series: &MatrixSeries<f64>, folds: usize, specs: &[ModelSpec], opts: ValidationOptions) -> Result<ValidationReport> {
    if folds < 2 {
        return Err(Error::InvalidConfig("folds must be >= 2".into()));
    }
    if series.len() < 2 * folds {
        return Err(Error::TooFewObservations { required: 2 * folds, actual: series.len() });
    }
    if specs.is_empty() {
        return Err(Error::InvalidConfig("no model specs".into()));
    }
    let bounds = fold_bounds(series.len(), folds);
    let parts = bounds
        .par_iter()
        .map(|&(a, b)| {
            let test = series.slice(a, b)?;
            let mut train = Vec::new();
            if a > 0 {
                train.push(series.slice(0, a)?);
            }
            if b < series.len() {
                train.push(series.slice(b, series.len())?);
            }
            let refs: Vec<&MatrixSeries<f64>> = train.iter().collect();
            score_split(&refs, &test, specs, opts)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(assemble("kfold", series, specs, opts.h0, parts))
}

/// One rolling-validation step: fit on `[0, train_end)`, score `[test_start, test_end)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Window {
    pub train_end: usize,
    pub test_start: usize,
    pub test_end: usize,
}

/// Windows that test consecutive blocks of `period` observations, the first
/// starting at `first_train_end`; a trailing partial block is dropped.
pub fn annual_schedule(len: usize, first_train_end: usize, period: usize) -> Vec<Window> {
    let mut out = Vec::new();
    let mut e = first_train_end;
    while period > 0 && e + period <= len {
        out.push(Window { train_end: e, test_start: e, test_end: e + period });
        e += period;
    }
    out
}

/// `max(24, 2 max(p1, p2))`.
pub fn min_train_window(p1: usize, p2: usize) -> usize {
    24.max(2 * p1.max(p2))
}

/// Expanding-window validation. `min_train` defaults to [`min_train_window`].
pub fn rolling_validation(
    series: &MatrixSeries<f64>,
    schedule: &[Window],
    specs: &[ModelSpec],
    opts: ValidationOptions,
    min_train: Option<usize>,
) -> Result<ValidationReport> {
    let min_train = min_train.unwrap_or_else(|| min_train_window(series.p1(), series.p2()));
    if schedule.is_empty() {
        return Err(Error::ScheduleInvalid("empty schedule".into()));
    }
    if specs.is_empty() {
        return Err(Error::InvalidConfig("no model specs".into()));
    }
    let mut last_end = 0;
    for (i, w) in schedule.iter().enumerate() {
        if w.train_end < min_train {
            return Err(Error::ScheduleInvalid(format!("window {}: training window {} below minimum {min_train}", i + 1, w.train_end)));
        }
        if w.test_start >= w.test_end {
            return Err(Error::ScheduleInvalid(format!("window {}: empty test range", i + 1)));
        }
        if w.test_start < w.train_end || w.test_end > series.len() {
            return Err(Error::ScheduleInvalid(format!(
                "window {}: test range {}..{} must follow training end {} and lie within {} periods",
                i + 1, w.test_start, w.test_end, w.train_end, series.len()
            )));
        }
        if w.test_start < last_end {
            return Err(Error::ScheduleInvalid(format!("window {}: test ranges overlap", i + 1)));
        }
        last_end = w.test_end;
    }
    let parts = schedule
        .par_iter()
        .map(|w| {
            let train = series.slice(0, w.train_end)?;
            let test = series.slice(w.test_start, w.test_end)?;
            score_split(&[&train], &test, specs, opts)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(assemble("rolling", series, specs, opts.h0, parts))
}

/// Swept quantity of a rate study.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RateAxis {
    T,
    P1,
    P2,
    /// `p1 = p2 = p`.
    P,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatePoint {
    pub value: usize,
    pub d_q1: Summary,
    pub d_q2: Summary,
    pub d_s: Summary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateReport {
    pub axis: RateAxis,
    pub points: Vec<RatePoint>,
    /// Least-squares slopes of `log(mean D)` on `log(value)`.
    pub slope_q1: f64,
    pub slope_q2: f64,
    pub slope_s: f64,
}

/// Least-squares slope of `log y` on `log x`.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

/// Mean loading and signal errors along one swept axis, holding the rest of
/// `base` fixed, with fitted log-log slopes.
pub fn rate_study(base: &SimConfig, axis: RateAxis, values: &[usize], replicates: usize, threads: Option<usize>) -> Result<RateReport> {
    if values.len() < 3 {
        return Err(Error::InvalidConfig("a rate study needs at least 3 grid points".into()));
    }
    let dims: Vec<[usize; 2]> = match axis {
        RateAxis::T => vec![[base.p1, base.p2]],
        RateAxis::P1 => values.iter().map(|&p| [p, base.p2]).collect(),
        RateAxis::P2 => values.iter().map(|&p| [base.p1, p]).collect(),
        RateAxis::P => values.iter().map(|&p| [p, p]).collect(),
    };
    let t = match axis {
        RateAxis::T => values.iter().map(|&t| TSpec::Abs(t)).collect(),
        _ => vec![TSpec::Abs(base.t)],
    };
    let mut grid = GridConfig::new(dims, vec![[base.delta1, base.delta2]], t, vec![Metric::DQ1, Metric::DQ2, Metric::DSMat], replicates, base.seed);
    grid.factors = vec![base.factor_spec.clone()];
    grid.noise_spec = base.noise_spec;
    grid.k1 = base.k1;
    grid.k2 = base.k2;
    grid.burn_in = base.burn_in;
    let report = run_study(&grid, threads)?;
    let points: Vec<RatePoint> = report
        .cells
        .iter()
        .zip(values)
        .map(|(c, &value)| RatePoint {
            value,
            d_q1: c.metric(Metric::DQ1).expect("requested"),
            d_q2: c.metric(Metric::DQ2).expect("requested"),
            d_s: c.metric(Metric::DSMat).expect("requested"),
        })
        .collect();
    let x: Vec<f64> = values.iter().map(|&v| v as f64).collect();
    let slope = |f: fn(&RatePoint) -> f64| loglog_slope(&x, &points.iter().map(f).collect::<Vec<_>>());
    Ok(RateReport {
        axis,
        slope_q1: slope(|p| p.d_q1.mean),
        slope_q2: slope(|p| p.d_q2.mean),
        slope_s: slope(|p| p.d_s.mean),
        points,
    })
}
