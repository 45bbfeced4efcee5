//! `matfactor` command-line interface.
//!
//! Every failure exits nonzero with one JSON line on stderr:
//! `{"error": "<Kind>", "message": "..."}`.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use nalgebra::DMatrix;
use serde_json::json;

use matfactor::estimator::{extract_factors, fit, orthonormalize, subspace_distance, varimax, EstimatorOptions, RankMode};
use matfactor::io::{self, FitExport, TruthExport};
use matfactor::simulation::{run_study, simulate, FactorSpec, GridConfig, ModelChoice, SimConfig};
use matfactor::validation::{annual_schedule, kfold_cv, rolling_validation, ModelSpec, ValidationOptions};
use matfactor::{fit_vec, MatrixSeries64};

#[derive(Parser)]
#[command(name = "matfactor", version, about = "Matrix-variate factor models for matrix-valued time series")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate X_t = R F_t C' + E_t and write data.csv and truth.json.
    Simulate(SimulateArgs),
    /// Estimate loadings, factors and scree data.
    Fit(FitArgs),
    /// Print the eigenvalue-ratio rank estimates.
    Ranks(RanksArgs),
    /// Out-of-sample RSS/SST by K-fold or rolling validation.
    Validate(ValidateArgs),
    /// Run a Monte-Carlo study grid.
    Study(StudyArgs),
    /// Compare a saved fit with simulation truth and/or data.
    Report(ReportArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Model {
    Matrix,
    Vector,
    Both,
}

impl From<Model> for ModelChoice {
    fn from(m: Model) -> Self {
        match m {
            Model::Matrix => ModelChoice::Matrix,
            Model::Vector => ModelChoice::Vector,
            Model::Both => ModelChoice::Both,
        }
    }
}

#[derive(Args)]
struct SimulateArgs {
    /// SimConfig JSON; flags below override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value = "out")]
    output_dir: PathBuf,
    #[arg(long)]
    p1: Option<usize>,
    #[arg(long)]
    p2: Option<usize>,
    #[arg(long)]
    k1: Option<usize>,
    #[arg(long)]
    k2: Option<usize>,
    #[arg(short = 'T', long = "T")]
    t: Option<usize>,
    #[arg(long)]
    delta1: Option<f64>,
    #[arg(long)]
    delta2: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Common AR(1) coefficient for every factor entry (required when k1, k2
    /// differ from the default 3, 2 design).
    #[arg(long)]
    phi: Option<f64>,
    /// Drop the noise term.
    #[arg(long)]
    noise_free: bool,
}

#[derive(Args)]
struct FitArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value = "out")]
    output_dir: PathBuf,
    #[arg(long, default_value_t = 1)]
    h0: usize,
    /// Row factor count; omit both k1 and k2 for ratio-based selection.
    #[arg(long)]
    k1: Option<usize>,
    #[arg(long)]
    k2: Option<usize>,
    /// Factor count for the vectorized model (defaults to k1*k2, or auto).
    #[arg(long)]
    k: Option<usize>,
    #[arg(long, value_enum, default_value = "matrix")]
    model: Model,
    /// Standardize every cell series before estimation.
    #[arg(long)]
    standardize: bool,
    /// Also write varimax-rotated loadings.
    #[arg(long)]
    varimax: bool,
    /// Multiplier applied to rotated loadings for display.
    #[arg(long, default_value_t = 1.0)]
    display_scale: f64,
}

#[derive(Args)]
struct RanksArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value_t = 1)]
    h0: usize,
    #[arg(long)]
    standardize: bool,
    #[arg(long, value_enum, default_value = "matrix")]
    model: Model,
}

#[derive(Args)]
struct ValidateArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value = "out")]
    output_dir: PathBuf,
    #[arg(long, default_value_t = 1)]
    h0: usize,
    #[arg(long, default_value_t = 10)]
    folds: usize,
    /// Largest row rank in the matrix grid.
    #[arg(long, default_value_t = 4)]
    k1: usize,
    /// Largest column rank in the matrix grid.
    #[arg(long, default_value_t = 3)]
    k2: usize,
    #[arg(long, value_enum, default_value = "both")]
    model: Model,
    #[arg(long)]
    standardize: bool,
    /// Rolling validation instead of K-fold: first training window length.
    #[arg(long)]
    rolling: Option<usize>,
    /// Test-block length for rolling validation.
    #[arg(long, default_value_t = 12)]
    period: usize,
}

#[derive(Args)]
struct StudyArgs {
    /// GridConfig JSON.
    #[arg(long)]
    config: PathBuf,
    #[arg(long, default_value = "out")]
    output_dir: PathBuf,
    #[arg(long)]
    replicates: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Multiply distances by 10 in the table CSV.
    #[arg(long)]
    paper_scale: bool,
    /// Restrict the vector-model metrics (`matrix`) or matrix metrics (`vector`).
    #[arg(long, value_enum, default_value = "both")]
    model: Model,
}

#[derive(Args)]
struct ReportArgs {
    /// Fit JSON written by `fit`.
    #[arg(long)]
    fit: PathBuf,
    /// Truth JSON written by `simulate`.
    #[arg(long)]
    truth: Option<PathBuf>,
    /// Data to score the fit on (RSS/SST).
    #[arg(long)]
    input: Option<PathBuf>,
}

struct Failure {
    kind: String,
    message: String,
}

impl From<matfactor::Error> for Failure {
    fn from(e: matfactor::Error) -> Self {
        Self { kind: e.kind().into(), message: e.to_string() }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        matfactor::Error::from(e).into()
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        matfactor::Error::from(e).into()
    }
}

fn usage(message: impl Into<String>) -> Failure {
    Failure { kind: "UsageError".into(), message: message.into() }
}

type Outcome = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let msg = e.to_string();
            let first = msg.lines().next().unwrap_or_default().trim_start_matches("error: ");
            eprintln!("{}", json!({"error": "UsageError", "message": first}));
            return ExitCode::from(2);
        }
    };
    if let Ok(n) = std::env::var("MATFACTOR_THREADS") {
        match n.parse::<usize>() {
            Ok(n) if n > 0 => {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
            _ => {
                eprintln!("{}", json!({"error": "UsageError", "message": format!("MATFACTOR_THREADS must be a positive integer, got {n:?}")}));
                return ExitCode::from(2);
            }
        }
    }
    let result = match cli.command {
        Command::Simulate(a) => cmd_simulate(a),
        Command::Fit(a) => cmd_fit(a),
        Command::Ranks(a) => cmd_ranks(a),
        Command::Validate(a) => cmd_validate(a),
        Command::Study(a) => cmd_study(a),
        Command::Report(a) => cmd_report(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("{}", json!({"error": f.kind, "message": f.message}));
            ExitCode::FAILURE
        }
    }
}

fn write(dir: &Path, name: &str, text: &str) -> Outcome {
    io::write_atomic(dir.join(name), text.as_bytes())?;
    Ok(())
}

fn load(path: &Path) -> Result<MatrixSeries64, Failure> {
    if !path.exists() {
        return Err(usage(format!("input file {} does not exist", path.display())));
    }
    Ok(io::ingest_csv(path)?)
}

fn cmd_simulate(a: SimulateArgs) -> Outcome {
    let mut cfg = match &a.config {
        Some(p) => serde_json::from_slice::<SimConfig>(&fs::read(p)?)?,
        None => SimConfig::standard(20, 20, 200, 0.0, 0.0, 1),
    };
    let over = |dst: &mut usize, v: Option<usize>| {
        if let Some(v) = v {
            *dst = v;
        }
    };
    over(&mut cfg.p1, a.p1);
    over(&mut cfg.p2, a.p2);
    over(&mut cfg.k1, a.k1);
    over(&mut cfg.k2, a.k2);
    over(&mut cfg.t, a.t);
    if let Some(d) = a.delta1 {
        cfg.delta1 = d;
    }
    if let Some(d) = a.delta2 {
        cfg.delta2 = d;
    }
    if let Some(s) = a.seed {
        cfg.seed = s;
    }
    if a.noise_free {
        cfg.noise_spec = matfactor::simulation::NoiseSpec::None;
    }
    if let Some(phi) = a.phi {
        cfg.factor_spec = FactorSpec::Ar1Common { phi };
    }
    let (x, truth) = simulate(&cfg)?;
    fs::create_dir_all(&a.output_dir)?;
    io::write_long_csv(&x, a.output_dir.join("data.csv"))?;
    write(&a.output_dir, "truth.json", &serde_json::to_string_pretty(&TruthExport::from_truth(&truth))?)?;
    write(&a.output_dir, "config.json", &serde_json::to_string_pretty(&cfg)?)?;
    println!("{}", json!({"T": cfg.t, "p1": cfg.p1, "p2": cfg.p2, "k1": cfg.k1, "k2": cfg.k2, "output_dir": a.output_dir}));
    Ok(())
}

fn rank_mode(k1: Option<usize>, k2: Option<usize>) -> Result<RankMode, Failure> {
    match (k1, k2) {
        (Some(a), Some(b)) => Ok(RankMode::Fixed(a, b)),
        (None, None) => Ok(RankMode::Auto),
        _ => Err(usage("give both --k1 and --k2, or neither for automatic selection")),
    }
}

fn cmd_fit(a: FitArgs) -> Outcome {
    let x = load(&a.input)?;
    fs::create_dir_all(&a.output_dir)?;
    let mut summary = serde_json::Map::new();
    if matches!(a.model, Model::Matrix | Model::Both) {
        let opts = EstimatorOptions { h0: a.h0, rank: rank_mode(a.k1, a.k2)?, standardize: a.standardize, ..Default::default() };
        let f = fit(&x, opts)?;
        let export = FitExport::from_fit(&f);
        write(&a.output_dir, "fit.json", &export.to_json()?)?;
        write(&a.output_dir, "loadings_row.csv", &io::loadings_csv(&f.q1.q, 1.0))?;
        write(&a.output_dir, "loadings_col.csv", &io::loadings_csv(&f.q2.q, 1.0))?;
        if a.varimax {
            write(&a.output_dir, "loadings_row_varimax.csv", &io::loadings_csv(&varimax(&f.q1.q).rotated, a.display_scale))?;
            write(&a.output_dir, "loadings_col_varimax.csv", &io::loadings_csv(&varimax(&f.q2.q).rotated, a.display_scale))?;
        }
        let z = extract_factors(&f, &x)?;
        write(&a.output_dir, "factors.csv", &io::long_csv_string(&z))?;
        write(&a.output_dir, "scree_row.csv", &io::scree_csv(&f.q1.full_spectrum))?;
        write(&a.output_dir, "scree_col.csv", &io::scree_csv(&f.q2.full_spectrum))?;
        let (k1, k2) = f.ranks();
        summary.insert("matrix".into(), json!({"k1": k1, "k2": k2, "h0": a.h0, "parameters": f.parameter_count()}));
    }
    if matches!(a.model, Model::Vector | Model::Both) {
        let k = a.k.or_else(|| a.k1.zip(a.k2).map(|(p, q)| p * q));
        let data = if a.standardize { matfactor::standardize(&x)? } else { x.clone() };
        let f = fit_vec(&data, a.h0, k)?;
        write(&a.output_dir, "fit_vec.json", &FitExport::from_vec_fit(&f).to_json()?)?;
        write(&a.output_dir, "scree_vec.csv", &io::scree_csv(&f.spectrum))?;
        summary.insert("vector".into(), json!({"k": f.k(), "h0": a.h0, "parameters": f.parameter_count()}));
    }
    println!("{}", serde_json::Value::Object(summary));
    Ok(())
}

fn cmd_ranks(a: RanksArgs) -> Outcome {
    let x = load(&a.input)?;
    let mut out = serde_json::Map::new();
    if matches!(a.model, Model::Matrix | Model::Both) {
        let f = fit(&x, EstimatorOptions { h0: a.h0, standardize: a.standardize, ..Default::default() })?;
        let (k1, k2) = f.ranks();
        out.insert("k1".into(), json!(k1));
        out.insert("k2".into(), json!(k2));
    }
    if matches!(a.model, Model::Vector | Model::Both) {
        let data = if a.standardize { matfactor::standardize(&x)? } else { x.clone() };
        out.insert("k".into(), json!(fit_vec(&data, a.h0, None)?.k()));
    }
    println!("{}", serde_json::Value::Object(out));
    Ok(())
}

fn cmd_validate(a: ValidateArgs) -> Outcome {
    let x = load(&a.input)?;
    let mut specs = Vec::new();
    if matches!(a.model, Model::Matrix | Model::Both) {
        specs.push(ModelSpec::Matrix { k1: 0, k2: 0 });
        specs.extend(ModelSpec::matrix_grid(a.k1, a.k2));
    }
    if matches!(a.model, Model::Vector | Model::Both) {
        let mut ks: Vec<usize> = (1..=a.k1).flat_map(|i| (1..=a.k2).map(move |j| i * j)).collect();
        ks.sort_unstable();
        ks.dedup();
        specs.extend(ks.into_iter().map(|k| ModelSpec::Vector { k }));
    }
    let opts = ValidationOptions { h0: a.h0, standardize: a.standardize };
    let report = match a.rolling {
        Some(first) => rolling_validation(&x, &annual_schedule(x.len(), first, a.period), &specs, opts, None)?,
        None => kfold_cv(&x, a.folds, &specs, opts)?,
    };
    fs::create_dir_all(&a.output_dir)?;
    write(&a.output_dir, "validation.csv", &report.to_csv())?;
    write(&a.output_dir, "validation.json", &report.to_json()?)?;
    print!("{}", report.to_csv());
    Ok(())
}

fn cmd_study(a: StudyArgs) -> Outcome {
    let mut grid: GridConfig = serde_json::from_slice(&fs::read(&a.config)?)?;
    if let Some(r) = a.replicates {
        grid.replicates = r;
    }
    if let Some(s) = a.seed {
        grid.seed = s;
    }
    use matfactor::simulation::Metric::*;
    match ModelChoice::from(a.model) {
        ModelChoice::Matrix => grid.metrics.retain(|m| !matches!(m, DQVec | DSVec | RankVec)),
        ModelChoice::Vector => grid.metrics.retain(|m| matches!(m, DQVec | DSVec | RankVec)),
        ModelChoice::Both => {}
    }
    let report = run_study(&grid, None)?;
    fs::create_dir_all(&a.output_dir)?;
    write(&a.output_dir, "study_long.csv", &report.to_long_csv())?;
    write(&a.output_dir, "study_table.csv", &report.to_table_csv(a.paper_scale))?;
    write(&a.output_dir, "study_ranks.csv", &report.to_rank_csv())?;
    write(&a.output_dir, "study.json", &serde_json::to_string_pretty(&report)?)?;
    print!("{}", report.to_table_csv(a.paper_scale));
    Ok(())
}

fn cmd_report(a: ReportArgs) -> Outcome {
    let export = FitExport::read(&a.fit)?;
    let (q1, q2) = export.loadings()?;
    let mut out = serde_json::Map::new();
    out.insert("model".into(), json!(export.model));
    out.insert("k1".into(), json!(export.k1));
    out.insert("k2".into(), json!(export.k2));
    if let Some(t) = &a.truth {
        let truth = TruthExport::read(t)?;
        let (r, c) = truth.loadings()?;
        let (o1, o2) = (orthonormalize(&r), orthonormalize(&c));
        if export.model == "vector" {
            let kron = o2.kronecker(&o1);
            out.insert("d_q".into(), json!(subspace_distance(&q1, &kron)?));
        } else {
            out.insert("d_q1".into(), json!(subspace_distance(&q1, &o1)?));
            out.insert("d_q2".into(), json!(subspace_distance(&q2, &o2)?));
            out.insert("d_q".into(), json!(subspace_distance(&q2.kronecker(&q1), &o2.kronecker(&o1))?));
        }
    }
    if let Some(p) = &a.input {
        let x = load(p)?;
        let (mut rss, mut sst) = (0.0, 0.0);
        for xt in x.iter() {
            let s = if export.model == "vector" {
                let v = DMatrix::from_column_slice(xt.len(), 1, xt.as_slice());
                let proj = &q1 * (q1.transpose() * v);
                xt - DMatrix::from_column_slice(x.p1(), x.p2(), proj.as_slice())
            } else {
                xt - &q1 * (q1.transpose() * xt * &q2) * q2.transpose()
            };
            rss += s.norm_squared();
            sst += xt.norm_squared();
        }
        out.insert("rss".into(), json!(rss));
        out.insert("sst".into(), json!(sst));
        out.insert("rss_sst".into(), json!(rss / sst));
    }
    println!("{}", serde_json::Value::Object(out));
    Ok(())
}
