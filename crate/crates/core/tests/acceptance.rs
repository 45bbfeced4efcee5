//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Monte-Carlo tolerances are `max(4 * sd / sqrt(n), 0.15 * mean)` with `sd`
//! the published standard deviation and `n` the replicate count actually run.
//! Replicate counts default to 200 for `p1 p2 <= 400`, 60 for `p1 p2 <= 1000`
//! and 20 above; `MATFACTOR_ACCEPT_REPLICATES` overrides all of them.
//! `MATFACTOR_ACCEPT_ONLY=3,7` runs a subset. Failing criteria are reported
//! but only fail the process when `MATFACTOR_ACCEPT_STRICT` is set.
//!
//! Published values below are in the tables' display units (true value x 10).

use std::time::Instant;

use matfactor::estimator::{fit, reconstruct_signal, subspace_distance, EstimatorOptions, LagCovSet, Side};
use matfactor::simulation::{run_study, simulate, FactorSpec, GridConfig, Metric, NoiseSpec, SimConfig, StudyReport, TSpec};
use matfactor::validation::{kfold_cv, rate_study, rss_sst, ModelSpec, RateAxis, ValidationOptions};
use matfactor::{fit_vec, lagged_block_cov, MatrixSeries64};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SEED: u64 = 20_171_102;
const DELTAS: [[f64; 2]; 3] = [[0.5, 0.5], [0.5, 0.0], [0.0, 0.0]];
const DIMS: [[usize; 2]; 3] = [[20, 20], [20, 50], [50, 50]];
const TIMES: [f64; 3] = [0.5, 1.0, 2.0];

/// Loading-space distances, indexed `[delta][dims][T]` as
/// `(D1 mean, D1 sd, D2 mean, D2 sd)`.
const TABLE_Q: [[[(f64, f64, f64, f64); 3]; 3]; 3] = [
    [
        [(5.96, 0.19, 7.12, 0.03), (5.80, 0.07, 7.09, 0.01), (5.73, 0.04, 7.08, 0.01)],
        [(5.87, 0.15, 7.07, 0.02), (5.77, 0.04, 7.05, 0.01), (5.74, 0.02, 7.04, 0.01)],
        [(6.26, 0.56, 7.05, 0.01), (5.73, 0.13, 7.04, 0.00), (5.61, 0.03, 7.03, 0.00)],
    ],
    [
        [(5.36, 0.41, 5.42, 2.22), (4.27, 1.13, 1.66, 1.70), (1.52, 0.75, 0.54, 0.17)],
        [(5.02, 0.67, 5.15, 1.61), (1.82, 0.77, 1.32, 0.60), (0.54, 0.18, 0.53, 0.17)],
        [(3.68, 0.48, 3.44, 1.23), (1.31, 0.20, 0.65, 0.19), (0.51, 0.07, 0.28, 0.08)],
    ],
    [
        [(0.55, 0.16, 0.44, 0.10), (0.36, 0.08, 0.31, 0.06), (0.24, 0.04, 0.22, 0.04)],
        [(0.25, 0.06, 0.36, 0.07), (0.16, 0.03, 0.26, 0.05), (0.10, 0.02, 0.18, 0.03)],
        [(0.13, 0.02, 0.12, 0.02), (0.09, 0.01, 0.08, 0.01), (0.06, 0.01, 0.06, 0.01)],
    ],
];

/// Kronecker loading distances, `(vec mean, vec sd, mat mean, mat sd)`.
const TABLE_KRON: [[[(f64, f64, f64, f64); 3]; 3]; 3] = [
    [
        [(8.75, 0.17, 8.26, 0.07), (8.24, 0.18, 8.19, 0.03), (7.62, 0.17, 8.16, 0.02)],
        [(8.72, 0.10, 8.20, 0.06), (8.40, 0.09, 8.15, 0.01), (7.92, 0.16, 8.13, 0.01)],
        [(8.51, 0.14, 8.34, 0.22), (7.62, 0.14, 8.13, 0.05), (6.81, 0.06, 8.09, 0.01)],
    ],
    [
        [(6.40, 0.29, 7.19, 1.13), (5.50, 0.31, 4.66, 1.45), (4.37, 0.45, 1.64, 0.72)],
        [(5.64, 0.24, 6.75, 1.13), (4.75, 0.35, 2.30, 0.80), (3.37, 0.45, 0.78, 0.20)],
        [(5.07, 0.10, 4.92, 0.94), (4.46, 0.29, 1.47, 0.23), (2.73, 0.46, 0.59, 0.08)],
    ],
    [
        [(3.64, 0.23, 0.71, 0.16), (2.77, 0.16, 0.48, 0.08), (2.07, 0.13, 0.33, 0.04)],
        [(2.84, 0.18, 0.44, 0.07), (2.13, 0.10, 0.30, 0.05), (1.56, 0.07, 0.21, 0.03)],
        [(1.85, 0.10, 0.18, 0.02), (1.34, 0.06, 0.12, 0.01), (0.97, 0.04, 0.09, 0.01)],
    ],
];

const SIGNAL_P: [usize; 3] = [10, 20, 50];
const SIGNAL_T: [usize; 4] = [50, 200, 1000, 5000];
/// Signal errors `[p][T]` as `(vec mean, vec sd, mat mean, mat sd)`.
const TABLE_S: [[(f64, f64, f64, f64); 4]; 3] = [
    [(4.05, 0.28, 3.41, 0.39), (3.02, 0.19, 2.62, 0.15), (2.48, 0.05, 2.40, 0.04), (2.38, 0.02, 2.36, 0.01)],
    [(3.07, 0.27, 1.86, 0.61), (1.96, 0.16, 1.11, 0.05), (1.25, 0.05, 1.02, 0.01), (1.04, 0.01, 1.00, 0.00)],
    [(2.64, 0.26, 1.95, 0.79), (1.57, 0.16, 0.56, 0.09), (0.82, 0.06, 0.42, 0.01), (0.49, 0.02, 0.40, 0.00)],
];

fn replicates(p1: usize, p2: usize) -> usize {
    if let Some(n) = std::env::var("MATFACTOR_ACCEPT_REPLICATES").ok().and_then(|v| v.parse().ok()) {
        return n;
    }
    match p1 * p2 {
        0..=400 => 200,
        401..=1000 => 60,
        _ => 20,
    }
}

fn tolerance(mean: f64, sd: f64, n: usize) -> f64 {
    (4.0 * sd / (n as f64).sqrt()).max(0.15 * mean)
}

/// Pass/fail plus a one-line summary and any per-cell misses.
struct Verdict {
    pass: bool,
    summary: String,
    misses: Vec<String>,
}

#[derive(Default)]
struct Checks {
    total: usize,
    misses: Vec<String>,
}

impl Checks {
    fn close(&mut self, label: String, got: f64, ref_display: f64, sd_display: f64, n: usize) {
        self.total += 1;
        let (want, sd) = (ref_display / 10.0, sd_display / 10.0);
        let tol = tolerance(want, sd, n);
        if (got - want).abs() > tol {
            self.misses.push(format!("{label}: got {got:.4}, reference {want:.4}, tol {tol:.4}"));
        }
    }

    fn holds(&mut self, label: String, ok: bool) {
        self.total += 1;
        if !ok {
            self.misses.push(label);
        }
    }

    fn verdict(self, what: &str) -> Verdict {
        Verdict {
            pass: self.misses.is_empty(),
            summary: format!("{what}: {}/{} checks within tolerance", self.total - self.misses.len(), self.total),
            misses: self.misses,
        }
    }
}

/// The loading-space grid, one study per dimension pair so that each can use
/// its own replicate count.
struct ReferenceGrid {
    reports: Vec<StudyReport>,
}

impl ReferenceGrid {
    fn run() -> Self {
        let reports = DIMS
            .iter()
            .map(|&d| {
                let grid = GridConfig::new(
                    vec![d],
                    DELTAS.to_vec(),
                    TIMES.iter().map(|&x| TSpec::TimesP { times_p: x }).collect(),
                    vec![Metric::DQ1, Metric::DQ2, Metric::DQMat, Metric::DQVec, Metric::RankPair],
                    replicates(d[0], d[1]),
                    SEED,
                );
                run_study(&grid, None).expect("study")
            })
            .collect();
        Self { reports }
    }

    fn cell(&self, di: usize, pi: usize, ti: usize) -> &matfactor::simulation::CellReport {
        let [p1, p2] = DIMS[pi];
        let t = (TIMES[ti] * (p1 * p2) as f64) as usize;
        let d = DELTAS[di];
        self.reports[pi].cell(p1, p2, t, (d[0], d[1]), 1).expect("cell present")
    }

    fn n(&self, pi: usize) -> usize {
        self.reports[pi].grid.replicates
    }
}

fn label(di: usize, pi: usize, ti: usize) -> String {
    format!("delta={:?} p={:?} T={}p", DELTAS[di], DIMS[pi], TIMES[ti])
}

fn criterion_1(g: &ReferenceGrid) -> Verdict {
    let mut c = Checks::default();
    for di in 0..3 {
        for pi in 0..3 {
            for ti in 0..3 {
                let cell = g.cell(di, pi, ti);
                let (m1, s1, m2, s2) = TABLE_Q[di][pi][ti];
                let n = g.n(pi);
                c.close(format!("{} D1", label(di, pi, ti)), cell.metric(Metric::DQ1).unwrap().mean, m1, s1, n);
                c.close(format!("{} D2", label(di, pi, ti)), cell.metric(Metric::DQ2).unwrap().mean, m2, s2, n);
            }
        }
    }
    c.verdict("loading-space distances vs published grid")
}

fn criterion_2(g: &ReferenceGrid) -> Verdict {
    let mut c = Checks::default();
    for di in 0..3 {
        for pi in 0..3 {
            for ti in 0..3 {
                let cell = g.cell(di, pi, ti);
                let (vm, vs, mm, ms) = TABLE_KRON[di][pi][ti];
                let n = g.n(pi);
                let dv = cell.metric(Metric::DQVec).unwrap().mean;
                let dm = cell.metric(Metric::DQMat).unwrap().mean;
                c.close(format!("{} D_vec", label(di, pi, ti)), dv, vm, vs, n);
                c.close(format!("{} D_mat", label(di, pi, ti)), dm, mm, ms, n);
                if di > 0 && TIMES[ti] >= 1.0 {
                    c.holds(format!("{} D_mat {dm:.4} < D_vec {dv:.4}", label(di, pi, ti)), dm < dv);
                }
            }
        }
    }
    c.verdict("matrix vs vectorized Kronecker loading distances")
}

fn criterion_3(g: &ReferenceGrid) -> Verdict {
    let mut c = Checks::default();
    let mut freqs = Vec::new();
    for pi in 0..3 {
        for ti in 0..3 {
            let f = g.cell(2, pi, ti).rank_pair_freq(3, 2);
            let total: f64 = g.cell(2, pi, ti).rank_pairs.values().sum();
            c.holds(format!("{} frequencies sum to {total}", label(2, pi, ti)), (total - 1.0).abs() < 1e-9);
            freqs.push(format!("{:.3}", f));
            if pi == 2 {
                c.holds(format!("{} freq(3,2) = {f:.3} < 0.95", label(2, pi, ti)), f >= 0.95);
            }
            if pi == 0 && ti == 2 {
                c.holds(format!("{} freq(3,2) = {f:.3} < 0.90", label(2, pi, ti)), f >= 0.90);
            }
        }
    }
    let mut v = c.verdict("rank-pair selection");
    v.summary = format!("{} (freq(3,2) by p, T: {})", v.summary, freqs.join(" "));
    v
}

fn criterion_4() -> Verdict {
    let mut c = Checks::default();
    let n = replicates(20, 20);
    let mut grid = GridConfig::new(vec![[20, 20]], vec![[0.0, 0.0]], vec![TSpec::TimesP { times_p: 1.0 }], vec![Metric::DQ1, Metric::DQ2], n, SEED);
    grid.h0 = vec![1, 2, 3, 4];
    grid.factors = vec![FactorSpec::Ma2 { theta: [0.0, 0.9] }, FactorSpec::Ar1Common { phi: 0.9 }];
    let r = run_study(&grid, None).expect("study");
    let d1 = |factor: usize, h0: usize| r.cells[factor * 4 + h0 - 1].metric(Metric::DQ1).unwrap().mean;
    let (ma1, ma2) = (d1(0, 1), d1(0, 2));
    c.holds(format!("MA(2): D1(h0=1) {ma1:.4} < 3 x D1(h0=2) {ma2:.4}"), ma1 >= 3.0 * ma2);
    let ar: Vec<f64> = (1..=4).map(|h| d1(1, h)).collect();
    let (lo, hi) = ar.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &v| (a.min(v), b.max(v)));
    c.holds(format!("AR(0.9): D1 over h0=1..4 spans {lo:.4}..{hi:.4}, more than 15%"), hi <= 1.15 * lo);
    c.close("MA(2) h0=1 D1".into(), ma1, 2.60, 1.11, n);
    c.close("MA(2) h0=2 D1".into(), ma2, 0.48, 0.12, n);
    for (h, (&v, want)) in ar.iter().zip([0.13, 0.13, 0.14, 0.14]).enumerate() {
        c.close(format!("AR(0.9) h0={} D1", h + 1), v, want, 0.02, n);
    }
    let mut v = c.verdict("lag sensitivity");
    v.summary = format!("{} (MA h0=1 {ma1:.4}, h0=2 {ma2:.4}; AR {:.4?})", v.summary, ar);
    v
}

fn signal_grid() -> Vec<StudyReport> {
    SIGNAL_P
        .iter()
        .map(|&p| {
            let grid = GridConfig::new(
                vec![[p, p]],
                vec![[0.0, 0.0]],
                SIGNAL_T.iter().map(|&t| TSpec::Abs(t)).collect(),
                vec![Metric::DQMat, Metric::DQVec, Metric::DSMat, Metric::DSVec],
                replicates(p, p),
                SEED + 5,
            );
            run_study(&grid, None).expect("study")
        })
        .collect()
}

fn criterion_5(s: &[StudyReport]) -> Verdict {
    let mut c = Checks::default();
    for (pi, r) in s.iter().enumerate() {
        let n = r.grid.replicates;
        for (ti, cell) in r.cells.iter().enumerate() {
            let (_, _, mm, ms) = TABLE_S[pi][ti];
            let lab = format!("p={} T={}", SIGNAL_P[pi], SIGNAL_T[ti]);
            let sm = cell.metric(Metric::DSMat).unwrap().mean;
            let sv = cell.metric(Metric::DSVec).unwrap().mean;
            c.close(format!("{lab} D_mat(S)"), sm, mm, ms, n);
            c.holds(format!("{lab} D_mat(S) {sm:.4} > D_vec(S) {sv:.4}"), sm <= sv);
        }
    }
    c.verdict("signal recovery")
}

fn criterion_6() -> Verdict {
    let mut c = Checks::default();
    let runs: usize = std::env::var("MATFACTOR_ACCEPT_REPLICATES").ok().and_then(|v| v.parse().ok()).unwrap_or(40);
    let specs = ModelSpec::matrix_grid(4, 3);
    let mut sums = vec![0.0; specs.len()];
    for run in 0..runs {
        let cfg = SimConfig::standard(20, 20, 1000, 0.0, 0.0, SEED.wrapping_add(1000 + run as u64));
        let (x, _) = simulate(&cfg).expect("simulate");
        let r = kfold_cv(&x, 10, &specs, ValidationOptions::default()).expect("cv");
        for (s, row) in sums.iter_mut().zip(&r.rows) {
            *s += row.ratio / runs as f64;
        }
    }
    let at = |k1: usize, k2: usize| sums[specs.iter().position(|s| *s == ModelSpec::Matrix { k1, k2 }).unwrap()];
    let elbow = at(3, 2);
    c.holds(format!("RSS/SST at (3,2) = {elbow:.4}, outside 0.47 +/- 0.05"), (elbow - 0.47).abs() <= 0.05);
    for (k1, k2) in [(3, 3), (4, 2), (4, 3)] {
        let v = at(k1, k2);
        c.holds(format!("RSS/SST at ({k1},{k2}) = {v:.4} differs from (3,2) by more than 0.04"), (v - elbow).abs() <= 0.04);
    }
    for (k1, k2) in [(1, 1), (2, 1), (2, 2), (3, 1)] {
        let v = at(k1, k2);
        c.holds(format!("RSS/SST at ({k1},{k2}) = {v:.4} not above the elbow"), v > elbow + 0.04);
    }
    let mut v = c.verdict("10-fold cross-validation surface");
    v.summary = format!("{} over {runs} runs; (3,2) = {elbow:.4}", v.summary);
    v
}

fn criterion_7() -> Verdict {
    let mut c = Checks::default();
    let sizes = [(5, 4, 50), (10, 10, 50), (20, 20, 200), (20, 50, 100), (50, 50, 50)];
    let mut worst = (0.0f64, 0.0f64, 0.0f64);
    for (i, &(p1, p2, t)) in sizes.iter().enumerate() {
        let mut cfg = SimConfig::standard(p1, p2, t, 0.0, 0.0, SEED + i as u64);
        cfg.noise_spec = NoiseSpec::None;
        let (x, truth) = simulate(&cfg).expect("simulate");
        let f = fit(&x, EstimatorOptions::fixed(1, 3, 2)).expect("fit");
        let d = subspace_distance(&f.q1.q, &truth.q1()).unwrap().max(subspace_distance(&f.q2.q, &truth.q2()).unwrap());
        let (rss, sst) = rss_sst(&f, &x).unwrap();
        let s = reconstruct_signal(&f, &x).unwrap();
        let err = s.iter().zip(x.iter()).map(|(a, b)| (a - b).amax()).fold(0.0, f64::max);
        let lab = format!("p=({p1},{p2}) T={t}");
        c.holds(format!("{lab}: D = {d:e}"), d <= 1e-8);
        c.holds(format!("{lab}: RSS/SST = {:e}", rss / sst), rss / sst <= 1e-10);
        c.holds(format!("{lab}: max |S_hat - X| = {err:e}"), err <= 1e-8);
        if p1 * p2 <= 400 {
            let vf = fit_vec(&x, 1, Some(6)).unwrap();
            let dv = subspace_distance(&vf.q, &truth.q2().kronecker(&truth.q1())).unwrap();
            c.holds(format!("{lab}: vectorized D = {dv:e}"), dv <= 1e-8);
        }
        worst = (worst.0.max(d), worst.1.max(rss / sst), worst.2.max(err));
    }
    let mut cfg = SimConfig::standard(20, 20, 200, 0.0, 0.0, SEED);
    cfg.noise_spec = NoiseSpec::None;
    let (x, _) = simulate(&cfg).unwrap();
    let cv = kfold_cv(&x, 10, &[ModelSpec::Matrix { k1: 3, k2: 2 }], ValidationOptions::default()).unwrap();
    c.holds(format!("noise-free 10-fold RSS/SST = {:e}", cv.rows[0].ratio), cv.rows[0].ratio <= 1e-10);
    let mut v = c.verdict("exact recovery without noise");
    v.summary = format!("{} (worst D {:.1e}, RSS/SST {:.1e}, |S-X| {:.1e})", v.summary, worst.0, worst.1, worst.2);
    v
}

/// Brute-force `sum_h sum_{i,j} W_ij(h) W_ij(h)'` straight from the definition.
fn brute_m1(x: &[DMatrix<f64>], h0: usize) -> DMatrix<f64> {
    let (p1, p2) = x[0].shape();
    let t = x.len();
    let mut m = DMatrix::zeros(p1, p1);
    for h in 1..=h0 {
        let n = (t - h) as f64;
        for i in 0..p2 {
            for j in 0..p2 {
                let mut w = DMatrix::zeros(p1, p1);
                for s in 0..t - h {
                    for a in 0..p1 {
                        for b in 0..p1 {
                            w[(a, b)] += x[s][(a, i)] * x[s + h][(b, j)];
                        }
                    }
                }
                w /= n;
                m += &w * w.transpose();
            }
        }
    }
    m
}

fn criterion_8() -> Verdict {
    let mut c = Checks::default();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut worst = 0.0f64;
    for inst in 0..50 {
        let (p1, p2) = loop {
            let a = rng.random_range(1..=6usize);
            let b = rng.random_range(1..=6usize);
            if a * b <= 6 {
                break (a, b);
            }
        };
        let t = rng.random_range(3..=20usize);
        let h0 = rng.random_range(1..=(t - 1).min(3));
        let mats: Vec<DMatrix<f64>> = (0..t).map(|_| DMatrix::from_fn(p1, p2, |_, _| rng.random_range(-2.0..2.0))).collect();
        let x = MatrixSeries64::new(mats.clone()).unwrap();
        let covs = LagCovSet::compute(&x, h0).unwrap();
        let m1 = covs.m(Side::Row).m;
        let xt: Vec<DMatrix<f64>> = mats.iter().map(|m| m.transpose()).collect();
        let m2 = covs.m(Side::Column).m;
        let e1 = (&m1 - brute_m1(&mats, h0)).amax();
        let e2 = (&m2 - brute_m1(&xt, h0)).amax();
        let mut e3 = 0.0f64;
        for h in 1..=h0 {
            let cov = lagged_block_cov(&x, h).unwrap();
            for i in 0..p2 {
                for j in 0..p2 {
                    let blk = cov.block(i, j);
                    for a in 0..p1 {
                        for b in 0..p1 {
                            let direct: f64 = (0..t - h).map(|s| mats[s][(a, i)] * mats[s + h][(b, j)]).sum::<f64>() / (t - h) as f64;
                            e3 = e3.max((blk[(a, b)] - direct).abs());
                        }
                    }
                }
            }
        }
        let e = e1.max(e2).max(e3);
        worst = worst.max(e);
        c.holds(format!("instance {inst} (p=({p1},{p2}), T={t}, h0={h0}): max error {e:e}"), e <= 1e-12);
    }
    let mut v = c.verdict("blocked M assembly vs triple-loop definition");
    v.summary = format!("{} (worst {worst:.1e})", v.summary);
    v
}

fn criterion_9(s: &[StudyReport]) -> Verdict {
    let mut c = Checks::default();
    let reps = replicates(20, 20).min(100);
    let base = SimConfig::standard(20, 20, 400, 0.0, 0.0, SEED + 9);
    let rt = rate_study(&base, RateAxis::T, &[400, 1600, 6400], reps, None).expect("rate study");
    c.holds(format!("slope of D1 vs T = {:.3}, outside [-0.65, -0.35]", rt.slope_q1), (-0.65..=-0.35).contains(&rt.slope_q1));

    // Weak-factor design with T large enough that D1 stays below its ceiling.
    let weak = SimConfig::standard(10, 20, 16_000, 0.5, 0.5, SEED + 10);
    let rp = rate_study(&weak, RateAxis::P1, &[10, 20, 40], replicates(20, 20).min(40), None).expect("rate study");
    c.holds(format!("slope of D1 vs p1 = {:.3}, outside [0.35, 0.65]", rp.slope_q1), (0.35..=0.65).contains(&rp.slope_q1));

    let ds: Vec<f64> = s.iter().map(|r| r.cells[2].metric(Metric::DSMat).unwrap().mean).collect();
    c.holds(format!("D(S) at T=1000 over p=10,20,50 not strictly decreasing: {ds:.4?}"), ds.windows(2).all(|w| w[1] < w[0]));
    let mut v = c.verdict("convergence rates");
    v.summary = format!(
        "{} (slope vs T {:.3}; slope vs p1 {:.3} with D1 {:.4?}; D(S) {:.4?})",
        v.summary,
        rt.slope_q1,
        rp.slope_q1,
        rp.points.iter().map(|p| p.d_q1.mean).collect::<Vec<_>>(),
        ds
    );
    v
}

fn criterion_10() -> Verdict {
    let mut c = Checks::default();
    let mut grid = GridConfig::new(
        vec![[8, 6], [10, 10]],
        vec![[0.0, 0.0], [0.5, 0.0]],
        vec![TSpec::Abs(60), TSpec::TimesP { times_p: 1.0 }],
        vec![Metric::DQ1, Metric::DQ2, Metric::DQMat, Metric::DQVec, Metric::DSMat, Metric::DSVec, Metric::RankPair, Metric::RankVec],
        6,
        SEED,
    );
    grid.h0 = vec![1, 2];
    let render = |threads: usize| {
        let r = run_study(&grid, Some(threads)).expect("study");
        format!("{}{}{}{}", r.to_long_csv(), r.to_table_csv(true), r.to_rank_csv(), serde_json::to_string(&r).unwrap())
    };
    let one = render(1);
    for threads in [1, 2, 4] {
        c.holds(format!("{threads} threads: output differs from the single-thread run"), render(threads) == one);
    }
    c.verdict("byte-identical study output across runs and thread counts")
}

fn main() {
    let only: Option<Vec<usize>> = std::env::var("MATFACTOR_ACCEPT_ONLY")
        .ok()
        .map(|v| v.split(',').filter_map(|s| s.trim().parse().ok()).collect());
    let wanted = |i: usize| only.as_ref().is_none_or(|o| o.contains(&i));

    let needs_grid = [1, 2, 3].into_iter().any(wanted);
    let needs_signal = [5, 9].into_iter().any(wanted);
    let start = Instant::now();
    let grid = needs_grid.then(ReferenceGrid::run);
    let signal = needs_signal.then(signal_grid);

    let mut results: Vec<(usize, Verdict)> = Vec::new();
    for i in 1..=10 {
        if !wanted(i) {
            continue;
        }
        let v = match i {
            1 => criterion_1(grid.as_ref().unwrap()),
            2 => criterion_2(grid.as_ref().unwrap()),
            3 => criterion_3(grid.as_ref().unwrap()),
            4 => criterion_4(),
            5 => criterion_5(signal.as_ref().unwrap()),
            6 => criterion_6(),
            7 => criterion_7(),
            8 => criterion_8(),
            9 => criterion_9(signal.as_ref().unwrap()),
            _ => criterion_10(),
        };
        results.push((i, v));
    }
    let mut failed = 0;
    for (i, v) in &results {
        println!("criterion {i:>2}: {} {}", if v.pass { "PASS" } else { "FAIL" }, v.summary);
        for m in &v.misses {
            println!("    miss: {m}");
        }
        failed += usize::from(!v.pass);
    }
    println!("acceptance: {}/{} criteria passed in {:.0?}", results.len() - failed, results.len(), start.elapsed());
    if failed > 0 && std::env::var_os("MATFACTOR_ACCEPT_STRICT").is_some() {
        std::process::exit(1);
    }
}
