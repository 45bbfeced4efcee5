//! Long-format CSV ingestion and JSON/CSV export.
//!
//! The long format has header `t,row,col,value` with 1-based indices and one
//! record per cell per period. Dimensions are inferred from the largest
//! indices; every `(t, row, col)` in the implied box must be present.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::baseline::VecFactorFit;
use crate::error::{Error, Result};
use crate::estimator::FactorFit;
use crate::series::MatrixSeries;
use crate::simulation::SimTruth;

const HEADER: [&str; 4] = ["t", "row", "col", "value"];

/// Reads a long-format panel from `path`.
pub fn ingest_csv(path: impl AsRef<Path>) -> Result<MatrixSeries<f64>> {
    read_long_csv(fs::File::open(path)?)
}

pub fn read_long_csv<R: Read>(reader: R) -> Result<MatrixSeries<f64>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let header = rdr.headers()?.clone();
    if header.len() != 4 || header.iter().zip(HEADER).any(|(a, b)| !a.eq_ignore_ascii_case(b)) {
        return Err(Error::Schema(format!("expected header t,row,col,value, found {}", header.iter().collect::<Vec<_>>().join(","))));
    }
    let mut cells: HashMap<(usize, usize, usize), f64> = HashMap::new();
    let (mut tmax, mut rmax, mut cmax) = (0, 0, 0);
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let lineno = line + 2;
        if rec.len() != 4 {
            return Err(Error::Schema(format!("line {lineno}: expected 4 fields, found {}", rec.len())));
        }
        let index = |i: usize| -> Result<usize> {
            let v: usize = rec[i]
                .parse()
                .map_err(|_| Error::Schema(format!("line {lineno}: {} is not a positive integer: {:?}", HEADER[i], &rec[i])))?;
            if v == 0 {
                return Err(Error::Schema(format!("line {lineno}: {} is 1-based, found 0", HEADER[i])));
            }
            Ok(v)
        };
        let (t, r, c) = (index(0)?, index(1)?, index(2)?);
        let value: f64 = rec[3]
            .parse()
            .map_err(|_| Error::Schema(format!("line {lineno}: value is not a number: {:?}", &rec[3])))?;
        if !value.is_finite() {
            return Err(Error::NonFinite { t, row: r, col: c });
        }
        if cells.insert((t, r, c), value).is_some() {
            return Err(Error::Schema(format!("line {lineno}: duplicate record for t={t}, row={r}, col={c}")));
        }
        tmax = tmax.max(t);
        rmax = rmax.max(r);
        cmax = cmax.max(c);
    }
    if cells.is_empty() {
        return Err(Error::Schema("no records".into()));
    }
    let mut data = Vec::with_capacity(tmax);
    for t in 1..=tmax {
        let mut m = DMatrix::zeros(rmax, cmax);
        for r in 1..=rmax {
            for c in 1..=cmax {
                match cells.get(&(t, r, c)) {
                    Some(&v) => m[(r - 1, c - 1)] = v,
                    None => return Err(Error::IncompletePanel { t, row: r, col: c }),
                }
            }
        }
        data.push(m);
    }
    MatrixSeries::new(data)
}

/// Long-format CSV text for a sequence of matrices, values in shortest
/// round-trip form.
pub fn long_csv_string(mats: &[DMatrix<f64>]) -> String {
    let mut s = String::from("t,row,col,value\n");
    for (t, m) in mats.iter().enumerate() {
        for r in 0..m.nrows() {
            for c in 0..m.ncols() {
                let _ = writeln!(s, "{},{},{},{:?}", t + 1, r + 1, c + 1, m[(r, c)]);
            }
        }
    }
    s
}

pub fn write_long_csv(series: &MatrixSeries<f64>, path: impl AsRef<Path>) -> Result<()> {
    write_atomic(path, long_csv_string(series.matrices()).as_bytes())
}

/// Writes through a temporary file in the same directory and renames it into place.
pub fn write_atomic(path: impl AsRef<Path>, bytes: &[u8]) -> Result<()> {
    let path = path.as_ref();
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let tmp = dir.join(format!(".{name}.tmp{}", std::process::id()));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

/// `v` rounded to `digits` significant digits, printed without trailing noise.
pub fn fmt_sig(v: f64, digits: usize) -> String {
    if v == 0.0 || !v.is_finite() {
        return format!("{v}");
    }
    let rounded: f64 = format!("{:.*e}", digits.saturating_sub(1), v).parse().unwrap_or(v);
    format!("{rounded}")
}

fn row_major(m: &DMatrix<f64>) -> Vec<f64> {
    let mut out = Vec::with_capacity(m.len());
    for r in 0..m.nrows() {
        out.extend(m.row(r).iter().copied());
    }
    out
}

fn from_row_major(rows: usize, cols: usize, data: &[f64]) -> Result<DMatrix<f64>> {
    if data.len() != rows * cols {
        return Err(Error::Schema(format!("expected {} loading entries, found {}", rows * cols, data.len())));
    }
    Ok(DMatrix::from_row_slice(rows, cols, data))
}

/// Serialized loading estimate. Matrices are flattened row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitExport {
    /// `"matrix"` or `"vector"`.
    pub model: String,
    pub p1: usize,
    pub p2: usize,
    pub k1: usize,
    pub k2: usize,
    pub h0: usize,
    pub q1: Vec<f64>,
    pub q2: Vec<f64>,
    pub eigvals1: Vec<f64>,
    pub eigvals2: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl FitExport {
    pub fn from_fit(fit: &FactorFit<f64>) -> Self {
        let (p1, p2) = fit.dims();
        let (k1, k2) = fit.ranks();
        Self {
            model: "matrix".into(),
            p1,
            p2,
            k1,
            k2,
            h0: fit.options.h0,
            q1: row_major(&fit.q1.q),
            q2: row_major(&fit.q2.q),
            eigvals1: fit.q1.full_spectrum.clone(),
            eigvals2: fit.q2.full_spectrum.clone(),
            note: fit.standardizer.as_ref().map(|_| "estimated on standardized data".into()),
        }
    }

    /// Vectorized fits reuse the schema: `q1` is the `p1p2 x k` loading,
    /// `k1 = k`, and `q2` is the `1 x 1` placeholder `[1]` with `k2 = 1`.
    pub fn from_vec_fit(fit: &VecFactorFit<f64>) -> Self {
        Self {
            model: "vector".into(),
            p1: fit.p1,
            p2: fit.p2,
            k1: fit.k(),
            k2: 1,
            h0: fit.h0,
            q1: row_major(&fit.q),
            q2: vec![1.0],
            eigvals1: fit.spectrum.clone(),
            eigvals2: vec![],
            note: Some("vectorized model: q1 is the p1*p2 x k1 loading of vec(X_t); k2 = 1 is a placeholder".into()),
        }
    }

    /// `(Q1, Q2)` for a matrix fit, `(Q, [1])` for a vectorized one.
    pub fn loadings(&self) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
        if self.model == "vector" {
            return Ok((from_row_major(self.p1 * self.p2, self.k1, &self.q1)?, DMatrix::from_element(1, 1, 1.0)));
        }
        Ok((from_row_major(self.p1, self.k1, &self.q1)?, from_row_major(self.p2, self.k2, &self.q2)?))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        Ok(serde_json::from_slice(&fs::read(path)?)?)
    }
}

/// Serialized simulation truth (loadings only; the signal is implied by the data).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthExport {
    pub p1: usize,
    pub p2: usize,
    pub k1: usize,
    pub k2: usize,
    pub r: Vec<f64>,
    pub c: Vec<f64>,
}

impl TruthExport {
    pub fn from_truth(truth: &SimTruth) -> Self {
        Self {
            p1: truth.r.nrows(),
            p2: truth.c.nrows(),
            k1: truth.r.ncols(),
            k2: truth.c.ncols(),
            r: row_major(&truth.r),
            c: row_major(&truth.c),
        }
    }

    pub fn loadings(&self) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
        Ok((from_row_major(self.p1, self.k1, &self.r)?, from_row_major(self.p2, self.k2, &self.c)?))
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        Ok(serde_json::from_slice(&fs::read(path)?)?)
    }
}

/// `row,f1,...,fk` with entries multiplied by `scale`.
pub fn loadings_csv(q: &DMatrix<f64>, scale: f64) -> String {
    let mut s = String::from("row");
    for j in 0..q.ncols() {
        let _ = write!(s, ",f{}", j + 1);
    }
    s.push('\n');
    for i in 0..q.nrows() {
        let _ = write!(s, "{}", i + 1);
        for j in 0..q.ncols() {
            let _ = write!(s, ",{:?}", q[(i, j)] * scale);
        }
        s.push('\n');
    }
    s
}

/// Scree data: `index,eigenvalue,log_eigenvalue,ratio` where `ratio` is
/// `lambda_{i+1} / lambda_i` (empty on the last row or for a zero eigenvalue).
pub fn scree_csv(spectrum: &[f64]) -> String {
    let mut s = String::from("index,eigenvalue,log_eigenvalue,ratio\n");
    for (i, &v) in spectrum.iter().enumerate() {
        let log = if v > 0.0 { format!("{:?}", v.ln()) } else { String::new() };
        let ratio = match spectrum.get(i + 1) {
            Some(&next) if v > 0.0 => format!("{:?}", next / v),
            _ => String::new(),
        };
        let _ = writeln!(s, "{},{:?},{},{}", i + 1, v, log, ratio);
    }
    s
}
