use std::io::Read;
use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Observed (possibly right-censored) survival times with covariates.
///
/// `delta[i] == true` marks an observed event; otherwise `y[i]` is the
/// censoring time `C_i`. The design matrix is used as given: add an
/// intercept column explicitly if one is wanted.
#[derive(Debug, Clone, PartialEq)]
pub struct SurvivalDataset {
    y: Vec<f64>,
    ln_y: Vec<f64>,
    delta: Vec<bool>,
    x: DMatrix<f64>,
    covariate_names: Vec<String>,
}

impl SurvivalDataset {
    pub fn new(y: Vec<f64>, delta: Vec<bool>, x: DMatrix<f64>) -> Result<Self> {
        let names = (1..=x.ncols()).map(|j| format!("x{j}")).collect();
        Self::with_names(y, delta, x, names)
    }

    pub fn with_names(y: Vec<f64>, delta: Vec<bool>, x: DMatrix<f64>, covariate_names: Vec<String>) -> Result<Self> {
        let n = y.len();
        if delta.len() != n || x.nrows() != n {
            return Err(Error::data(format!(
                "length mismatch: {} times, {} status values, {} covariate rows",
                n,
                delta.len(),
                x.nrows()
            )));
        }
        if covariate_names.len() != x.ncols() {
            return Err(Error::data("one name per covariate column is required"));
        }
        if x.ncols() == 0 {
            return Err(Error::data("at least one covariate column is required"));
        }
        if let Some(i) = y.iter().position(|&v| !(v > 0.0 && v.is_finite())) {
            return Err(Error::data(format!("time {} at observation {} is not finite and positive", y[i], i + 1)));
        }
        if let Some(pos) = x.iter().position(|v| !v.is_finite()) {
            return Err(Error::data(format!("non-finite covariate at observation {}", pos % n.max(1) + 1)));
        }
        if n > 0 {
            let rank = x.clone().svd(false, false).rank(1e-10 * x.amax().max(1.0) * n.max(x.ncols()) as f64);
            if rank < x.ncols() {
                return Err(Error::data(format!(
                    "design matrix has rank {rank} but {} columns; covariates must have full column rank",
                    x.ncols()
                )));
            }
        }
        let ln_y = y.iter().map(|v| v.ln()).collect();
        Ok(Self { y, ln_y, delta, x, covariate_names })
    }

    /// A dataset with no observations and `p` covariates.
    pub fn empty(p: usize) -> Self {
        Self {
            y: Vec::new(),
            ln_y: Vec::new(),
            delta: Vec::new(),
            x: DMatrix::zeros(0, p),
            covariate_names: (1..=p).map(|j| format!("x{j}")).collect(),
        }
    }

    /// Same covariates, new responses. The rank check is skipped since `X`
    /// is unchanged.
    pub fn with_responses(&self, y: Vec<f64>, delta: Vec<bool>) -> Result<Self> {
        if y.len() != self.n() || delta.len() != self.n() {
            return Err(Error::data("response length does not match the design matrix"));
        }
        if let Some(i) = y.iter().position(|&v| !(v > 0.0 && v.is_finite())) {
            return Err(Error::data(format!("time {} at observation {} is not finite and positive", y[i], i + 1)));
        }
        let ln_y = y.iter().map(|v| v.ln()).collect();
        Ok(Self { y, ln_y, delta, x: self.x.clone(), covariate_names: self.covariate_names.clone() })
    }

    /// The dataset with the listed observations removed.
    pub fn without_rows(&self, drop: &[usize]) -> Result<Self> {
        let keep: Vec<usize> = (0..self.n()).filter(|i| !drop.contains(i)).collect();
        let x = self.x.select_rows(keep.iter());
        let y = keep.iter().map(|&i| self.y[i]).collect();
        let delta = keep.iter().map(|&i| self.delta[i]).collect();
        Self::with_names(y, delta, x, self.covariate_names.clone())
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }

    pub fn p(&self) -> usize {
        self.x.ncols()
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn ln_y(&self) -> &[f64] {
        &self.ln_y
    }

    pub fn delta(&self) -> &[bool] {
        &self.delta
    }

    pub fn x(&self) -> &DMatrix<f64> {
        &self.x
    }

    pub fn covariate_names(&self) -> &[String] {
        &self.covariate_names
    }

    pub fn n_censored(&self) -> usize {
        self.delta.iter().filter(|d| !**d).count()
    }

    /// `x_i' b`.
    #[inline]
    pub fn linear_predictor(&self, i: usize, b: &[f64]) -> f64 {
        let mut acc = 0.0;
        for (j, bj) in b.iter().enumerate() {
            acc += self.x[(i, j)] * bj;
        }
        acc
    }

    /// Reads `time,status,<covariates...>` with a header row. Columns are
    /// located by name; every column other than `time` and `status` is a
    /// covariate, in file order.
    pub fn from_csv_path(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::from_csv_reader(file)
    }

    pub fn from_csv_reader<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(reader);
        let headers = rdr.headers().map_err(csv_error)?.clone();
        let find = |name: &str| headers.iter().position(|h| h.eq_ignore_ascii_case(name));
        let time_col = find("time").ok_or_else(|| Error::data_at(1, "missing required column `time`"))?;
        let status_col = find("status").ok_or_else(|| Error::data_at(1, "missing required column `status`"))?;
        let cov_cols: Vec<usize> = (0..headers.len()).filter(|&c| c != time_col && c != status_col).collect();
        if cov_cols.is_empty() {
            return Err(Error::data_at(1, "no covariate columns found"));
        }
        let names: Vec<String> = cov_cols.iter().map(|&c| headers[c].to_string()).collect();

        let (mut y, mut delta, mut xs) = (Vec::new(), Vec::new(), Vec::new());
        for (k, rec) in rdr.records().enumerate() {
            let row = k + 2;
            let rec = rec.map_err(csv_error)?;
            if rec.len() != headers.len() {
                return Err(Error::data_at(row, format!("expected {} fields, found {}", headers.len(), rec.len())));
            }
            let t: f64 = parse_field(&rec[time_col], row, "time")?;
            if !(t > 0.0 && t.is_finite()) {
                return Err(Error::data_at(row, format!("time must be finite and positive, got {t}")));
            }
            let d = match rec[status_col].trim() {
                "1" => true,
                "0" => false,
                other => return Err(Error::data_at(row, format!("status must be 0 or 1, got `{other}`"))),
            };
            y.push(t);
            delta.push(d);
            for (&c, name) in cov_cols.iter().zip(&names) {
                xs.push(parse_field(&rec[c], row, name)?);
            }
        }
        if y.is_empty() {
            return Err(Error::data("no data rows"));
        }
        let x = DMatrix::from_row_slice(y.len(), cov_cols.len(), &xs);
        Self::with_names(y, delta, x, names)
    }

    pub fn to_csv_path(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut w = csv::Writer::from_path(path).map_err(|e| csv_io_error(path, e))?;
        let mut header = vec!["time".to_string(), "status".to_string()];
        header.extend(self.covariate_names.iter().cloned());
        w.write_record(&header).map_err(|e| csv_io_error(path, e))?;
        for i in 0..self.n() {
            let mut rec = vec![format!("{:?}", self.y[i]), (self.delta[i] as u8).to_string()];
            rec.extend((0..self.p()).map(|j| format!("{:?}", self.x[(i, j)])));
            w.write_record(&rec).map_err(|e| csv_io_error(path, e))?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }
}

fn parse_field(s: &str, row: usize, column: &str) -> Result<f64> {
    s.trim()
        .parse::<f64>()
        .map_err(|_| Error::data_at(row, format!("column `{column}`: cannot parse `{s}` as a number")))
}

fn csv_error(e: csv::Error) -> Error {
    let row = e.position().map(|p| p.line() as usize);
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io("<csv input>", io),
        other => Error::Data { row, message: format!("{other:?}") },
    }
}

pub(crate) fn csv_io_error(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::io(path, std::io::Error::other(format!("{other:?}"))),
    }
}
