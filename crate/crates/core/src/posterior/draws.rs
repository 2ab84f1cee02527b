use std::io::Write;
use std::path::Path;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{csv_io_error, GlobalParams, Hyperparams, LatentState, SurvivalDataset};
use crate::sampler::{Diagnostics, McmcConfig, ModelKind};

/// Reproduction record written next to the draws.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub model: Option<ModelKind>,
    pub seed: u64,
    pub chains: usize,
    pub config: Option<McmcConfig>,
    pub hyperparameters: Option<Hyperparams>,
    pub n: usize,
    pub p: usize,
    pub covariate_names: Vec<String>,
    pub acceptance: Vec<AcceptanceRates>,
    pub diagnostics: Vec<Diagnostics>,
    pub code_version: String,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct AcceptanceRates {
    pub alpha_tilde: Option<f64>,
    pub beta_tilde: Option<f64>,
    pub gamma_tilde: Option<f64>,
}

impl RunManifest {
    pub fn new(
        kind: ModelKind,
        config: &McmcConfig,
        hyper: &Hyperparams,
        data: &SurvivalDataset,
        chains: usize,
        diagnostics: Vec<Diagnostics>,
    ) -> Self {
        let acceptance = diagnostics
            .iter()
            .map(|d| AcceptanceRates {
                alpha_tilde: d.alpha_tilde.rate(),
                beta_tilde: d.beta_tilde.rate(),
                gamma_tilde: d.gamma_tilde.rate(),
            })
            .collect();
        let mut notes = vec![
            "the (u, v, w) augmentation is drawn only for observations with z = 1; for z = 0 the local scale is an exact DLH draw and the triple is not used".to_string(),
            "local scales are stored as ln(eta~); lambda = 1 exactly when z = 0".to_string(),
        ];
        if data.n() > 0 && data.n_censored() == data.n() {
            notes.push("warning: every observation is censored; the likelihood carries no event information".to_string());
        }
        if !kind.is_robust() {
            notes.push("non-robust model: lambda = 1 and z = 0 throughout; the s column is not sampled (NaN)".to_string());
        }
        Self {
            model: Some(kind),
            seed: config.seed,
            chains,
            config: Some(config.clone()),
            hyperparameters: Some(hyper.clone()),
            n: data.n(),
            p: data.p(),
            covariate_names: data.covariate_names().to_vec(),
            acceptance,
            diagnostics,
            code_version: env!("CARGO_PKG_VERSION").to_string(),
            notes,
        }
    }

    pub fn write_json(&self, path: impl AsRef<Path>) -> Result<()> {
        write_json(path, self)
    }
}

pub fn write_json<T: Serialize>(path: impl AsRef<Path>, value: &T) -> Result<()> {
    let path = path.as_ref();
    let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::io(path, std::io::Error::other(e)))?;
    f.write_all(text.as_bytes()).and_then(|_| f.write_all(b"\n")).map_err(|e| Error::io(path, e))
}

/// Saved draws in natural coordinates, row-major per draw.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorDraws {
    pub model: ModelKind,
    n: usize,
    p: usize,
    pub alpha: Vec<f64>,
    /// `p` entries per draw
    pub beta: Vec<f64>,
    pub gamma: Vec<f64>,
    /// `NaN` for non-robust models
    pub s: Vec<f64>,
    /// `n` entries per draw
    pub z: Vec<bool>,
    /// `n` entries per draw; exactly 0 wherever `z` is false
    pub log_lambda: Vec<f64>,
    pub chain: Vec<u32>,
    pub manifest: RunManifest,
}

impl PosteriorDraws {
    pub fn with_capacity(model: ModelKind, n: usize, p: usize, draws: usize) -> Self {
        Self {
            model,
            n,
            p,
            alpha: Vec::with_capacity(draws),
            beta: Vec::with_capacity(draws * p),
            gamma: Vec::with_capacity(draws),
            s: Vec::with_capacity(draws),
            z: Vec::with_capacity(draws * n),
            log_lambda: Vec::with_capacity(draws * n),
            chain: Vec::with_capacity(draws),
            manifest: RunManifest::default(),
        }
    }

    pub fn push(&mut self, params: &GlobalParams, latent: &LatentState, chain: u32) {
        self.alpha.push(params.alpha);
        self.beta.extend(params.beta.iter());
        self.gamma.push(params.gamma);
        self.s.push(if self.model.is_robust() { params.s } else { f64::NAN });
        for i in 0..self.n {
            let z = latent.z[i];
            let ll = latent.log_lambda(i, params.gamma);
            assert!(z || ll == 0.0, "local scale off the spike with z = 0");
            self.z.push(z);
            self.log_lambda.push(ll);
        }
        self.chain.push(chain);
    }

    pub fn append(&mut self, other: PosteriorDraws) {
        assert_eq!((self.n, self.p, self.model), (other.n, other.p, other.model));
        self.alpha.extend(other.alpha);
        self.beta.extend(other.beta);
        self.gamma.extend(other.gamma);
        self.s.extend(other.s);
        self.z.extend(other.z);
        self.log_lambda.extend(other.log_lambda);
        self.chain.extend(other.chain);
    }

    pub fn len(&self) -> usize {
        self.alpha.len()
    }

    pub fn is_empty(&self) -> bool {
        self.alpha.is_empty()
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn beta_row(&self, k: usize) -> &[f64] {
        &self.beta[k * self.p..(k + 1) * self.p]
    }

    pub fn beta_column(&self, j: usize) -> Vec<f64> {
        (0..self.len()).map(|k| self.beta[k * self.p + j]).collect()
    }

    pub fn z_row(&self, k: usize) -> &[bool] {
        &self.z[k * self.n..(k + 1) * self.n]
    }

    pub fn log_lambda_row(&self, k: usize) -> &[f64] {
        &self.log_lambda[k * self.n..(k + 1) * self.n]
    }

    pub fn log_lambda_column(&self, i: usize) -> Vec<f64> {
        (0..self.len()).map(|k| self.log_lambda[k * self.n + i]).collect()
    }

    pub fn params(&self, k: usize) -> GlobalParams {
        GlobalParams {
            alpha: self.alpha[k],
            beta: DVector::from_column_slice(self.beta_row(k)),
            gamma: self.gamma[k],
            s: self.s[k],
        }
    }

    /// Draws of one chain.
    pub fn chain_indices(&self, chain: u32) -> Vec<usize> {
        (0..self.len()).filter(|&k| self.chain[k] == chain).collect()
    }

    pub fn header(n: usize, p: usize) -> Vec<String> {
        let mut h = vec!["alpha".to_string()];
        h.extend((0..p).map(|j| format!("beta_{j}")));
        h.push("gamma".into());
        h.push("s".into());
        h.extend((0..n).map(|i| format!("z_{i}")));
        h.extend((0..n).map(|i| format!("lambda_{i}")));
        h.push("chain".into());
        h
    }

    /// One row per draw; floats use shortest round-trip formatting.
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut w = csv::Writer::from_path(path).map_err(|e| csv_io_error(path, e))?;
        w.write_record(Self::header(self.n, self.p)).map_err(|e| csv_io_error(path, e))?;
        let mut rec: Vec<String> = Vec::with_capacity(4 + self.p + 2 * self.n);
        for k in 0..self.len() {
            rec.clear();
            rec.push(fmt_f64(self.alpha[k]));
            rec.extend(self.beta_row(k).iter().map(|&b| fmt_f64(b)));
            rec.push(fmt_f64(self.gamma[k]));
            rec.push(fmt_f64(self.s[k]));
            rec.extend(self.z_row(k).iter().map(|&z| if z { "1".to_string() } else { "0".to_string() }));
            rec.extend(self.log_lambda_row(k).iter().map(|&l| fmt_f64(l.exp())));
            rec.push(self.chain[k].to_string());
            w.write_record(&rec).map_err(|e| csv_io_error(path, e))?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }

    /// Reads a draws file; `n` and `p` come from the header.
    pub fn read_csv(path: impl AsRef<Path>, model: ModelKind) -> Result<Self> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        let mut rdr = csv::Reader::from_reader(file);
        let headers = rdr.headers().map_err(|e| csv_io_error(path, e))?.clone();
        let p = headers.iter().filter(|h| h.starts_with("beta_")).count();
        let n = headers.iter().filter(|h| h.starts_with("z_")).count();
        let expected = Self::header(n, p);
        if headers.iter().ne(expected.iter().map(String::as_str)) {
            return Err(Error::data_at(1, "draws header does not match alpha,beta_*,gamma,s,z_*,lambda_*,chain"));
        }
        let mut out = Self::with_capacity(model, n, p, 0);
        for (k, rec) in rdr.records().enumerate() {
            let row = k + 2;
            let rec = rec.map_err(|e| csv_io_error(path, e))?;
            let num = |c: usize| -> Result<f64> {
                rec[c].parse::<f64>().map_err(|_| Error::data_at(row, format!("column `{}`: bad number `{}`", &headers[c], &rec[c])))
            };
            out.alpha.push(num(0)?);
            for j in 0..p {
                out.beta.push(num(1 + j)?);
            }
            out.gamma.push(num(1 + p)?);
            out.s.push(num(2 + p)?);
            for i in 0..n {
                out.z.push(num(3 + p + i)? != 0.0);
            }
            for i in 0..n {
                out.log_lambda.push(num(3 + p + n + i)?.ln());
            }
            out.chain.push(num(3 + p + 2 * n)? as u32);
        }
        Ok(out)
    }
}

pub(crate) fn fmt_f64(v: f64) -> String {
    if v.is_nan() {
        "NaN".to_string()
    } else {
        format!("{v:?}")
    }
}
