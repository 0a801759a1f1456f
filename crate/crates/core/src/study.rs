//! Replication studies: bias and MSE of the estimators against the
//! closed-form truth, and confidence-interval coverage.

use std::io::Write;
use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::domain::{DependenceQuery, MadogramGrid, Region};
use crate::error::{Error, Result};
use crate::estimators::{grid_queries, EstimatorKind, PreparedPair};
use crate::m4::{analytic_grid, analytic_madogram, simulate_m4, M4Spec};
use crate::rng::{substream_seed, RNG_ALGORITHM};

/// `{0.2 k : k = 1, ..., 100}`.
pub fn default_grid() -> Vec<f64> {
    (1..=100).map(|k| k as f64 * 0.2).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyConfig {
    pub spec: M4Spec,
    pub x: Region,
    pub y: Region,
    /// Fields per replication.
    #[serde(rename = "T", default = "default_t")]
    pub t: usize,
    /// Number of replications.
    #[serde(rename = "R", default = "default_r")]
    pub r: usize,
    #[serde(default = "default_grid")]
    pub alphas: Vec<f64>,
    #[serde(default = "default_grid")]
    pub betas: Vec<f64>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_estimator")]
    pub estimator: EstimatorKind,
}

fn default_t() -> usize {
    100
}

fn default_r() -> usize {
    50
}

fn default_estimator() -> EstimatorKind {
    EstimatorKind::EmpiricalMargins
}

impl StudyConfig {
    /// Defaults to 50 replications of 100 fields each, the empirical-margin
    /// estimator and the full `0.2 k` grid.
    pub fn new(spec: M4Spec, x: Region, y: Region) -> Self {
        StudyConfig {
            spec,
            x,
            y,
            t: default_t(),
            r: default_r(),
            alphas: default_grid(),
            betas: default_grid(),
            seed: 0,
            estimator: default_estimator(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.t < 2 {
            return Err(Error::TooFewReplications {
                required: 2,
                got: self.t,
            });
        }
        if self.r < 1 {
            return Err(Error::param("R must be at least 1"));
        }
        grid_queries(&self.alphas, &self.betas)?;
        self.x.ensure_disjoint(&self.y)?;
        for loc in self.x.locations().iter().chain(self.y.locations()) {
            self.spec.coeffs(loc)?;
        }
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let cfg: StudyConfig = serde_json::from_str(&text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    fn locations(&self) -> Vec<crate::domain::Location> {
        self.x.union(&self.y).locations().to_vec()
    }

    /// Seed of replication `r`; each replication can be regenerated alone.
    pub fn replication_seed(&self, r: usize) -> u64 {
        substream_seed(self.seed, r as u64)
    }

    /// Estimates for every grid cell from replication `r`, row-major.
    fn replicate(&self, r: usize, queries: &[DependenceQuery]) -> Result<Vec<f64>> {
        let panel = simulate_m4(&self.spec, &self.locations(), self.t, self.replication_seed(r))?;
        let pair = PreparedPair::new(&panel, &self.x, &self.y, self.estimator)?;
        Ok(queries.iter().map(|q| pair.estimate(*q).nu_hat).collect())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyReport {
    pub truth: MadogramGrid,
    pub mean_estimate: MadogramGrid,
    pub bias: Vec<Vec<f64>>,
    pub mse: Vec<Vec<f64>>,
    /// Sample standard deviation (denominator `R - 1`, zero when `R = 1`).
    pub per_cell_sd: Vec<Vec<f64>>,
    pub runtime_seconds: f64,
    #[serde(rename = "R")]
    pub r: usize,
    pub seed: u64,
    pub estimator: EstimatorKind,
    pub rng: String,
}

impl StudyReport {
    pub fn max_mse(&self) -> f64 {
        self.mse.iter().flatten().copied().fold(0.0, f64::max)
    }

    pub fn max_abs_bias(&self) -> f64 {
        self.bias.iter().flatten().map(|b| b.abs()).fold(0.0, f64::max)
    }

    /// Equality of everything except wall-clock runtime.
    pub fn same_results(&self, other: &StudyReport) -> bool {
        let mut a = self.clone();
        a.runtime_seconds = other.runtime_seconds;
        &a == other
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// One row per cell: `alpha,beta,truth,mean,bias,mse,sd`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["alpha", "beta", "truth", "mean", "bias", "mse", "sd"])?;
        for (a, &alpha) in self.truth.alphas.iter().enumerate() {
            for (b, &beta) in self.truth.betas.iter().enumerate() {
                w.write_record([
                    alpha.to_string(),
                    beta.to_string(),
                    self.truth.values[a][b].to_string(),
                    self.mean_estimate.values[a][b].to_string(),
                    self.bias[a][b].to_string(),
                    self.mse[a][b].to_string(),
                    self.per_cell_sd[a][b].to_string(),
                ])?;
            }
        }
        w.flush().map_err(|e| Error::io("<csv>", e))?;
        Ok(())
    }
}

pub fn run_study(config: &StudyConfig) -> Result<StudyReport> {
    config.validate()?;
    let started = Instant::now();
    let truth = analytic_grid(&config.spec, &config.x, &config.y, &config.alphas, &config.betas)?;
    let queries: Vec<DependenceQuery> = grid_queries(&config.alphas, &config.betas)?
        .into_iter()
        .flatten()
        .collect();

    // collect keeps replication order, so the reduction below is fixed
    let per_rep = (0..config.r)
        .into_par_iter()
        .map(|r| config.replicate(r, &queries))
        .collect::<Result<Vec<_>>>()?;

    let (na, nb) = (config.alphas.len(), config.betas.len());
    let rf = config.r as f64;
    let mut mean = vec![vec![0.0; nb]; na];
    let mut bias = vec![vec![0.0; nb]; na];
    let mut mse = vec![vec![0.0; nb]; na];
    let mut sd = vec![vec![0.0; nb]; na];
    for a in 0..na {
        for b in 0..nb {
            let cell = a * nb + b;
            let tv = truth.values[a][b];
            let m = per_rep.iter().map(|v| v[cell]).sum::<f64>() / rf;
            let sq_truth = per_rep.iter().map(|v| (v[cell] - tv).powi(2)).sum::<f64>() / rf;
            let sq_mean = per_rep.iter().map(|v| (v[cell] - m).powi(2)).sum::<f64>();
            mean[a][b] = m;
            bias[a][b] = m - tv;
            mse[a][b] = sq_truth;
            sd[a][b] = if config.r > 1 {
                (sq_mean / (rf - 1.0)).sqrt()
            } else {
                0.0
            };
        }
    }
    let mean_estimate = MadogramGrid {
        alphas: config.alphas.clone(),
        betas: config.betas.clone(),
        values: mean,
        kind: config.estimator.grid_kind(),
        region_x: config.x.clone(),
        region_y: config.y.clone(),
        seed: Some(config.seed),
        t: Some(config.t),
    };
    mean_estimate.validate()?;
    Ok(StudyReport {
        truth,
        mean_estimate,
        bias,
        mse,
        per_cell_sd: sd,
        runtime_seconds: started.elapsed().as_secs_f64(),
        r: config.r,
        seed: config.seed,
        estimator: config.estimator,
        rng: RNG_ALGORITHM.to_string(),
    })
}

/// Fraction of replications whose 95% interval covers the closed-form value.
pub fn coverage_check(config: &StudyConfig, cell: DependenceQuery) -> Result<f64> {
    if config.estimator != EstimatorKind::KnownMargins {
        return Err(Error::param(
            "coverage is only defined for the known-margin estimator",
        ));
    }
    let mut cfg = config.clone();
    cfg.alphas = vec![cell.alpha];
    cfg.betas = vec![cell.beta];
    cfg.validate()?;
    let truth = analytic_madogram(&cfg.spec, &cfg.x, &cfg.y, cell)?.nu.max(0.0);
    let locations = cfg.locations();
    let hits = (0..cfg.r)
        .into_par_iter()
        .map(|r| -> Result<bool> {
            let panel = simulate_m4(&cfg.spec, &locations, cfg.t, cfg.replication_seed(r))?;
            let est = PreparedPair::known_margins(&panel, &cfg.x, &cfg.y)?.estimate(cell);
            Ok(est.covers(truth))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(hits.iter().filter(|h| **h).count() as f64 / cfg.r as f64)
}
