//! Simulation studies comparing the estimators: relative RMSE against the
//! MCMLE sample size, interval coverage and bias, and the parallel timing
//! model of the bootstrap.

mod coverage;
mod rmse;
mod timing;

pub use coverage::{coverage_study, covers, summarize_coverage, BiasSummary, CoverageReport, CoverageRow, MethodCoverage};
pub use rmse::{rmse_study, RmsePoint, RmseReport, RmseRow};
pub use timing::{
    measure_timing, timing_curve, timing_model, TimingConfig, TimingInputs, TimingPoint, TimingReport, TimingWorkload,
    PAPER_PLATEAUS,
};

use std::io::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::attrs::{AttrValues, NodeAttributes};
use crate::bootstrap::{quantile_sorted, BootstrapConfig};
use crate::error::{Error, Result};
use crate::fit::Estimator;
use crate::graph::UndirectedGraph;
use crate::mcmle::{mcmle_fit, McmleConfig};
use crate::mple::{mple, LogisticOptions};
use crate::rng::Seed;
use crate::sampler::simulate_network;
use crate::terms::{CompiledModel, Model};

/// Where the "true" coefficients of a study come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum Truth {
    Fixed { theta: Vec<f64> },
    /// Fit `estimator` to the base network and treat the estimate as truth.
    Fitted { estimator: Estimator },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyConfig {
    pub model: Model,
    pub truth: Truth,
    /// Number of networks `m` simulated at the true coefficients.
    pub replicates: usize,
    /// MH steps from the base network to each study network.
    pub network_burn_in: u64,
    /// MCMLE sample sizes `L` of the RMSE study.
    pub mcmle_sample_grid: Vec<usize>,
    /// MCMLE settings; `sample_size` is taken from the grid in the RMSE
    /// study and used as is in the coverage study.
    pub mcmle: McmleConfig,
    /// Bootstrap settings of the coverage study; `None` skips the bootstrap.
    pub bootstrap: Option<BootstrapConfig>,
    pub seed: u64,
    pub cores: usize,
}

impl StudyConfig {
    pub fn validate(&self) -> Result<()> {
        if self.replicates == 0 {
            return Err(Error::InvalidConfig("a study needs at least one replicate".into()));
        }
        if self.mcmle_sample_grid.is_empty() || self.mcmle_sample_grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidConfig("MCMLE sample grid must be nonempty and strictly increasing".into()));
        }
        if self.mcmle_sample_grid[0] < 2 {
            return Err(Error::InvalidConfig("MCMLE sample sizes must be >= 2".into()));
        }
        if let Truth::Fixed { theta } = &self.truth {
            if theta.len() != self.model.dim() {
                return Err(Error::DimensionMismatch { expected: self.model.dim(), got: theta.len() });
            }
        }
        self.mcmle.validate()?;
        if let Some(b) = &self.bootstrap {
            b.validate()?;
        }
        Ok(())
    }
}

/// Stream layout of a study: `[arm, replicate, sub-index]` below the master seed.
const ARM_NETWORK: u64 = 0;
const ARM_MCMLE: u64 = 1;
const ARM_BOOTSTRAP: u64 = 2;
const ARM_TRUTH: u64 = 3;

/// Categorical attribute `name` with node `i` in group `g{i mod levels}`.
pub fn alternating_groups(n: usize, name: &str, levels: usize) -> Result<NodeAttributes> {
    let values = (0..n).map(|i| format!("g{}", i % levels.max(1))).collect();
    NodeAttributes::new(n).with(name, AttrValues::Categorical(values))
}

/// A network drawn at `theta` after `burn_in` steps from the empty graph.
pub fn synthetic_network(model: &CompiledModel, theta: &[f64], burn_in: u64, seed: Seed) -> Result<UndirectedGraph> {
    let empty = UndirectedGraph::new_empty(model.node_count())?;
    Ok(simulate_network(&empty, model, theta, burn_in, seed)?.0)
}

/// Coefficients treated as the truth of a study.
pub fn resolve_truth(base: &UndirectedGraph, model: &CompiledModel, cfg: &StudyConfig) -> Result<Vec<f64>> {
    match &cfg.truth {
        Truth::Fixed { theta } => Ok(theta.clone()),
        Truth::Fitted { estimator: Estimator::Mple } => Ok(mple(base, model, &LogisticOptions::default())?.theta),
        Truth::Fitted { estimator: Estimator::Mcmle } => {
            let mut mc = cfg.mcmle.clone();
            mc.sampler.seed = Seed(cfg.seed).derive_path(&[ARM_TRUTH]).0;
            Ok(mcmle_fit(base, model, &mc)?.fit.theta)
        }
        Truth::Fitted { estimator } => Err(Error::InvalidConfig(format!(
            "{} cannot serve as the truth of a study",
            estimator.display_name()
        ))),
    }
}

/// The `m` study networks, each from its own stream.
fn study_networks(base: &UndirectedGraph, model: &CompiledModel, theta: &[f64], cfg: &StudyConfig) -> Result<Vec<UndirectedGraph>> {
    (0..cfg.replicates)
        .into_par_iter()
        .map(|r| {
            let seed = Seed(cfg.seed).derive_path(&[ARM_NETWORK, r as u64]);
            Ok(simulate_network(base, model, theta, cfg.network_burn_in, seed)?.0)
        })
        .collect()
}

/// `sqrt((1/m) sum_i (theta_true - theta_i)^2)` per coordinate.
pub fn rmse(theta_true: &[f64], estimates: &[Vec<f64>]) -> Result<Vec<f64>> {
    if estimates.is_empty() {
        return Err(Error::EmptyInput);
    }
    let m = estimates.len() as f64;
    Ok((0..theta_true.len())
        .map(|k| (estimates.iter().map(|e| (e[k] - theta_true[k]).powi(2)).sum::<f64>() / m).sqrt())
        .collect())
}

/// `ln(rmse_mcmle / rmse_mple)` per coordinate; negative favours the MCMLE.
pub fn log_relative_rmse(rmse_mcmle: &[f64], rmse_mple: &[f64]) -> Result<Vec<f64>> {
    if rmse_mcmle.len() != rmse_mple.len() {
        return Err(Error::DimensionMismatch { expected: rmse_mple.len(), got: rmse_mcmle.len() });
    }
    rmse_mcmle
        .iter()
        .zip(rmse_mple)
        .map(|(&a, &b)| {
            if a > 0.0 && b > 0.0 {
                Ok((a / b).ln())
            } else {
                Err(Error::InvalidConfig("log relative RMSE needs positive RMSEs".into()))
            }
        })
        .collect()
}

/// Ranks starting at 1, ties sharing their average rank.
fn ranks(x: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..x.len()).collect();
    idx.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    let mut r = vec![0.0; x.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && x[idx[j + 1]] == x[idx[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            r[k] = avg;
        }
        i = j + 1;
    }
    r
}

/// Spearman rank correlation; `None` when either series is constant or the
/// lengths differ or are below 2.
pub fn spearman(x: &[f64], y: &[f64]) -> Option<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return None;
    }
    let (rx, ry) = (ranks(x), ranks(y));
    let n = x.len() as f64;
    let (mx, my) = (rx.iter().sum::<f64>() / n, ry.iter().sum::<f64>() / n);
    let cov: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = rx.iter().map(|a| (a - mx).powi(2)).sum();
    let vy: f64 = ry.iter().map(|b| (b - my).powi(2)).sum();
    (vx > 0.0 && vy > 0.0).then(|| cov / (vx * vy).sqrt())
}

fn sample_sd(x: &[f64]) -> f64 {
    let n = x.len() as f64;
    let m = x.iter().sum::<f64>() / n;
    (x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
}

fn median_iqr(x: &[f64]) -> (f64, f64, f64) {
    let mut s = x.to_vec();
    s.sort_by(f64::total_cmp);
    (quantile_sorted(&s, 0.25), quantile_sorted(&s, 0.5), quantile_sorted(&s, 0.75))
}

/// Writes tidy rows as CSV with a header taken from the field names, after
/// `comments` as `# key=value` lines.
pub fn write_rows<T: Serialize>(w: impl std::io::Write, rows: &[T], comments: &[(String, String)]) -> Result<()> {
    let mut w = std::io::BufWriter::new(w);
    for (k, v) in comments {
        writeln!(w, "# {k}={v}")?;
    }
    let mut wtr = csv::Writer::from_writer(w);
    for r in rows {
        wtr.serialize(r)?;
    }
    wtr.flush()?;
    Ok(())
}
