//! Parametric bootstrap for the MPLE.
//!
//! The MPLE `theta_hat` is fitted to the observed network, `B` networks are
//! simulated at `theta_hat`, the MPLE is refitted on each, and per-coordinate
//! percentile intervals are read off the replicate distribution.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fit::{Estimator, FitResult};
use crate::graph::UndirectedGraph;
use crate::mple::{mple, LogisticOptions};
use crate::parallel::with_cores;
use crate::rng::Seed;
use crate::sampler::{simulate_network, SamplerConfig};
use crate::stat_matrix::StatMatrix;
use crate::terms::CompiledModel;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BootstrapConfig {
    pub replicates: usize,
    /// Per-replicate simulation. Only `burn_in` is used: each replicate is a
    /// single network drawn after a full burn-in from the observed graph.
    pub sampler: SamplerConfig,
    pub ci_level: f64,
    /// Worker threads; 0 uses the ambient pool.
    pub cores: usize,
    /// Replicate `b` draws from `Seed(seed).derive(b)`.
    pub seed: u64,
    /// Largest tolerated share of failed refits.
    pub max_failure_fraction: f64,
    #[serde(default)]
    pub mple: LogisticOptions,
}

impl Default for BootstrapConfig {
    fn default() -> Self {
        Self {
            replicates: 500,
            sampler: SamplerConfig::default(),
            ci_level: 0.95,
            cores: 0,
            seed: 0,
            max_failure_fraction: 0.1,
            mple: LogisticOptions::default(),
        }
    }
}

impl BootstrapConfig {
    pub fn validate(&self) -> Result<()> {
        if self.replicates < 2 {
            return Err(Error::InvalidConfig("bootstrap needs at least 2 replicates".into()));
        }
        if !(self.ci_level > 0.0 && self.ci_level < 1.0) {
            return Err(Error::InvalidConfig(format!("ci_level must lie in (0, 1), got {}", self.ci_level)));
        }
        if !(0.0..=1.0).contains(&self.max_failure_fraction) {
            return Err(Error::InvalidConfig("max_failure_fraction must lie in [0, 1]".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicateFailure {
    pub replicate: usize,
    pub reason: String,
}

/// One simulated network and its refit.
#[derive(Debug, Clone, PartialEq)]
pub struct Replicate {
    pub stats: Vec<f64>,
    pub density: f64,
    pub theta: Result<Vec<f64>, String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapResult {
    pub base_fit: FitResult,
    /// Refitted coefficients of the successful replicates, in replicate order.
    pub replicate_thetas: StatMatrix,
    /// Replicate index of each row of `replicate_thetas`.
    pub replicate_ids: Vec<usize>,
    /// Statistics of every simulated network, in replicate order.
    pub replicate_stats: StatMatrix,
    pub replicate_densities: Vec<f64>,
    pub ci: Vec<[f64; 2]>,
    pub ci_level: f64,
    pub failures: Vec<ReplicateFailure>,
}

impl BootstrapResult {
    /// The MPLE with percentile intervals and the replicate covariance.
    pub fn to_fit_result(&self) -> FitResult {
        let covariance = self.replicate_thetas.covariance();
        let std_errors = (0..covariance.len()).map(|k| covariance[k][k].max(0.0).sqrt()).collect();
        FitResult {
            estimator: Estimator::BootstrapMple,
            std_errors,
            covariance,
            ci: self.ci.clone(),
            ci_level: self.ci_level,
            ..self.base_fit.clone()
        }
    }
}

/// Empirical quantiles at `(1 - level) / 2` and `(1 + level) / 2`, linearly
/// interpolated between order statistics at 0-based position `(m - 1) p`.
pub fn percentile_ci(samples: &[f64], level: f64) -> Result<[f64; 2]> {
    if samples.is_empty() {
        return Err(Error::EmptyInput);
    }
    if samples.len() < 2 {
        return Err(Error::TooFewSamples { need: 2, got: samples.len() });
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::InvalidConfig(format!("level must lie in (0, 1), got {level}")));
    }
    let mut x = samples.to_vec();
    x.sort_by(f64::total_cmp);
    let alpha = (1.0 - level) / 2.0;
    Ok([quantile_sorted(&x, alpha), quantile_sorted(&x, 1.0 - alpha)])
}

pub(crate) fn quantile_sorted(x: &[f64], p: f64) -> f64 {
    let h = (x.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(x.len() - 1);
    x[lo] + (h - lo as f64) * (x[hi] - x[lo])
}

/// Simulates and refits replicate `b`. Depends only on `(theta_hat, seed, b)`
/// and the sampler settings.
pub fn run_replicate(
    g: &UndirectedGraph,
    model: &CompiledModel,
    theta_hat: &[f64],
    cfg: &BootstrapConfig,
    b: usize,
) -> Result<Replicate> {
    let (sim, stats) = simulate_network(g, model, theta_hat, cfg.sampler.burn_in, Seed(cfg.seed).derive(b as u64))?;
    let theta = match mple(&sim, model, &cfg.mple) {
        Ok(fit) => Ok(fit.theta),
        Err(e) if e.is_estimation_failure() => Err(e.to_string()),
        Err(e) => return Err(e),
    };
    Ok(Replicate { stats, density: sim.density(), theta })
}

pub fn parametric_bootstrap(g: &UndirectedGraph, model: &CompiledModel, cfg: &BootstrapConfig) -> Result<BootstrapResult> {
    cfg.validate()?;
    let base_fit = mple(g, model, &cfg.mple).map_err(|e| Error::BaseFitFailed(Box::new(e)))?;
    let theta_hat = base_fit.theta.clone();
    let replicates: Vec<Result<Replicate>> = with_cores(cfg.cores, || {
        (0..cfg.replicates).into_par_iter().map(|b| run_replicate(g, model, &theta_hat, cfg, b)).collect()
    })?;

    let labels = model.labels().to_vec();
    let mut replicate_thetas = StatMatrix::new(labels.clone());
    let mut replicate_stats = StatMatrix::new(labels);
    let mut replicate_ids = Vec::new();
    let mut replicate_densities = Vec::with_capacity(cfg.replicates);
    let mut failures = Vec::new();
    for (b, rep) in replicates.into_iter().enumerate() {
        let rep = rep?;
        replicate_stats.push_row(&rep.stats)?;
        replicate_densities.push(rep.density);
        match rep.theta {
            Ok(t) => {
                replicate_thetas.push_row(&t)?;
                replicate_ids.push(b);
            }
            Err(reason) => failures.push(ReplicateFailure { replicate: b, reason }),
        }
    }
    if failures.len() as f64 > cfg.max_failure_fraction * cfg.replicates as f64 || replicate_ids.len() < 2 {
        return Err(Error::TooManyReplicateFailures { failed: failures.len(), total: cfg.replicates });
    }
    let ci = (0..model.dim())
        .map(|k| percentile_ci(&replicate_thetas.column(k), cfg.ci_level))
        .collect::<Result<Vec<_>>>()?;
    Ok(BootstrapResult {
        base_fit,
        replicate_thetas,
        replicate_ids,
        replicate_stats,
        replicate_densities,
        ci,
        ci_level: cfg.ci_level,
        failures,
    })
}
