//! Wall-clock model of the parallel bootstrap relative to one MCMLE fit:
//! `bootstrap = sim + B * fit / x` and `relative = bootstrap / mcmle`.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::UndirectedGraph;
use crate::mcmle::{mcmle_fit, McmleConfig};
use crate::mple::{mple, LogisticOptions};
use crate::rng::Seed;
use crate::sampler::simulate_network;
use crate::terms::CompiledModel;

/// Relative times at which the curves of the three reference networks level
/// off; drawn as reference lines only.
pub const PAPER_PLATEAUS: [f64; 3] = [0.20, 0.20, 0.17];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimingInputs {
    /// Seconds to simulate all `B` bootstrap networks serially.
    pub network_sim_time: f64,
    /// Seconds per MPLE refit.
    pub mple_fit_time: f64,
    pub mcmle_time: f64,
    pub replicates: usize,
    pub cores: usize,
}

impl TimingInputs {
    pub fn validate(&self) -> Result<()> {
        let times = [self.network_sim_time, self.mple_fit_time, self.mcmle_time];
        if times.iter().any(|t| !(t.is_finite() && *t > 0.0)) {
            return Err(Error::InvalidConfig("timing inputs must be positive".into()));
        }
        if self.replicates == 0 || self.cores == 0 {
            return Err(Error::InvalidConfig("replicates and cores must be >= 1".into()));
        }
        Ok(())
    }
}

/// `(bootstrap_time, relative_time)`.
pub fn timing_model(t: &TimingInputs) -> Result<(f64, f64)> {
    t.validate()?;
    let bootstrap = t.network_sim_time + t.replicates as f64 * t.mple_fit_time / t.cores as f64;
    Ok((bootstrap, bootstrap / t.mcmle_time))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimingPoint {
    pub cores: usize,
    pub bootstrap_time: f64,
    pub relative_time: f64,
}

/// The model evaluated at each core count.
pub fn timing_curve(t: &TimingInputs, cores: &[usize]) -> Result<Vec<TimingPoint>> {
    cores
        .iter()
        .map(|&x| {
            let (bootstrap_time, relative_time) = timing_model(&TimingInputs { cores: x, ..*t })?;
            Ok(TimingPoint { cores: x, bootstrap_time, relative_time })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TimingConfig {
    pub replicates: usize,
    /// MH steps per bootstrap network.
    pub burn_in: u64,
    /// How many of the simulated networks are refitted to time the MPLE.
    pub timed_fits: usize,
    pub mcmle: McmleConfig,
    pub cores_grid: Vec<usize>,
    pub seed: u64,
}

impl Default for TimingConfig {
    fn default() -> Self {
        Self {
            replicates: 500,
            burn_in: 30_000,
            timed_fits: 10,
            mcmle: McmleConfig::default(),
            cores_grid: vec![1, 2, 3, 4, 8, 16, 32, 64, 128, 250, 500],
            seed: 0,
        }
    }
}

/// The seeded computations behind a timing run; reproducible unlike the
/// durations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingWorkload {
    pub mple_theta: Vec<f64>,
    pub mcmle_theta: Vec<f64>,
    pub mcmle_rounds: usize,
    /// Edge count of every simulated bootstrap network.
    pub network_edges: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingReport {
    pub inputs: TimingInputs,
    pub curve: Vec<TimingPoint>,
    /// `sim / mcmle`, the limit for unbounded cores.
    pub asymptote: f64,
    pub reference_plateaus: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub workload: Option<TimingWorkload>,
}

impl TimingReport {
    pub fn from_inputs(inputs: TimingInputs, cores_grid: &[usize]) -> Result<Self> {
        let curve = timing_curve(&inputs, cores_grid)?;
        Ok(Self {
            asymptote: inputs.network_sim_time / inputs.mcmle_time,
            inputs,
            curve,
            reference_plateaus: PAPER_PLATEAUS.to_vec(),
            workload: None,
        })
    }
}

/// Times the three ingredients on `g`: serial simulation of the bootstrap
/// networks at the MPLE, MPLE refits on some of them, and one MCMLE fit.
pub fn measure_timing(g: &UndirectedGraph, model: &CompiledModel, cfg: &TimingConfig) -> Result<TimingReport> {
    if cfg.replicates == 0 || cfg.timed_fits == 0 {
        return Err(Error::InvalidConfig("timing needs replicates and timed_fits >= 1".into()));
    }
    let opts = LogisticOptions::default();
    let theta = mple(g, model, &opts)?.theta;

    let start = Instant::now();
    let mut kept = Vec::new();
    let mut network_edges = Vec::with_capacity(cfg.replicates);
    for b in 0..cfg.replicates {
        let (sim, _) = simulate_network(g, model, &theta, cfg.burn_in, Seed(cfg.seed).derive(b as u64))?;
        network_edges.push(sim.edge_count());
        if kept.len() < cfg.timed_fits {
            kept.push(sim);
        }
    }
    let network_sim_time = start.elapsed().as_secs_f64();

    let start = Instant::now();
    for sim in &kept {
        // Failed refits cost time too; only the duration matters here.
        let _ = mple(sim, model, &opts);
    }
    let mple_fit_time = start.elapsed().as_secs_f64() / kept.len() as f64;

    let mut mc = cfg.mcmle.clone();
    mc.sampler.seed = Seed(cfg.seed).derive(u64::MAX).0;
    let start = Instant::now();
    let fit = mcmle_fit(g, model, &mc)?;
    let mcmle_time = start.elapsed().as_secs_f64();

    let inputs = TimingInputs { network_sim_time, mple_fit_time, mcmle_time, replicates: cfg.replicates, cores: 1 };
    let mut report = TimingReport::from_inputs(inputs, &cfg.cores_grid)?;
    report.workload = Some(TimingWorkload {
        mple_theta: theta,
        mcmle_theta: fit.fit.theta,
        mcmle_rounds: fit.rounds,
        network_edges,
    });
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn inputs(x: usize) -> TimingInputs {
        TimingInputs { network_sim_time: 10.0, mple_fit_time: 1.0, mcmle_time: 100.0, replicates: 500, cores: x }
    }

    #[test]
    fn closed_form() {
        let (b, r) = timing_model(&inputs(500)).unwrap();
        assert_eq!(b, 11.0);
        assert!((r - 0.11).abs() < 1e-15);
        let (_, r) = timing_model(&inputs(usize::MAX)).unwrap();
        assert!((r - 0.1).abs() < 1e-12);
        assert!(timing_model(&inputs(0)).is_err());
    }

    #[test]
    fn curve_is_non_increasing_above_asymptote() {
        let c = timing_curve(&inputs(1), &[1, 2, 3, 4, 8, 500, 10_000]).unwrap();
        for w in c.windows(2) {
            assert!(w[1].relative_time <= w[0].relative_time);
        }
        assert!(c.iter().all(|p| p.relative_time >= 0.1));
    }
}
