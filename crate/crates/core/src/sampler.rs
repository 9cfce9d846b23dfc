//! Metropolis-Hastings simulation of networks from an ERGM at fixed `theta`.
//!
//! Each step picks a dyad uniformly among the `n(n-1)/2` unordered pairs and
//! proposes toggling it. With `delta` the change statistic of the dyad, the
//! log acceptance ratio is `theta . delta` for an addition and `-theta . delta`
//! for a removal; the toggle is accepted when `ln(u) <= log_ratio` for
//! `u ~ U(0, 1]`. A uniform draw is consumed on every step, so the random
//! stream advances identically regardless of the accept/reject path.

use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::UndirectedGraph;
use crate::linalg::dot;
use crate::rng::{Rng, Seed};
use crate::stat_matrix::StatMatrix;
use crate::terms::CompiledModel;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SamplerConfig {
    /// MH steps discarded before the first retained draw.
    pub burn_in: u64,
    /// MH steps between retained draws.
    pub interval: u64,
    pub num_samples: usize,
    pub seed: u64,
    #[serde(default)]
    pub retain_graphs: bool,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self { burn_in: 300_000, interval: 30_000, num_samples: 1000, seed: 0, retain_graphs: false }
    }
}

impl SamplerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.interval == 0 {
            return Err(Error::InvalidConfig("sampler interval must be >= 1".into()));
        }
        if self.num_samples == 0 {
            return Err(Error::InvalidConfig("sampler needs at least one sample".into()));
        }
        Ok(())
    }
}

/// State of one Markov chain: the current graph with its cached statistics.
#[derive(Debug, Clone)]
pub struct ChainState {
    graph: UndirectedGraph,
    stats: Vec<f64>,
    rng: Rng,
    delta: Vec<f64>,
    accepted: u64,
    proposed: u64,
}

impl ChainState {
    pub fn new(graph: UndirectedGraph, model: &CompiledModel, seed: Seed) -> Result<Self> {
        let stats = model.global_stats(&graph)?;
        Ok(Self { graph, delta: vec![0.0; stats.len()], stats, rng: seed.rng(), accepted: 0, proposed: 0 })
    }

    pub fn graph(&self) -> &UndirectedGraph {
        &self.graph
    }

    pub fn into_graph(self) -> UndirectedGraph {
        self.graph
    }

    /// Cached statistics of the current graph.
    pub fn stats(&self) -> &[f64] {
        &self.stats
    }

    pub fn accepted(&self) -> u64 {
        self.accepted
    }

    pub fn proposed(&self) -> u64 {
        self.proposed
    }

    /// Log of the acceptance ratio for toggling `(i, j)` in the current state.
    pub fn log_ratio(&self, model: &CompiledModel, theta: &[f64], i: usize, j: usize) -> f64 {
        let mut delta = vec![0.0; model.dim()];
        model.change_stats_into(&self.graph, i, j, &mut delta);
        let eta = dot(theta, &delta);
        if self.graph.has_edge(i, j) {
            -eta
        } else {
            eta
        }
    }

    /// One MH step; returns whether the proposal was accepted.
    pub fn step(&mut self, model: &CompiledModel, theta: &[f64]) -> bool {
        let n = self.graph.node_count();
        if n < 2 {
            return false;
        }
        let i = self.rng.random_range(0..n);
        let mut j = self.rng.random_range(0..n - 1);
        if j >= i {
            j += 1;
        }
        let u = 1.0 - self.rng.random::<f64>();
        self.proposed += 1;

        model.change_stats_into(&self.graph, i, j, &mut self.delta);
        let eta = dot(theta, &self.delta);
        let present = self.graph.has_edge(i, j);
        let log_ratio = if present { -eta } else { eta };
        if u.ln() <= log_ratio {
            self.graph.flip(i, j);
            let sign = if present { -1.0 } else { 1.0 };
            for (s, d) in self.stats.iter_mut().zip(&self.delta) {
                *s += sign * d;
            }
            self.accepted += 1;
            true
        } else {
            false
        }
    }

    pub fn run(&mut self, model: &CompiledModel, theta: &[f64], steps: u64) {
        for _ in 0..steps {
            self.step(model, theta);
        }
    }

    /// Largest absolute gap between the cached and recomputed statistics.
    pub fn drift(&self, model: &CompiledModel) -> f64 {
        let fresh = model.global_stats_unchecked(&self.graph);
        fresh.iter().zip(&self.stats).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()))
    }
}

/// Draws retained by [`sample`], in draw order.
#[derive(Debug, Clone)]
pub struct Sample {
    pub stats: StatMatrix,
    /// Edge density of each retained network.
    pub densities: Vec<f64>,
    /// Retained networks when `retain_graphs` is set, otherwise empty.
    pub graphs: Vec<UndirectedGraph>,
    pub accepted: u64,
    pub proposed: u64,
}

impl Sample {
    pub fn acceptance_rate(&self) -> f64 {
        if self.proposed == 0 {
            0.0
        } else {
            self.accepted as f64 / self.proposed as f64
        }
    }
}

fn check_inputs(g0: &UndirectedGraph, model: &CompiledModel, theta: &[f64], cfg: &SamplerConfig) -> Result<()> {
    cfg.validate()?;
    if theta.len() != model.dim() {
        return Err(Error::DimensionMismatch { expected: model.dim(), got: theta.len() });
    }
    if g0.node_count() < 2 {
        return Err(Error::InvalidConfig("simulation needs at least two nodes".into()));
    }
    Ok(())
}

fn run_chain(
    g0: &UndirectedGraph,
    model: &CompiledModel,
    theta: &[f64],
    cfg: &SamplerConfig,
    seed: Seed,
    draws: usize,
) -> Result<Sample> {
    let mut chain = ChainState::new(g0.clone(), model, seed)?;
    chain.run(model, theta, cfg.burn_in);
    let mut stats = StatMatrix::new(model.labels().to_vec());
    let mut densities = Vec::with_capacity(draws);
    let mut graphs = Vec::new();
    for _ in 0..draws {
        chain.run(model, theta, cfg.interval);
        stats.push_row(chain.stats())?;
        densities.push(chain.graph().density());
        if cfg.retain_graphs {
            graphs.push(chain.graph().clone());
        }
    }
    Ok(Sample { stats, densities, graphs, accepted: chain.accepted, proposed: chain.proposed })
}

/// Runs one chain from `g0`: `burn_in` steps, then `num_samples` draws spaced
/// `interval` steps apart.
pub fn sample(g0: &UndirectedGraph, model: &CompiledModel, theta: &[f64], cfg: &SamplerConfig) -> Result<Sample> {
    sample_chains(g0, model, theta, cfg, 1)
}

/// Splits the draws over `chains` independent chains, each with its own
/// burn-in and the stream `Seed(cfg.seed).derive(c)`. Rows are concatenated
/// in chain order, so the result depends on the chain count but not on how
/// the chains are scheduled.
pub fn sample_chains(
    g0: &UndirectedGraph,
    model: &CompiledModel,
    theta: &[f64],
    cfg: &SamplerConfig,
    chains: usize,
) -> Result<Sample> {
    check_inputs(g0, model, theta, cfg)?;
    let chains = chains.clamp(1, cfg.num_samples);
    let base = cfg.num_samples / chains;
    let extra = cfg.num_samples % chains;
    let parts: Vec<Result<Sample>> = (0..chains)
        .into_par_iter()
        .map(|c| {
            let draws = base + usize::from(c < extra);
            run_chain(g0, model, theta, cfg, Seed(cfg.seed).derive(c as u64), draws)
        })
        .collect();
    let mut out: Option<Sample> = None;
    for part in parts {
        let part = part?;
        match out.as_mut() {
            None => out = Some(part),
            Some(acc) => {
                acc.stats.extend(&part.stats)?;
                acc.densities.extend(part.densities);
                acc.graphs.extend(part.graphs);
                acc.accepted += part.accepted;
                acc.proposed += part.proposed;
            }
        }
    }
    out.ok_or(Error::EmptyInput)
}

/// Simulates a single network: `burn_in` steps from `g0` on the given stream.
pub fn simulate_network(
    g0: &UndirectedGraph,
    model: &CompiledModel,
    theta: &[f64],
    burn_in: u64,
    seed: Seed,
) -> Result<(UndirectedGraph, Vec<f64>)> {
    if theta.len() != model.dim() {
        return Err(Error::DimensionMismatch { expected: model.dim(), got: theta.len() });
    }
    let mut chain = ChainState::new(g0.clone(), model, seed)?;
    chain.run(model, theta, burn_in);
    let stats = chain.stats.clone();
    Ok((chain.graph, stats))
}
