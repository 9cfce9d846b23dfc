//! Exact likelihood by enumerating every graph on `n <= 6` nodes.
//!
//! Used as an independent oracle: the normalizer `c(theta)`, the moments of
//! the statistics, and the exact MLE come straight from the definition
//! `P(G) = exp(theta . s(G)) / c(theta)` summed over all `2^(n(n-1)/2)` graphs.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::fit::{Estimator, FitResult};
use crate::graph::{dyad_count, dyad_from_index, UndirectedGraph};
use crate::linalg::{dot, inverse_spd, max_abs, solve_spd};
use crate::terms::CompiledModel;

pub const MAX_NODES: usize = 6;

/// The statistic distribution over all graphs on `n` nodes, with
/// multiplicities of identical statistic vectors merged.
#[derive(Debug, Clone)]
pub struct ExactEnumeration {
    labels: Vec<String>,
    support: Vec<(Vec<f64>, f64)>,
}

impl ExactEnumeration {
    pub fn new(model: &CompiledModel) -> Result<Self> {
        let n = model.node_count();
        if n > MAX_NODES {
            return Err(Error::TooLarge { n, max: MAX_NODES });
        }
        let d = dyad_count(n);
        let pairs: Vec<(usize, usize)> = (0..d).map(|k| dyad_from_index(n, k)).collect();
        let mut counts: HashMap<Vec<u64>, (Vec<f64>, f64)> = HashMap::new();
        let mut g = UndirectedGraph::new_empty(n)?;
        // Gray-code order: consecutive masks differ in one dyad.
        let mut prev_gray = 0u64;
        for step in 0..(1u64 << d) {
            let gray = step ^ (step >> 1);
            let diff = gray ^ prev_gray;
            if diff != 0 {
                let k = diff.trailing_zeros() as usize;
                g.flip(pairs[k].0, pairs[k].1);
            }
            prev_gray = gray;
            let s = model.global_stats_unchecked(&g);
            let key: Vec<u64> = s.iter().map(|v| v.to_bits()).collect();
            counts.entry(key).or_insert_with(|| (s, 0.0)).1 += 1.0;
        }
        let mut support: Vec<(Vec<f64>, f64)> = counts.into_values().collect();
        support.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(std::cmp::Ordering::Equal));
        Ok(Self { labels: model.labels().to_vec(), support })
    }

    /// Number of graphs enumerated.
    pub fn graph_count(&self) -> f64 {
        self.support.iter().map(|(_, c)| c).sum()
    }

    pub fn log_normalizer(&self, theta: &[f64]) -> f64 {
        let etas: Vec<f64> = self.support.iter().map(|(s, c)| dot(theta, s) + c.ln()).collect();
        let m = etas.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        m + etas.iter().map(|e| (e - m).exp()).sum::<f64>().ln()
    }

    /// `P_theta(G)` for a graph with statistics `stats`.
    pub fn probability(&self, theta: &[f64], stats: &[f64]) -> f64 {
        (dot(theta, stats) - self.log_normalizer(theta)).exp()
    }

    /// Exact mean and covariance of the statistics under `theta`.
    pub fn moments(&self, theta: &[f64]) -> (Vec<f64>, Vec<Vec<f64>>) {
        let q = theta.len();
        let lc = self.log_normalizer(theta);
        let mut mean = vec![0.0; q];
        let probs: Vec<f64> = self.support.iter().map(|(s, c)| (dot(theta, s) + c.ln() - lc).exp()).collect();
        for ((s, _), p) in self.support.iter().zip(&probs) {
            for k in 0..q {
                mean[k] += p * s[k];
            }
        }
        let mut cov = vec![vec![0.0; q]; q];
        for ((s, _), p) in self.support.iter().zip(&probs) {
            for a in 0..q {
                for b in 0..q {
                    cov[a][b] += p * (s[a] - mean[a]) * (s[b] - mean[b]);
                }
            }
        }
        (mean, cov)
    }

    pub fn log_likelihood(&self, theta: &[f64], obs: &[f64]) -> f64 {
        dot(theta, obs) - self.log_normalizer(theta)
    }

    /// Exact MLE for observed statistics `obs` by Newton's method on the
    /// exact moments, with step halving.
    pub fn mle(&self, obs: &[f64]) -> Result<FitResult> {
        let q = obs.len();
        let mut theta = vec![0.0; q];
        let mut ll = self.log_likelihood(&theta, obs);
        for it in 0..200 {
            let (mean, cov) = self.moments(&theta);
            let grad: Vec<f64> = obs.iter().zip(&mean).map(|(o, m)| o - m).collect();
            if max_abs(&grad) <= 1e-11 {
                let covariance = inverse_spd(&cov)
                    .ok_or_else(|| Error::DegenerateSample("exact information is singular".into()))?;
                // Newton drifts until the gradient underflows when obs sits on
                // the support boundary; the variance then explodes.
                if (0..q).any(|k| covariance[k][k] > 1e8) {
                    return Err(Error::SeparationDiverged("observed statistics on the boundary of the support".into()));
                }
                return Ok(FitResult::with_normal_ci(
                    Estimator::ExactMle,
                    self.labels.clone(),
                    theta,
                    covariance,
                    it,
                    true,
                    max_abs(&grad),
                ));
            }
            let step = solve_spd(&cov, &grad)
                .ok_or_else(|| Error::DegenerateSample("exact information is singular".into()))?;
            let mut scale = 1.0;
            loop {
                let cand: Vec<f64> = theta.iter().zip(&step).map(|(t, s)| t + scale * s).collect();
                let cand_ll = self.log_likelihood(&cand, obs);
                if cand_ll >= ll - 1e-13 * (1.0 + ll.abs()) || scale < 1e-6 {
                    theta = cand;
                    ll = cand_ll;
                    break;
                }
                scale *= 0.5;
            }
            if max_abs(&theta) > 1e3 {
                return Err(Error::SeparationDiverged("observed statistics on the boundary of the support".into()));
            }
        }
        Err(Error::NonConvergence { count: 200, unit: "Newton iterations" })
    }
}

/// Exact MLE of `model` on the observed graph `g` (at most six nodes).
pub fn exact_mle_oracle(g: &UndirectedGraph, model: &CompiledModel) -> Result<FitResult> {
    let obs = model.global_stats(g)?;
    ExactEnumeration::new(model)?.mle(&obs)
}
