//! Monte Carlo maximum likelihood.
//!
//! With `L` networks simulated at `theta0`, the log-likelihood ratio is
//! approximated by
//! `(theta - theta0) . s_obs - ln((1/L) sum_i exp((theta - theta0) . s_i))`.
//! Its gradient is `s_obs - sum_i w_i s_i` with softmax weights
//! `w_i ~ exp((theta - theta0) . s_i)`, and its negative Hessian is the
//! weighted covariance of the sampled statistics. The optimizer runs Newton
//! on this surrogate, re-simulating at the current estimate when the
//! importance weights degenerate.

pub mod exact;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fit::{Estimator, FitResult};
use crate::graph::UndirectedGraph;
use crate::linalg::{inverse_spd, max_abs, solve_spd};
use crate::mple::{mple, LogisticOptions};
use crate::rng::Seed;
use crate::sampler::{sample_chains, SamplerConfig};
use crate::stat_matrix::StatMatrix;
use crate::terms::CompiledModel;

pub use exact::{exact_mle_oracle, ExactEnumeration};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct McmleConfig {
    /// Number of simulated networks `L` per round.
    pub sample_size: usize,
    /// Burn-in, thinning and master seed. `num_samples` is overridden by
    /// `sample_size`.
    pub sampler: SamplerConfig,
    pub max_outer_rounds: usize,
    /// Inner Newton stops once `||step||_inf` falls below this.
    pub step_tolerance: f64,
    /// Minimum `ESS / L` before the step is truncated and the sample redrawn.
    pub ess_floor: f64,
    /// A converged round whose `ESS / L` at the estimate is below this is
    /// redrawn at the estimate while rounds remain.
    pub ess_target: f64,
    /// `||theta - theta0||_inf` cap applied when the weights degenerate.
    pub trust_radius: f64,
    pub max_newton_iterations: usize,
    /// Independent chains per simulation round.
    pub chains: usize,
    /// Estimate the final covariance from a fresh sample at the estimate
    /// instead of reweighting the last round's sample.
    pub final_covariance_sample: bool,
    /// Starting point; the MPLE when absent.
    pub initial: Option<Vec<f64>>,
}

impl Default for McmleConfig {
    fn default() -> Self {
        Self {
            sample_size: 1000,
            sampler: SamplerConfig::default(),
            max_outer_rounds: 3,
            step_tolerance: 1e-6,
            ess_floor: 0.05,
            ess_target: 0.5,
            trust_radius: 0.5,
            max_newton_iterations: 50,
            chains: 1,
            final_covariance_sample: true,
            initial: None,
        }
    }
}

impl McmleConfig {
    pub fn validate(&self) -> Result<()> {
        if self.sample_size < 2 {
            return Err(Error::InvalidConfig("MCMLE sample size must be >= 2".into()));
        }
        if !(self.ess_floor > 0.0 && self.ess_floor <= 1.0) {
            return Err(Error::InvalidConfig(format!("ess_floor must lie in (0, 1], got {}", self.ess_floor)));
        }
        if !(0.0..=1.0).contains(&self.ess_target) {
            return Err(Error::InvalidConfig(format!("ess_target must lie in [0, 1], got {}", self.ess_target)));
        }
        if self.max_outer_rounds == 0 {
            return Err(Error::InvalidConfig("at least one MCMLE round is required".into()));
        }
        if !(self.trust_radius > 0.0) || !(self.step_tolerance > 0.0) {
            return Err(Error::InvalidConfig("trust_radius and step_tolerance must be positive".into()));
        }
        self.sampler.validate()
    }

    fn round_sampler(&self, stream: u64) -> SamplerConfig {
        SamplerConfig {
            num_samples: self.sample_size,
            seed: Seed(self.sampler.seed).derive(stream).0,
            retain_graphs: false,
            ..self.sampler.clone()
        }
    }
}

/// Summary of the normalized importance weights at the estimate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightSummary {
    pub min: f64,
    pub max: f64,
    pub ess: f64,
    pub ess_fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McmleFit {
    #[serde(flatten)]
    pub fit: FitResult,
    pub weights: WeightSummary,
    /// `theta0` of every round followed by the final estimate.
    pub trajectory: Vec<Vec<f64>>,
    pub rounds: usize,
    /// Monte Carlo standard errors, `se / sqrt(ESS)`.
    pub mc_std_errors: Vec<f64>,
    pub acceptance_rate: f64,
}

/// `(theta - theta0) . s_i` shifted by the observed statistics, which cancels
/// in every quantity but keeps the exponents small.
fn centered_etas(theta: &[f64], theta0: &[f64], sample: &StatMatrix, obs: &[f64]) -> Vec<f64> {
    let d: Vec<f64> = theta.iter().zip(theta0).map(|(a, b)| a - b).collect();
    sample.iter_rows().map(|s| s.iter().zip(obs).zip(&d).map(|((x, o), dk)| dk * (x - o)).sum()).collect()
}

fn log_mean_exp(etas: &[f64]) -> f64 {
    let m = etas.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    m + (etas.iter().map(|e| (e - m).exp()).sum::<f64>() / etas.len() as f64).ln()
}

fn softmax(etas: &[f64]) -> Vec<f64> {
    let m = etas.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = etas.iter().map(|x| (x - m).exp()).collect();
    let total: f64 = e.iter().sum();
    e.into_iter().map(|x| x / total).collect()
}

/// Importance-sampling estimate of `loglik(theta) - loglik(theta0)` from
/// statistics sampled at `theta0`.
pub fn approx_loglik_ratio(theta: &[f64], theta0: &[f64], sample: &StatMatrix, obs: &[f64]) -> f64 {
    -log_mean_exp(&centered_etas(theta, theta0, sample, obs))
}

/// Normalized importance weights `w_i ~ exp((theta - theta0) . s_i)`.
pub fn importance_weights(theta: &[f64], theta0: &[f64], sample: &StatMatrix) -> Vec<f64> {
    let zero = vec![0.0; sample.cols()];
    softmax(&centered_etas(theta, theta0, sample, &zero))
}

/// `(sum w)^2 / sum w^2`.
pub fn effective_sample_size(weights: &[f64]) -> f64 {
    let s: f64 = weights.iter().sum();
    let s2: f64 = weights.iter().map(|w| w * w).sum();
    s * s / s2
}

fn weighted_mean(weights: &[f64], sample: &StatMatrix) -> Vec<f64> {
    let mut mean = vec![0.0; sample.cols()];
    for (w, s) in weights.iter().zip(sample.iter_rows()) {
        for (m, x) in mean.iter_mut().zip(s) {
            *m += w * x;
        }
    }
    mean
}

/// Covariance of the sampled statistics under normalized weights.
pub fn weighted_covariance(weights: &[f64], sample: &StatMatrix) -> Vec<Vec<f64>> {
    let q = sample.cols();
    let mean = weighted_mean(weights, sample);
    let mut cov = vec![vec![0.0; q]; q];
    for (w, s) in weights.iter().zip(sample.iter_rows()) {
        for a in 0..q {
            let da = s[a] - mean[a];
            for b in a..q {
                cov[a][b] += w * da * (s[b] - mean[b]);
            }
        }
    }
    for a in 0..q {
        for b in 0..a {
            cov[a][b] = cov[b][a];
        }
    }
    cov
}

/// Approximate score `s_obs - sum_i w_i s_i`.
pub fn approx_score(theta: &[f64], theta0: &[f64], sample: &StatMatrix, obs: &[f64]) -> Vec<f64> {
    let w = importance_weights(theta, theta0, sample);
    obs.iter().zip(weighted_mean(&w, sample)).map(|(o, m)| o - m).collect()
}

fn check_sample(sample: &StatMatrix) -> Result<()> {
    let first = sample.row(0);
    if sample.iter_rows().all(|r| r == first) {
        return Err(Error::DegenerateSample("all simulated statistics are identical".into()));
    }
    Ok(())
}

fn singular(what: &str) -> Error {
    Error::DegenerateSample(format!("{what}: sampled statistics have a singular covariance"))
}

enum RoundOutcome {
    Converged(Vec<f64>),
    Moved(Vec<f64>),
}

/// Newton on the surrogate built from `sample` drawn at `theta0`.
fn optimize_round(
    theta0: &[f64],
    sample: &StatMatrix,
    obs: &[f64],
    cfg: &McmleConfig,
    iterations: &mut usize,
) -> Result<RoundOutcome> {
    let l = sample.rows() as f64;
    let mut theta = theta0.to_vec();
    let mut value = 0.0f64;
    for _ in 0..cfg.max_newton_iterations {
        *iterations += 1;
        let w = importance_weights(&theta, theta0, sample);
        let score: Vec<f64> = obs.iter().zip(weighted_mean(&w, sample)).map(|(o, m)| o - m).collect();
        let info = weighted_covariance(&w, sample);
        let step = solve_spd(&info, &score).ok_or_else(|| singular("Newton step"))?;
        let mut scale = 1.0;
        let mut cand;
        loop {
            cand = theta.iter().zip(&step).map(|(t, s)| t + scale * s).collect::<Vec<f64>>();
            let v = approx_loglik_ratio(&cand, theta0, sample, obs);
            if v >= value - 64.0 * f64::EPSILON * (value.abs() + 1.0) || scale < 1e-6 {
                value = v;
                break;
            }
            scale *= 0.5;
        }
        let moved = max_abs(&step) * scale;
        let ess = effective_sample_size(&importance_weights(&cand, theta0, sample));
        if ess / l < cfg.ess_floor {
            let disp: Vec<f64> = cand.iter().zip(theta0).map(|(c, t)| c - t).collect();
            let shrink = (cfg.trust_radius / max_abs(&disp)).min(1.0);
            return Ok(RoundOutcome::Moved(theta0.iter().zip(&disp).map(|(t, d)| t + shrink * d).collect()));
        }
        theta = cand;
        if moved < cfg.step_tolerance {
            return Ok(RoundOutcome::Converged(theta));
        }
    }
    Ok(RoundOutcome::Moved(theta))
}

/// MCMLE of `model` on `g`, started at the MPLE unless `cfg.initial` is set.
pub fn mcmle_fit(g: &UndirectedGraph, model: &CompiledModel, cfg: &McmleConfig) -> Result<McmleFit> {
    cfg.validate()?;
    let obs = model.global_stats(g)?;
    let mut theta0 = match &cfg.initial {
        Some(t) if t.len() != model.dim() => {
            return Err(Error::DimensionMismatch { expected: model.dim(), got: t.len() })
        }
        Some(t) => t.clone(),
        None => mple(g, model, &LogisticOptions::default())?.theta,
    };
    let mut trajectory = Vec::new();
    let mut iterations = 0;
    for round in 0..cfg.max_outer_rounds {
        trajectory.push(theta0.clone());
        let sim = sample_chains(g, model, &theta0, &cfg.round_sampler(round as u64), cfg.chains)?;
        check_sample(&sim.stats)?;
        match optimize_round(&theta0, &sim.stats, &obs, cfg, &mut iterations)? {
            RoundOutcome::Moved(next) => theta0 = next,
            RoundOutcome::Converged(theta) => {
                let ess = effective_sample_size(&importance_weights(&theta, &theta0, &sim.stats));
                if ess / (sim.stats.rows() as f64) < cfg.ess_target && round + 1 < cfg.max_outer_rounds {
                    theta0 = theta;
                    continue;
                }
                trajectory.push(theta.clone());
                return finish(g, model, cfg, &obs, theta, &theta0, sim, trajectory, round + 1, iterations);
            }
        }
    }
    Err(Error::NonConvergence { count: cfg.max_outer_rounds, unit: "simulation rounds" })
}

#[allow(clippy::too_many_arguments)]
fn finish(
    g: &UndirectedGraph,
    model: &CompiledModel,
    cfg: &McmleConfig,
    obs: &[f64],
    theta: Vec<f64>,
    theta0: &[f64],
    sim: crate::sampler::Sample,
    trajectory: Vec<Vec<f64>>,
    rounds: usize,
    iterations: usize,
) -> Result<McmleFit> {
    let w = importance_weights(&theta, theta0, &sim.stats);
    let ess = effective_sample_size(&w);
    let gradient: Vec<f64> = obs.iter().zip(weighted_mean(&w, &sim.stats)).map(|(o, m)| o - m).collect();
    let info = if cfg.final_covariance_sample {
        let fresh = sample_chains(g, model, &theta, &cfg.round_sampler(cfg.max_outer_rounds as u64), cfg.chains)?;
        check_sample(&fresh.stats)?;
        fresh.stats.covariance()
    } else {
        weighted_covariance(&w, &sim.stats)
    };
    let covariance = inverse_spd(&info).ok_or_else(|| singular("final covariance"))?;
    let fit = FitResult::with_normal_ci(
        Estimator::Mcmle,
        model.labels().to_vec(),
        theta,
        covariance,
        iterations,
        true,
        max_abs(&gradient),
    );
    let mc_std_errors = fit.std_errors.iter().map(|s| s / ess.sqrt()).collect();
    let l = sim.stats.rows() as f64;
    Ok(McmleFit {
        weights: WeightSummary {
            min: w.iter().cloned().fold(f64::INFINITY, f64::min),
            max: w.iter().cloned().fold(0.0, f64::max),
            ess,
            ess_fraction: ess / l,
        },
        fit,
        trajectory,
        rounds,
        mc_std_errors,
        acceptance_rate: sim.acceptance_rate(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::attrs::{AttrValues, NodeAttributes};
    use crate::terms::{Model, Term};

    fn matrix(rows: &[Vec<f64>]) -> StatMatrix {
        let q = rows[0].len();
        StatMatrix::from_rows((0..q).map(|k| format!("s{k}")).collect(), rows).unwrap()
    }

    #[test]
    fn ratio_identities() {
        let s = matrix(&[vec![3.0, 1.0], vec![5.0, 2.0], vec![4.0, 0.0]]);
        assert_eq!(approx_loglik_ratio(&[0.3, -0.2], &[0.3, -0.2], &s, &[4.0, 1.0]), 0.0);
        let c = matrix(&vec![vec![2.0, 7.0]; 4]);
        assert_eq!(approx_loglik_ratio(&[1.0, 0.5], &[-0.5, 0.2], &c, &[2.0, 7.0]), 0.0);
    }

    #[test]
    fn score_matches_finite_difference() {
        let rows: Vec<Vec<f64>> = (0..50).map(|i| vec![(i % 7) as f64, ((i * 3) % 11) as f64 * 0.5]).collect();
        let s = matrix(&rows);
        let obs = [3.5, 2.0];
        let (theta, theta0) = ([0.21, -0.13], [0.05, 0.02]);
        let score = approx_score(&theta, &theta0, &s, &obs);
        for k in 0..2 {
            let h = 1e-5;
            let mut up = theta;
            let mut dn = theta;
            up[k] += h;
            dn[k] -= h;
            let fd = (approx_loglik_ratio(&up, &theta0, &s, &obs) - approx_loglik_ratio(&dn, &theta0, &s, &obs)) / (2.0 * h);
            assert!((fd - score[k]).abs() <= 1e-6 * score[k].abs().max(1.0), "{fd} vs {}", score[k]);
        }
    }

    #[test]
    fn weights_concentrate_far_from_theta0() {
        let s = matrix(&[vec![1.0], vec![4.0], vec![2.0]]);
        let w = importance_weights(&[200.0], &[0.0], &s);
        assert!((w[1] - 1.0).abs() < 1e-12);
        assert!((effective_sample_size(&w) - 1.0).abs() < 1e-9);
        let score = approx_score(&[200.0], &[0.0], &s, &[3.0]);
        assert!((score[0] + 1.0).abs() < 1e-9);
        assert_eq!(effective_sample_size(&importance_weights(&[0.0], &[0.0], &s)), 3.0);
    }

    #[test]
    fn weighted_covariance_is_symmetric_psd() {
        let rows: Vec<Vec<f64>> = (0..30).map(|i| vec![i as f64, (i * i % 13) as f64, ((i * 5) % 4) as f64]).collect();
        let s = matrix(&rows);
        let w = importance_weights(&[0.05, -0.1, 0.2], &[0.0; 3], &s);
        let c = weighted_covariance(&w, &s);
        for a in 0..3 {
            assert!(c[a][a] >= 0.0);
            for b in 0..3 {
                assert_eq!(c[a][b], c[b][a]);
            }
        }
        assert!(inverse_spd(&c).is_some());
    }

    #[test]
    fn degenerate_sample_is_reported() {
        let g = UndirectedGraph::from_edge_list(6, &[(0, 1), (2, 3)]).unwrap();
        let model = Model::new(vec![Term::Edges]).compile(&NodeAttributes::new(6), 6).unwrap();
        let cfg = McmleConfig {
            sample_size: 20,
            sampler: SamplerConfig { burn_in: 100, interval: 10, ..Default::default() },
            initial: Some(vec![-60.0]),
            ..Default::default()
        };
        assert!(matches!(mcmle_fit(&g, &model, &cfg), Err(Error::DegenerateSample(_))));
    }

    #[test]
    fn config_validation() {
        let bad = McmleConfig { sample_size: 1, ..Default::default() };
        assert!(bad.validate().is_err());
        let bad = McmleConfig { ess_floor: 0.0, ..Default::default() };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn dyad_independent_fit_tracks_mple() {
        let n = 30;
        let g = UndirectedGraph::random(n, 0.2, 5).unwrap();
        let mut attrs = NodeAttributes::new(n);
        let groups = (0..n).map(|i| if i % 2 == 0 { "a" } else { "b" }.to_string()).collect();
        attrs.insert("g", AttrValues::Categorical(groups)).unwrap();
        let model = Model::new(vec![Term::Edges, Term::NodeMatch("g".into())]).compile(&attrs, n).unwrap();
        let m = mple(&g, &model, &LogisticOptions::default()).unwrap();
        let cfg = McmleConfig {
            sample_size: 400,
            sampler: SamplerConfig { burn_in: 5000, interval: 500, seed: 3, ..Default::default() },
            ..Default::default()
        };
        let fit = mcmle_fit(&g, &model, &cfg).unwrap();
        for k in 0..2 {
            let tol = 3.0 * fit.mc_std_errors[k] + 1e-3;
            assert!((fit.fit.theta[k] - m.theta[k]).abs() < tol, "{k}: {:?} vs {:?}", fit.fit.theta, m.theta);
        }
        assert!(fit.weights.ess_fraction > 0.05 && fit.weights.ess <= 400.0 + 1e-9);
    }
}
