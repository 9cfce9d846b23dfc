//! Relative efficiency of MCMLE and MPLE as the MCMLE sample size grows.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{log_relative_rmse, resolve_truth, rmse, sample_sd, spearman, study_networks, StudyConfig, Truth, ARM_MCMLE};
use crate::error::Result;
use crate::graph::UndirectedGraph;
use crate::mcmle::mcmle_fit;
use crate::mple::{mple, LogisticOptions};
use crate::parallel::with_cores;
use crate::rng::Seed;
use crate::terms::CompiledModel;

/// RMSE comparison at one MCMLE sample size, over the replicates where both
/// estimators succeeded.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RmsePoint {
    pub sample_size: usize,
    pub paired_replicates: usize,
    pub mcmle_failures: usize,
    pub mcmle_rmse: Option<Vec<f64>>,
    pub mple_rmse: Option<Vec<f64>>,
    pub log_relative_rmse: Option<Vec<f64>>,
    /// Standard deviations of the estimates; absent below two replicates.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mcmle_sd: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mple_sd: Option<Vec<f64>>,
}

/// One estimate of the tidy output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RmseRow {
    pub replicate: usize,
    pub method: String,
    pub sample_size: Option<usize>,
    pub term: String,
    pub estimate: f64,
    pub error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RmseReport {
    pub truth: Truth,
    pub theta_true: Vec<f64>,
    pub terms: Vec<String>,
    pub nodes: usize,
    pub replicates: usize,
    pub mple_failures: usize,
    pub points: Vec<RmsePoint>,
    /// Per coordinate: Spearman correlation of the log ratio with `L`.
    pub spearman: Vec<Option<f64>>,
    /// Per coordinate: positive log ratio at the smallest `L` and negative at
    /// the largest.
    pub positive_to_negative: Vec<bool>,
    #[serde(skip)]
    pub rows: Vec<RmseRow>,
}

struct ReplicateFits {
    mple: Option<Vec<f64>>,
    mcmle: Vec<Option<Vec<f64>>>,
}

fn fit_replicate(g: &UndirectedGraph, model: &CompiledModel, cfg: &StudyConfig, r: usize) -> ReplicateFits {
    let Ok(base) = mple(g, model, &LogisticOptions::default()) else {
        return ReplicateFits { mple: None, mcmle: vec![None; cfg.mcmle_sample_grid.len()] };
    };
    let mcmle = cfg
        .mcmle_sample_grid
        .iter()
        .enumerate()
        .map(|(k, &l)| {
            let mut mc = cfg.mcmle.clone();
            mc.sample_size = l;
            mc.initial = Some(base.theta.clone());
            mc.sampler.seed = Seed(cfg.seed).derive_path(&[ARM_MCMLE, r as u64, k as u64]).0;
            mcmle_fit(g, model, &mc).ok().map(|f| f.fit.theta)
        })
        .collect();
    ReplicateFits { mple: Some(base.theta), mcmle }
}

/// Simulates `m` networks at the true coefficients, fits the MPLE once and
/// the MCMLE at every grid size on each, and compares RMSEs per size.
pub fn rmse_study(base: &UndirectedGraph, model: &CompiledModel, cfg: &StudyConfig) -> Result<RmseReport> {
    cfg.validate()?;
    with_cores(cfg.cores, || run(base, model, cfg))?
}

fn run(base: &UndirectedGraph, model: &CompiledModel, cfg: &StudyConfig) -> Result<RmseReport> {
    let theta_true = resolve_truth(base, model, cfg)?;
    let networks = study_networks(base, model, &theta_true, cfg)?;
    let fits: Vec<ReplicateFits> =
        networks.par_iter().enumerate().map(|(r, g)| fit_replicate(g, model, cfg, r)).collect();
    let terms = model.labels().to_vec();

    let mut rows = Vec::new();
    for (r, f) in fits.iter().enumerate() {
        let mut push = |method: &str, l: Option<usize>, theta: &[f64]| {
            for (k, t) in terms.iter().enumerate() {
                rows.push(RmseRow {
                    replicate: r,
                    method: method.into(),
                    sample_size: l,
                    term: t.clone(),
                    estimate: theta[k],
                    error: theta[k] - theta_true[k],
                });
            }
        };
        if let Some(m) = &f.mple {
            push("MPLE", None, m);
        }
        for (k, est) in f.mcmle.iter().enumerate() {
            if let Some(t) = est {
                push("MCMLE", Some(cfg.mcmle_sample_grid[k]), t);
            }
        }
    }

    let q = terms.len();
    let mut points = Vec::new();
    for (k, &l) in cfg.mcmle_sample_grid.iter().enumerate() {
        let pairs: Vec<(&Vec<f64>, &Vec<f64>)> =
            fits.iter().filter_map(|f| Some((f.mcmle[k].as_ref()?, f.mple.as_ref()?))).collect();
        let mc: Vec<Vec<f64>> = pairs.iter().map(|p| p.0.clone()).collect();
        let mp: Vec<Vec<f64>> = pairs.iter().map(|p| p.1.clone()).collect();
        let (mcmle_rmse, mple_rmse) = if pairs.is_empty() {
            (None, None)
        } else {
            (Some(rmse(&theta_true, &mc)?), Some(rmse(&theta_true, &mp)?))
        };
        let ratio = match (&mcmle_rmse, &mple_rmse) {
            (Some(a), Some(b)) => log_relative_rmse(a, b).ok(),
            _ => None,
        };
        let sd = |est: &[Vec<f64>]| {
            (est.len() >= 2).then(|| (0..q).map(|c| sample_sd(&est.iter().map(|e| e[c]).collect::<Vec<_>>())).collect())
        };
        points.push(RmsePoint {
            sample_size: l,
            paired_replicates: pairs.len(),
            mcmle_failures: fits.iter().filter(|f| f.mple.is_some() && f.mcmle[k].is_none()).count(),
            mcmle_sd: sd(&mc),
            mple_sd: sd(&mp),
            mcmle_rmse,
            mple_rmse,
            log_relative_rmse: ratio,
        });
    }

    let mut spearman_rho = Vec::with_capacity(q);
    let mut positive_to_negative = Vec::with_capacity(q);
    for c in 0..q {
        let (ls, lr): (Vec<f64>, Vec<f64>) = points
            .iter()
            .filter_map(|p| Some((p.sample_size as f64, p.log_relative_rmse.as_ref()?[c])))
            .unzip();
        spearman_rho.push(spearman(&ls, &lr));
        positive_to_negative.push(lr.len() >= 2 && lr[0] > 0.0 && lr[lr.len() - 1] < 0.0);
    }

    Ok(RmseReport {
        truth: cfg.truth.clone(),
        theta_true,
        terms,
        nodes: model.node_count(),
        replicates: cfg.replicates,
        mple_failures: fits.iter().filter(|f| f.mple.is_none()).count(),
        points,
        spearman: spearman_rho,
        positive_to_negative,
        rows,
    })
}
