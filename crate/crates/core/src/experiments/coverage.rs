//! Coverage of the three interval constructions and bias of the point
//! estimates on networks simulated at known coefficients.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{median_iqr, resolve_truth, study_networks, StudyConfig, Truth, ARM_BOOTSTRAP, ARM_MCMLE};
use crate::bootstrap::parametric_bootstrap;
use crate::error::Result;
use crate::fit::Estimator;
use crate::graph::UndirectedGraph;
use crate::mcmle::mcmle_fit;
use crate::mple::{mple, LogisticOptions};
use crate::parallel::with_cores;
use crate::rng::Seed;
use crate::terms::CompiledModel;

/// One interval of one replicate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageRow {
    pub replicate: usize,
    pub method: Estimator,
    pub term: String,
    pub estimate: f64,
    pub lower: f64,
    pub upper: f64,
    pub covered: bool,
    pub bias: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodCoverage {
    pub method: Estimator,
    /// Share of successful replicates whose interval contains the truth.
    pub coverage: Vec<f64>,
    pub successes: usize,
    pub failures: Vec<(usize, String)>,
}

/// Quartiles of `estimate - truth` per coordinate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiasSummary {
    pub method: Estimator,
    pub q1: Vec<f64>,
    pub median: Vec<f64>,
    pub q3: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageReport {
    pub truth: Truth,
    pub theta_true: Vec<f64>,
    pub terms: Vec<String>,
    pub nodes: usize,
    pub replicates: usize,
    pub nominal: f64,
    pub methods: Vec<MethodCoverage>,
    pub bias: Vec<BiasSummary>,
    #[serde(skip)]
    pub rows: Vec<CoverageRow>,
}

impl CoverageReport {
    pub fn method(&self, m: Estimator) -> Option<&MethodCoverage> {
        self.methods.iter().find(|c| c.method == m)
    }
}

type Interval = (Vec<f64>, Vec<[f64; 2]>);

struct ReplicateIntervals {
    mple: std::result::Result<Interval, String>,
    bootstrap: Option<std::result::Result<Interval, String>>,
    mcmle: std::result::Result<Interval, String>,
}

fn replicate(g: &UndirectedGraph, model: &CompiledModel, cfg: &StudyConfig, r: usize) -> ReplicateIntervals {
    let base = mple(g, model, &LogisticOptions::default());
    let bootstrap = cfg.bootstrap.as_ref().map(|b| {
        let mut b = b.clone();
        b.seed = Seed(cfg.seed).derive_path(&[ARM_BOOTSTRAP, r as u64]).0;
        b.cores = 0;
        parametric_bootstrap(g, model, &b).map(|res| (res.base_fit.theta, res.ci)).map_err(|e| e.to_string())
    });
    let mcmle = match &base {
        Ok(fit) => {
            let mut mc = cfg.mcmle.clone();
            mc.initial = Some(fit.theta.clone());
            mc.sampler.seed = Seed(cfg.seed).derive_path(&[ARM_MCMLE, r as u64, 0]).0;
            mcmle_fit(g, model, &mc).map(|f| (f.fit.theta, f.fit.ci)).map_err(|e| e.to_string())
        }
        Err(e) => Err(format!("no MPLE start: {e}")),
    };
    ReplicateIntervals { mple: base.map(|f| (f.theta, f.ci)).map_err(|e| e.to_string()), bootstrap, mcmle }
}

/// Whether `ci` contains `truth`.
pub fn covers(ci: [f64; 2], truth: f64) -> bool {
    ci[0] <= truth && truth <= ci[1]
}

/// Coverage per method and coordinate from tidy rows.
pub fn summarize_coverage(
    rows: &[CoverageRow],
    terms: &[String],
    method: Estimator,
    failures: Vec<(usize, String)>,
) -> MethodCoverage {
    let mine: Vec<&CoverageRow> = rows.iter().filter(|r| r.method == method).collect();
    let coverage = terms
        .iter()
        .map(|t| {
            let of_term: Vec<&&CoverageRow> = mine.iter().filter(|r| &r.term == t).collect();
            if of_term.is_empty() {
                f64::NAN
            } else {
                of_term.iter().filter(|r| r.covered).count() as f64 / of_term.len() as f64
            }
        })
        .collect();
    let successes = mine.len() / terms.len().max(1);
    MethodCoverage { method, coverage, successes, failures }
}

/// Simulates `m` networks at the truth and records, for each, whether the
/// naive MPLE, bootstrapped MPLE and MCMLE intervals contain it.
pub fn coverage_study(base: &UndirectedGraph, model: &CompiledModel, cfg: &StudyConfig) -> Result<CoverageReport> {
    cfg.validate()?;
    with_cores(cfg.cores, || run(base, model, cfg))?
}

fn run(base: &UndirectedGraph, model: &CompiledModel, cfg: &StudyConfig) -> Result<CoverageReport> {
    let theta_true = resolve_truth(base, model, cfg)?;
    let networks = study_networks(base, model, &theta_true, cfg)?;
    let results: Vec<ReplicateIntervals> =
        networks.par_iter().enumerate().map(|(r, g)| replicate(g, model, cfg, r)).collect();
    let terms = model.labels().to_vec();

    let mut rows = Vec::new();
    let mut failures: Vec<(Estimator, Vec<(usize, String)>)> = vec![
        (Estimator::Mple, Vec::new()),
        (Estimator::BootstrapMple, Vec::new()),
        (Estimator::Mcmle, Vec::new()),
    ];
    for (r, res) in results.iter().enumerate() {
        let arms = [
            (Estimator::Mple, Some(&res.mple)),
            (Estimator::BootstrapMple, res.bootstrap.as_ref()),
            (Estimator::Mcmle, Some(&res.mcmle)),
        ];
        for (slot, (method, outcome)) in arms.into_iter().enumerate() {
            match outcome {
                None => {}
                Some(Err(e)) => failures[slot].1.push((r, e.clone())),
                Some(Ok((theta, ci))) => {
                    for (k, t) in terms.iter().enumerate() {
                        rows.push(CoverageRow {
                            replicate: r,
                            method,
                            term: t.clone(),
                            estimate: theta[k],
                            lower: ci[k][0],
                            upper: ci[k][1],
                            covered: covers(ci[k], theta_true[k]),
                            bias: theta[k] - theta_true[k],
                        });
                    }
                }
            }
        }
    }
    let methods: Vec<MethodCoverage> = failures
        .into_iter()
        .filter(|(m, _)| *m != Estimator::BootstrapMple || cfg.bootstrap.is_some())
        .map(|(m, f)| summarize_coverage(&rows, &terms, m, f))
        .collect();
    let bias = [Estimator::Mple, Estimator::Mcmle]
        .into_iter()
        .filter_map(|m| {
            let q = terms.len();
            let mut q1 = Vec::with_capacity(q);
            let mut med = Vec::with_capacity(q);
            let mut q3 = Vec::with_capacity(q);
            for t in &terms {
                let b: Vec<f64> = rows.iter().filter(|r| r.method == m && &r.term == t).map(|r| r.bias).collect();
                if b.is_empty() {
                    return None;
                }
                let (a, md, c) = median_iqr(&b);
                q1.push(a);
                med.push(md);
                q3.push(c);
            }
            Some(BiasSummary { method: m, q1, median: med, q3 })
        })
        .collect();

    Ok(CoverageReport {
        truth: cfg.truth.clone(),
        theta_true,
        terms,
        nodes: model.node_count(),
        replicates: cfg.replicates,
        nominal: 0.95,
        methods,
        bias,
        rows,
    })
}
