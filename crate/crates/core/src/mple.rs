//! Maximum pseudolikelihood estimation.
//!
//! Every dyad contributes one logistic-regression row: the response is the
//! tie indicator and the covariates are the dyad's change statistics. The
//! log-pseudolikelihood `sum_r w_r [y_r eta_r - ln(1 + e^eta_r)]` is
//! maximized by Newton-Raphson. Rows are streamed: each pass regenerates them
//! block by block and reduces per-block partial sums (objective, gradient,
//! information) in block order, so memory stays `O(q^2)` per block and the
//! result is bit-identical for any thread count.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fit::{Estimator, FitResult};
use crate::graph::UndirectedGraph;
use crate::linalg::{inverse_spd, max_abs, solve_spd};
use crate::terms::CompiledModel;

/// Target number of dyads per reduction block.
pub const DEFAULT_BLOCK_DYADS: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LogisticOptions {
    /// Convergence threshold on the largest absolute gradient component.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Step halvings tried when a Newton step lowers the objective.
    pub max_halvings: usize,
    /// `||theta||_inf` beyond which the fit is declared divergent.
    pub divergence_bound: f64,
}

impl Default for LogisticOptions {
    fn default() -> Self {
        Self { tolerance: 1e-8, max_iterations: 50, max_halvings: 20, divergence_bound: 1e3 }
    }
}

/// A re-iterable, block-partitioned source of weighted logistic rows.
pub trait RowSource: Sync {
    fn dim(&self) -> usize;
    fn block_count(&self) -> usize;
    /// Calls `f(y, x, weight)` for every row in block `b`, in a fixed order.
    fn visit_block(&self, b: usize, f: &mut dyn FnMut(f64, &[f64], f64));
    fn labels(&self) -> Vec<String> {
        (1..=self.dim()).map(|k| format!("x{k}")).collect()
    }
}

/// Dyad rows of a graph under a model, generated on demand.
pub struct DyadRows<'a> {
    graph: &'a UndirectedGraph,
    model: &'a CompiledModel,
    blocks: Vec<(usize, usize)>,
}

/// One row of the pseudolikelihood design.
#[derive(Debug, Clone, PartialEq)]
pub struct DyadRow {
    pub i: usize,
    pub j: usize,
    pub y: bool,
    pub x: Vec<f64>,
}

impl<'a> DyadRows<'a> {
    pub fn new(graph: &'a UndirectedGraph, model: &'a CompiledModel) -> Result<Self> {
        Self::with_block_size(graph, model, DEFAULT_BLOCK_DYADS)
    }

    /// Blocks are runs of whole source rows `i` holding at least
    /// `block_dyads` dyads (except the last).
    pub fn with_block_size(graph: &'a UndirectedGraph, model: &'a CompiledModel, block_dyads: usize) -> Result<Self> {
        if graph.node_count() != model.node_count() {
            return Err(Error::DimensionMismatch { expected: model.node_count(), got: graph.node_count() });
        }
        let n = graph.node_count();
        let mut blocks = Vec::new();
        let (mut start, mut count) = (0, 0);
        for i in 0..n {
            count += n - 1 - i;
            if count >= block_dyads.max(1) {
                blocks.push((start, i + 1));
                start = i + 1;
                count = 0;
            }
        }
        if start < n {
            blocks.push((start, n));
        }
        Ok(Self { graph, model, blocks })
    }

    /// All rows in canonical `i < j` order.
    pub fn iter(&self) -> impl Iterator<Item = DyadRow> + '_ {
        let n = self.graph.node_count();
        (0..n).flat_map(move |i| {
            (i + 1..n).map(move |j| {
                let mut x = vec![0.0; self.model.dim()];
                self.model.change_stats_into(self.graph, i, j, &mut x);
                DyadRow { i, j, y: self.graph.has_edge(i, j), x }
            })
        })
    }
}

impl RowSource for DyadRows<'_> {
    fn dim(&self) -> usize {
        self.model.dim()
    }

    fn block_count(&self) -> usize {
        self.blocks.len()
    }

    fn visit_block(&self, b: usize, f: &mut dyn FnMut(f64, &[f64], f64)) {
        let n = self.graph.node_count();
        let (lo, hi) = self.blocks[b];
        let mut x = vec![0.0; self.model.dim()];
        for i in lo..hi {
            for j in i + 1..n {
                self.model.change_stats_into(self.graph, i, j, &mut x);
                let y = if self.graph.has_edge(i, j) { 1.0 } else { 0.0 };
                f(y, &x, 1.0);
            }
        }
    }

    fn labels(&self) -> Vec<String> {
        self.model.labels().to_vec()
    }
}

/// Materialized weighted rows, for generic logistic regression.
#[derive(Debug, Clone, Default)]
pub struct RowSet {
    dim: usize,
    labels: Option<Vec<String>>,
    y: Vec<f64>,
    x: Vec<f64>,
    w: Vec<f64>,
}

impl RowSet {
    pub fn new(dim: usize) -> Self {
        Self { dim, ..Default::default() }
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Self {
        self.labels = Some(labels);
        self
    }

    pub fn push(&mut self, y: bool, x: &[f64], weight: f64) -> Result<()> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: x.len() });
        }
        self.y.push(if y { 1.0 } else { 0.0 });
        self.x.extend_from_slice(x);
        self.w.push(weight);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }
}

const ROWSET_BLOCK: usize = 4096;

impl RowSource for RowSet {
    fn dim(&self) -> usize {
        self.dim
    }

    fn block_count(&self) -> usize {
        self.y.len().div_ceil(ROWSET_BLOCK)
    }

    fn visit_block(&self, b: usize, f: &mut dyn FnMut(f64, &[f64], f64)) {
        let lo = b * ROWSET_BLOCK;
        let hi = (lo + ROWSET_BLOCK).min(self.y.len());
        for r in lo..hi {
            f(self.y[r], &self.x[r * self.dim..(r + 1) * self.dim], self.w[r]);
        }
    }

    fn labels(&self) -> Vec<String> {
        self.labels.clone().unwrap_or_else(|| (1..=self.dim).map(|k| format!("x{k}")).collect())
    }
}

/// `(ln(1 + e^x), 1 / (1 + e^-x))` from a single exponential, without overflow.
#[inline]
fn softplus_logistic(x: f64) -> (f64, f64) {
    let e = (-x.abs()).exp();
    let prob = if x >= 0.0 { 1.0 / (1.0 + e) } else { e / (1.0 + e) };
    (x.max(0.0) + e.ln_1p(), prob)
}

/// Objective, gradient and information accumulated over rows at one `theta`.
#[derive(Debug, Clone)]
struct Pass {
    loglik: f64,
    gradient: Vec<f64>,
    /// Upper triangle of `X' W X`, row-major `q x q`.
    info: Vec<f64>,
    /// `sum w x_k^2`, the information scale for each column.
    xsq: Vec<f64>,
    weight: f64,
    ones: f64,
}

impl Pass {
    fn zero(q: usize) -> Self {
        Self { loglik: 0.0, gradient: vec![0.0; q], info: vec![0.0; q * q], xsq: vec![0.0; q], weight: 0.0, ones: 0.0 }
    }

    fn add(&mut self, other: &Pass) {
        self.loglik += other.loglik;
        self.weight += other.weight;
        self.ones += other.ones;
        for (a, b) in self.gradient.iter_mut().zip(&other.gradient) {
            *a += b;
        }
        for (a, b) in self.info.iter_mut().zip(&other.info) {
            *a += b;
        }
        for (a, b) in self.xsq.iter_mut().zip(&other.xsq) {
            *a += b;
        }
    }

    fn info_matrix(&self) -> Vec<Vec<f64>> {
        let q = self.gradient.len();
        let mut m = vec![vec![0.0; q]; q];
        for a in 0..q {
            for b in a..q {
                m[a][b] = self.info[a * q + b];
                m[b][a] = m[a][b];
            }
        }
        m
    }
}

fn evaluate<S: RowSource + ?Sized>(source: &S, theta: &[f64]) -> Pass {
    let q = source.dim();
    let partials: Vec<Pass> = (0..source.block_count())
        .into_par_iter()
        .map(|b| {
            let mut p = Pass::zero(q);
            source.visit_block(b, &mut |y, x, w| {
                let eta: f64 = theta.iter().zip(x).map(|(t, v)| t * v).sum();
                let (sp, prob) = softplus_logistic(eta);
                p.loglik += w * (y * eta - sp);
                p.weight += w;
                p.ones += w * y;
                let resid = w * (y - prob);
                let var = w * prob * (1.0 - prob);
                for a in 0..q {
                    p.gradient[a] += resid * x[a];
                    p.xsq[a] += w * x[a] * x[a];
                    let va = var * x[a];
                    for b in a..q {
                        p.info[a * q + b] += va * x[b];
                    }
                }
            });
            p
        })
        .collect();
    let mut total = Pass::zero(q);
    for p in &partials {
        total.add(p);
    }
    total
}

/// Log-pseudolikelihood and its gradient at `theta`.
pub fn log_pseudolikelihood<S: RowSource + ?Sized>(source: &S, theta: &[f64]) -> (f64, Vec<f64>) {
    let p = evaluate(source, theta);
    (p.loglik, p.gradient)
}

/// Newton-Raphson logistic regression from `theta = 0` with step halving.
/// The covariance is the inverse information `(X' W X)^-1` at the optimum.
pub fn fit_logistic<S: RowSource + ?Sized>(source: &S, opts: &LogisticOptions) -> Result<FitResult> {
    let q = source.dim();
    if q == 0 {
        return Err(Error::InvalidConfig("no covariates".into()));
    }
    let mut theta = vec![0.0; q];
    let mut pass = evaluate(source, &theta);
    if pass.weight <= 0.0 {
        return Err(Error::EmptyInput);
    }
    if pass.ones <= 0.0 || pass.ones >= pass.weight {
        return Err(Error::SeparationDiverged("the response is constant".into()));
    }
    if let Some(k) = pass.xsq.iter().position(|&v| v == 0.0) {
        return Err(Error::SeparationDiverged(format!("covariate {} is identically zero", k + 1)));
    }

    let mut iterations = 0;
    let mut converged = max_abs(&pass.gradient) <= opts.tolerance;
    while !converged && iterations < opts.max_iterations {
        let step = solve_spd(&pass.info_matrix(), &pass.gradient)
            .ok_or_else(|| Error::SeparationDiverged("information matrix is singular".into()))?;
        let mut scale = 1.0;
        let mut accepted = None;
        for _ in 0..=opts.max_halvings {
            let cand: Vec<f64> = theta.iter().zip(&step).map(|(t, s)| t + scale * s).collect();
            let cand_pass = evaluate(source, &cand);
            // Near the optimum the gain is below the rounding noise of the sum.
            let noise = 64.0 * f64::EPSILON * (pass.loglik.abs() + 1.0);
            if cand_pass.loglik >= pass.loglik - noise {
                accepted = Some((cand, cand_pass));
                break;
            }
            scale *= 0.5;
        }
        iterations += 1;
        let Some((cand, cand_pass)) = accepted else {
            // No ascent along the Newton direction: the objective is flat to
            // rounding. Stop and let the gradient check decide.
            break;
        };
        theta = cand;
        pass = cand_pass;
        if max_abs(&theta) > opts.divergence_bound || theta.iter().any(|t| !t.is_finite()) {
            return Err(Error::SeparationDiverged(format!(
                "|theta| exceeded {} (a term may perfectly predict ties)",
                opts.divergence_bound
            )));
        }
        converged = max_abs(&pass.gradient) <= opts.tolerance;
    }
    if !converged {
        return Err(Error::NonConvergence { count: iterations, unit: "Newton iterations" });
    }

    for k in 0..q {
        if pass.info[k * q + k] < 1e-7 * pass.xsq[k] {
            return Err(Error::SeparationDiverged(format!(
                "information for covariate {} vanished (separation)",
                k + 1
            )));
        }
    }
    let covariance = inverse_spd(&pass.info_matrix())
        .ok_or_else(|| Error::SeparationDiverged("information matrix is singular".into()))?;
    Ok(FitResult::with_normal_ci(
        Estimator::Mple,
        source.labels(),
        theta,
        covariance,
        iterations,
        true,
        max_abs(&pass.gradient),
    ))
}

/// MPLE of `model` on `g`, with naive Wald intervals `theta +/- 1.96 se`.
pub fn mple(g: &UndirectedGraph, model: &CompiledModel, opts: &LogisticOptions) -> Result<FitResult> {
    fit_logistic(&DyadRows::new(g, model)?, opts)
}
