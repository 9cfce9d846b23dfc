//! Network statistics and their change statistics.
//!
//! A [`Model`] is an ordered list of [`Term`]s; the order fixes coefficient
//! order everywhere. Before evaluation a model is compiled against the node
//! attributes into a [`CompiledModel`], which resolves attribute columns and
//! precomputes the geometric weight tables.
//!
//! Geometric terms (GWESP, GWD, alternating k-star) use an internal weight
//! `lambda > 1` with ratio `r = 1 - 1/lambda`. The public configuration takes a
//! decay `tau > 0` and sets `lambda = exp(tau)`; `lambda` may also be given
//! directly.

use serde::{Deserialize, Serialize};

use crate::attrs::NodeAttributes;
use crate::error::{Error, Result};
use crate::graph::UndirectedGraph;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Decay {
    /// `lambda = exp(tau)`.
    Tau(f64),
    Lambda(f64),
}

impl Decay {
    pub fn lambda(self) -> f64 {
        match self {
            Decay::Tau(t) => t.exp(),
            Decay::Lambda(l) => l,
        }
    }

    fn validate(self) -> Result<()> {
        let ok = match self {
            Decay::Tau(t) => t.is_finite() && t > 0.0,
            Decay::Lambda(l) => l.is_finite() && l > 1.0,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidTerm(format!(
                "geometric weight requires lambda > 1 (got lambda = {})",
                self.lambda()
            )))
        }
    }

    fn suffix(self) -> String {
        match self {
            Decay::Tau(t) => format!("{t}"),
            Decay::Lambda(l) => format!("lambda{l}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Term {
    Edges,
    /// Ties between nodes sharing the attribute value (homophily).
    NodeMatch(String),
    /// Sum of the endpoint values of a numeric attribute over ties.
    NodeCov(String),
    /// Edges whose endpoints have exactly `k` shared partners.
    Esp(usize),
    KStar(usize),
    Gwesp(Decay),
    AltKStar(Decay),
    Gwd(Decay),
    /// Nodes of degree exactly `j`.
    DegreeCount(usize),
}

impl Term {
    pub fn label(&self) -> String {
        match self {
            Term::Edges => "edges".into(),
            Term::NodeMatch(a) => format!("nodematch.{a}"),
            Term::NodeCov(a) => format!("nodecov.{a}"),
            Term::Esp(k) => format!("esp{k}"),
            Term::KStar(k) => format!("kstar{k}"),
            Term::Gwesp(d) => format!("gwesp.{}", d.suffix()),
            Term::AltKStar(d) => format!("altkstar.{}", d.suffix()),
            Term::Gwd(d) => format!("gwd.{}", d.suffix()),
            Term::DegreeCount(j) => format!("degree{j}"),
        }
    }

    /// True when the change statistic of a dyad depends on other dyads.
    pub fn is_dyad_dependent(&self) -> bool {
        !matches!(self, Term::Edges | Term::NodeMatch(_) | Term::NodeCov(_))
    }

    fn validate(&self) -> Result<()> {
        match self {
            Term::Esp(0) => Err(Error::InvalidTerm("esp requires k >= 1".into())),
            Term::DegreeCount(0) => Err(Error::InvalidTerm("degree requires j >= 1".into())),
            Term::KStar(k) if *k < 2 => Err(Error::InvalidTerm("kstar requires k >= 2".into())),
            Term::Gwesp(d) | Term::AltKStar(d) | Term::Gwd(d) => d.validate(),
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Model {
    pub terms: Vec<Term>,
}

impl Model {
    pub fn new(terms: Vec<Term>) -> Self {
        Self { terms }
    }

    pub fn dim(&self) -> usize {
        self.terms.len()
    }

    pub fn labels(&self) -> Vec<String> {
        self.terms.iter().map(Term::label).collect()
    }

    pub fn is_dyad_independent(&self) -> bool {
        self.terms.iter().all(|t| !t.is_dyad_dependent())
    }

    /// Resolves attribute references and precomputes weight tables for
    /// graphs with `n` nodes.
    pub fn compile(&self, attrs: &NodeAttributes, n: usize) -> Result<CompiledModel> {
        if self.terms.is_empty() {
            return Err(Error::InvalidConfig("model has no terms".into()));
        }
        let mut terms = Vec::with_capacity(self.terms.len());
        for term in &self.terms {
            term.validate()?;
            let attr_len_ok = |len: usize, name: &str| {
                if len == n {
                    Ok(())
                } else {
                    Err(Error::AttributeLength { name: name.to_string(), got: len, n })
                }
            };
            terms.push(match term {
                Term::Edges => Compiled::Edges,
                Term::NodeMatch(name) => {
                    let a = attrs.get(name)?;
                    attr_len_ok(a.values.len(), name)?;
                    Compiled::NodeMatch(a.codes())
                }
                Term::NodeCov(name) => {
                    let a = attrs.get(name)?;
                    attr_len_ok(a.values.len(), name)?;
                    Compiled::NodeCov(a.numeric()?.to_vec())
                }
                Term::Esp(k) => Compiled::Esp(*k),
                Term::KStar(k) => Compiled::KStar(Binomials::new(n, *k)),
                Term::Gwesp(d) => Compiled::Gwesp(Geometric::new(d.lambda(), n)),
                Term::AltKStar(d) => Compiled::AltKStar(Geometric::new(d.lambda(), n)),
                Term::Gwd(d) => Compiled::Gwd(Geometric::new(d.lambda(), n)),
                Term::DegreeCount(j) => Compiled::DegreeCount(*j),
            });
        }
        Ok(CompiledModel { n, labels: self.labels(), terms, model: self.clone() })
    }
}

/// Weights `lambda * (1 - r^s)` with `r = 1 - 1/lambda`. Their increments
/// `w(s+1) - w(s)` simplify to `r^s`.
#[derive(Debug, Clone)]
struct Geometric {
    lambda: f64,
    pow: Vec<f64>,
}

impl Geometric {
    fn new(lambda: f64, n: usize) -> Self {
        let r = 1.0 - 1.0 / lambda;
        let mut pow = Vec::with_capacity(n + 2);
        let mut x = 1.0;
        for _ in 0..n + 2 {
            pow.push(x);
            x *= r;
        }
        Self { lambda, pow }
    }

    #[inline]
    fn weight(&self, s: usize) -> f64 {
        self.lambda * (1.0 - self.pow[s])
    }

    #[inline]
    fn step(&self, s: usize) -> f64 {
        self.pow[s]
    }
}

/// `C(d, k)` and `C(d, k - 1)` for `d` in `0..=n`, built by Pascal's rule so
/// the values are exact while they fit in an `f64` mantissa.
#[derive(Debug, Clone)]
struct Binomials {
    choose_k: Vec<f64>,
    choose_km1: Vec<f64>,
}

impl Binomials {
    fn new(n: usize, k: usize) -> Self {
        let mut row = vec![0.0f64; k + 1];
        row[0] = 1.0;
        let mut choose_k = Vec::with_capacity(n + 1);
        let mut choose_km1 = Vec::with_capacity(n + 1);
        for _d in 0..=n {
            choose_k.push(row[k]);
            choose_km1.push(row[k - 1]);
            for m in (1..=k).rev() {
                row[m] += row[m - 1];
            }
        }
        Self { choose_k, choose_km1 }
    }
}

#[derive(Debug, Clone)]
enum Compiled {
    Edges,
    NodeMatch(Vec<u32>),
    NodeCov(Vec<f64>),
    Esp(usize),
    KStar(Binomials),
    Gwesp(Geometric),
    AltKStar(Geometric),
    Gwd(Geometric),
    DegreeCount(usize),
}

/// A model bound to a node count and attribute table, ready for evaluation.
#[derive(Debug, Clone)]
pub struct CompiledModel {
    n: usize,
    labels: Vec<String>,
    terms: Vec<Compiled>,
    model: Model,
}

impl CompiledModel {
    pub fn dim(&self) -> usize {
        self.terms.len()
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn model(&self) -> &Model {
        &self.model
    }

    fn check_graph(&self, g: &UndirectedGraph) -> Result<()> {
        if g.node_count() != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, got: g.node_count() });
        }
        Ok(())
    }

    /// The statistic vector of `g`.
    pub fn global_stats(&self, g: &UndirectedGraph) -> Result<Vec<f64>> {
        self.check_graph(g)?;
        Ok(self.global_stats_unchecked(g))
    }

    pub(crate) fn global_stats_unchecked(&self, g: &UndirectedGraph) -> Vec<f64> {
        let edges = g.to_edge_list();
        let needs_sp = self.terms.iter().any(|t| matches!(t, Compiled::Esp(_) | Compiled::Gwesp(_)));
        let sp: Vec<usize> = if needs_sp {
            edges.iter().map(|&(i, j)| g.shared_partners_unchecked(i, j)).collect()
        } else {
            Vec::new()
        };
        let degrees = g.degrees();
        self.terms
            .iter()
            .map(|t| match t {
                Compiled::Edges => edges.len() as f64,
                Compiled::NodeMatch(c) => edges.iter().filter(|&&(i, j)| c[i] == c[j]).count() as f64,
                Compiled::NodeCov(v) => edges.iter().map(|&(i, j)| v[i] + v[j]).sum(),
                Compiled::Esp(k) => sp.iter().filter(|&&s| s == *k).count() as f64,
                Compiled::KStar(b) => degrees.iter().map(|&d| b.choose_k[d]).sum(),
                Compiled::Gwesp(geo) => sp.iter().map(|&s| geo.weight(s)).sum(),
                Compiled::Gwd(geo) => gwd(geo, &degrees),
                Compiled::AltKStar(geo) => geo.lambda * (2.0 * edges.len() as f64 - gwd(geo, &degrees)),
                Compiled::DegreeCount(j) => degrees.iter().filter(|&&d| d == *j).count() as f64,
            })
            .collect()
    }

    /// Change statistics `stats(g + ij) - stats(g - ij)` for dyad `(i, j)`,
    /// independent of its current state.
    pub fn change_stats(&self, g: &UndirectedGraph, i: usize, j: usize) -> Result<Vec<f64>> {
        self.check_graph(g)?;
        for index in [i, j] {
            if index >= self.n {
                return Err(Error::NodeOutOfRange { index, n: self.n });
            }
        }
        if i == j {
            return Err(Error::SelfLoop(i));
        }
        let mut out = vec![0.0; self.dim()];
        self.change_stats_into(g, i, j, &mut out);
        Ok(out)
    }

    /// Hot-path variant writing into `out`; `i != j`, both in range.
    pub fn change_stats_into(&self, g: &UndirectedGraph, i: usize, j: usize, out: &mut [f64]) {
        let present = g.has_edge(i, j) as usize;
        // Degrees and shared-partner counts as if the dyad were empty.
        let di = g.degree(i) - present;
        let dj = g.degree(j) - present;
        for (slot, t) in out.iter_mut().zip(&self.terms) {
            *slot = match t {
                Compiled::Edges => 1.0,
                Compiled::NodeMatch(c) => (c[i] == c[j]) as u8 as f64,
                Compiled::NodeCov(v) => v[i] + v[j],
                Compiled::Esp(k) => {
                    let k = *k;
                    let mut sp = 0;
                    let mut d = 0i64;
                    for m in g.common_neighbors(i, j) {
                        sp += 1;
                        for s in [
                            g.shared_partners_unchecked(i, m) - present,
                            g.shared_partners_unchecked(j, m) - present,
                        ] {
                            d += (s + 1 == k) as i64 - (s == k) as i64;
                        }
                    }
                    (d + (sp == k) as i64) as f64
                }
                Compiled::Gwesp(geo) => {
                    let mut sp = 0;
                    let mut d = 0.0;
                    for m in g.common_neighbors(i, j) {
                        sp += 1;
                        d += geo.step(g.shared_partners_unchecked(i, m) - present);
                        d += geo.step(g.shared_partners_unchecked(j, m) - present);
                    }
                    d + geo.weight(sp)
                }
                Compiled::KStar(b) => b.choose_km1[di] + b.choose_km1[dj],
                Compiled::Gwd(geo) => geo.step(di) + geo.step(dj),
                Compiled::AltKStar(geo) => geo.lambda * (2.0 - geo.step(di) - geo.step(dj)),
                Compiled::DegreeCount(m) => {
                    let m = *m;
                    let f = |d: usize| (d + 1 == m) as i32 - (d == m) as i32;
                    (f(di) + f(dj)) as f64
                }
            };
        }
    }

    /// Test oracle: evaluates the global statistics with the dyad present and
    /// absent and subtracts.
    pub fn brute_force_change(&self, g: &UndirectedGraph, i: usize, j: usize) -> Result<Vec<f64>> {
        self.check_graph(g)?;
        g.check_pair(i, j)?;
        let mut h = g.clone();
        h.set_edge(i, j, true);
        let with = self.global_stats_unchecked(&h);
        h.set_edge(i, j, false);
        let without = self.global_stats_unchecked(&h);
        Ok(with.iter().zip(&without).map(|(a, b)| a - b).collect())
    }
}

fn gwd(geo: &Geometric, degrees: &[usize]) -> f64 {
    degrees.iter().map(|&d| geo.weight(d)).sum()
}

/// Evaluates a model on `g` without keeping the compiled form.
pub fn global_stats(g: &UndirectedGraph, attrs: &NodeAttributes, model: &Model) -> Result<Vec<f64>> {
    model.compile(attrs, g.node_count())?.global_stats(g)
}

/// Number of `k`-stars, `sum_i C(d_i, k)`.
pub fn kstar_count(g: &UndirectedGraph, k: usize) -> f64 {
    if k == 0 {
        return g.node_count() as f64;
    }
    let b = Binomials::new(g.node_count(), k);
    g.degrees().iter().map(|&d| b.choose_k[d]).sum()
}

/// Geometrically weighted degree, `lambda * sum_j (1 - r^j) D_j`.
pub fn gwd_value(g: &UndirectedGraph, lambda: f64) -> Result<f64> {
    Decay::Lambda(lambda).validate()?;
    Ok(gwd(&Geometric::new(lambda, g.node_count()), &g.degrees()))
}

/// Alternating k-star via the degree distribution: `lambda * (2 S_1 - GWD)`.
pub fn altkstar_degree_form(g: &UndirectedGraph, lambda: f64) -> Result<f64> {
    let gwd = gwd_value(g, lambda)?;
    Ok(lambda * (2.0 * g.edge_count() as f64 - gwd))
}

/// Alternating k-star by its defining sum `sum_{k=2}^{n-1} (-1/lambda)^(k-2) S_k`.
/// Suffers cancellation for large degrees; intended for small graphs.
pub fn altkstar_alternating_sum(g: &UndirectedGraph, lambda: f64) -> Result<f64> {
    Decay::Lambda(lambda).validate()?;
    let n = g.node_count();
    let mut total = 0.0;
    let mut coef = 1.0;
    for k in 2..n {
        total += coef * kstar_count(g, k);
        coef *= -1.0 / lambda;
    }
    Ok(total)
}
