//! File formats: edge-list and attribute CSVs, the TOML model file, sampled
//! statistics CSVs, JSON results and the plain-text estimate table.
//!
//! Floats are written with Rust's shortest round-trip formatting, so every
//! numeric field reads back bit-identically.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufReader, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::attrs::{AttrValues, NodeAttributes};
use crate::error::{Error, Result};
use crate::fit::{Estimator, FitResult, NORMAL_95};
use crate::graph::UndirectedGraph;
use crate::stat_matrix::StatMatrix;
use crate::terms::{Decay, Model, Term};

/// A network read from disk, with the external node IDs in index order.
#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    pub graph: UndirectedGraph,
    pub attrs: NodeAttributes,
    pub node_ids: Vec<String>,
}

fn reader_from(r: impl Read) -> csv::Reader<impl Read> {
    csv::ReaderBuilder::new().trim(csv::Trim::All).comment(Some(b'#')).from_reader(r)
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| std::io::Error::new(e.kind(), format!("{}: {e}", path.display())).into())
}

/// Attribute CSV with header `node,<name>,...` and one row per node. Columns
/// whose cells all parse as numbers become numeric attributes.
pub fn read_attributes(r: impl Read) -> Result<(Vec<String>, NodeAttributes)> {
    let mut rdr = reader_from(r);
    let header = rdr.headers()?.clone();
    if header.get(0) != Some("node") {
        return Err(Error::Parse("attribute CSV must start with a `node` column".into()));
    }
    let names: Vec<String> = header.iter().skip(1).map(String::from).collect();
    let mut ids = Vec::new();
    let mut cols: Vec<Vec<String>> = vec![Vec::new(); names.len()];
    let mut seen = HashMap::new();
    for rec in rdr.records() {
        let rec = rec?;
        let id = rec.get(0).unwrap_or_default().to_string();
        if seen.insert(id.clone(), ids.len()).is_some() {
            return Err(Error::Parse(format!("node `{id}` listed twice in attribute CSV")));
        }
        for (k, col) in cols.iter_mut().enumerate() {
            col.push(rec.get(k + 1).unwrap_or_default().to_string());
        }
        ids.push(id);
    }
    let mut attrs = NodeAttributes::new(ids.len());
    for (name, cells) in names.into_iter().zip(cols) {
        attrs.insert(&name, AttrValues::infer(cells))?;
    }
    Ok((ids, attrs))
}

/// Edge-list CSV with header `source,target`.
///
/// With `node_ids` (from an attribute file) endpoints are matched by ID.
/// Otherwise integer IDs are used as 0-based indices (`n` = largest + 1) and
/// any other IDs are numbered in order of first appearance.
pub fn read_edge_list(r: impl Read, node_ids: Option<&[String]>) -> Result<(Vec<String>, UndirectedGraph)> {
    let mut rdr = reader_from(r);
    let header = rdr.headers()?.clone();
    if header.len() < 2 || &header[0] != "source" || &header[1] != "target" {
        return Err(Error::Parse("edge-list CSV must have header `source,target`".into()));
    }
    let mut raw = Vec::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec?;
        match (rec.get(0), rec.get(1)) {
            (Some(a), Some(b)) if !a.is_empty() && !b.is_empty() => raw.push((a.to_string(), b.to_string())),
            _ => return Err(Error::Parse(format!("edge-list row {} needs two endpoints", line + 2))),
        }
    }
    let (ids, index): (Vec<String>, HashMap<String, usize>) = match node_ids {
        Some(ids) => (ids.to_vec(), ids.iter().enumerate().map(|(i, s)| (s.clone(), i)).collect()),
        None => {
            let ints: Option<Vec<(usize, usize)>> =
                raw.iter().map(|(a, b)| Some((a.parse().ok()?, b.parse().ok()?))).collect();
            if let Some(pairs) = ints {
                let n = pairs.iter().map(|&(a, b)| a.max(b) + 1).max().unwrap_or(0);
                let g = UndirectedGraph::from_edge_list(n, &pairs)?;
                return Ok(((0..n).map(|i| i.to_string()).collect(), g));
            }
            let mut ids = Vec::new();
            let mut index = HashMap::new();
            for (a, b) in &raw {
                for s in [a, b] {
                    if !index.contains_key(s) {
                        index.insert(s.clone(), ids.len());
                        ids.push(s.clone());
                    }
                }
            }
            (ids, index)
        }
    };
    let lookup = |s: &String| index.get(s).copied().ok_or_else(|| Error::Parse(format!("edge endpoint `{s}` is not a known node")));
    let pairs = raw.iter().map(|(a, b)| Ok((lookup(a)?, lookup(b)?))).collect::<Result<Vec<_>>>()?;
    let g = UndirectedGraph::from_edge_list(ids.len(), &pairs)?;
    Ok((ids, g))
}

/// Reads an edge list and, optionally, the attribute table that fixes the
/// node set and order.
pub fn read_network(edges: &Path, attrs: Option<&Path>) -> Result<Network> {
    match attrs {
        Some(ap) => {
            let (ids, attrs) = read_attributes(open(ap)?)?;
            let (node_ids, graph) = read_edge_list(open(edges)?, Some(&ids))?;
            Ok(Network { graph, attrs, node_ids })
        }
        None => {
            let (node_ids, graph) = read_edge_list(open(edges)?, None)?;
            let attrs = NodeAttributes::new(graph.node_count());
            Ok(Network { graph, attrs, node_ids })
        }
    }
}

pub fn write_edge_list(w: impl Write, g: &UndirectedGraph, node_ids: Option<&[String]>) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(["source", "target"])?;
    for (i, j) in g.to_edge_list() {
        match node_ids {
            Some(ids) => wtr.write_record([&ids[i], &ids[j]])?,
            None => wtr.write_record([i.to_string(), j.to_string()])?,
        }
    }
    wtr.flush()?;
    Ok(())
}

/// One `[[term]]` table of the model file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermSpec {
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub attr: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    /// `tau`, with `lambda = exp(tau)`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub decay: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
}

/// The TOML model file: terms in coefficient order and optional coefficients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    #[serde(rename = "term")]
    pub terms: Vec<TermSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta: Option<Vec<f64>>,
}

impl TermSpec {
    pub fn to_term(&self) -> Result<Term> {
        let need_attr = || self.attr.clone().ok_or_else(|| Error::InvalidTerm(format!("`{}` needs `attr`", self.kind)));
        let need_k = || self.k.ok_or_else(|| Error::InvalidTerm(format!("`{}` needs `k`", self.kind)));
        let decay = || match (self.decay, self.lambda) {
            (Some(t), None) => Ok(Decay::Tau(t)),
            (None, Some(l)) => Ok(Decay::Lambda(l)),
            _ => Err(Error::InvalidTerm(format!("`{}` needs exactly one of `decay` or `lambda`", self.kind))),
        };
        Ok(match self.kind.to_ascii_lowercase().as_str() {
            "edges" => Term::Edges,
            "nodematch" => Term::NodeMatch(need_attr()?),
            "nodecov" => Term::NodeCov(need_attr()?),
            "esp" => Term::Esp(need_k()?),
            "kstar" => Term::KStar(need_k()?),
            "degree" => Term::DegreeCount(need_k()?),
            "gwesp" => Term::Gwesp(decay()?),
            "altkstar" => Term::AltKStar(decay()?),
            "gwd" => Term::Gwd(decay()?),
            other => return Err(Error::InvalidTerm(format!("unknown term kind `{other}`"))),
        })
    }

    pub fn from_term(term: &Term) -> Self {
        let mut spec = TermSpec { kind: String::new(), attr: None, k: None, decay: None, lambda: None };
        let set_decay = |s: &mut TermSpec, d: &Decay| match *d {
            Decay::Tau(t) => s.decay = Some(t),
            Decay::Lambda(l) => s.lambda = Some(l),
        };
        match term {
            Term::Edges => spec.kind = "edges".into(),
            Term::NodeMatch(a) => (spec.kind, spec.attr) = ("nodematch".into(), Some(a.clone())),
            Term::NodeCov(a) => (spec.kind, spec.attr) = ("nodecov".into(), Some(a.clone())),
            Term::Esp(k) => (spec.kind, spec.k) = ("esp".into(), Some(*k)),
            Term::KStar(k) => (spec.kind, spec.k) = ("kstar".into(), Some(*k)),
            Term::DegreeCount(k) => (spec.kind, spec.k) = ("degree".into(), Some(*k)),
            Term::Gwesp(d) => {
                spec.kind = "gwesp".into();
                set_decay(&mut spec, d);
            }
            Term::AltKStar(d) => {
                spec.kind = "altkstar".into();
                set_decay(&mut spec, d);
            }
            Term::Gwd(d) => {
                spec.kind = "gwd".into();
                set_decay(&mut spec, d);
            }
        }
        spec
    }
}

impl ModelFile {
    pub fn parse(text: &str) -> Result<Self> {
        Ok(toml::from_str(text)?)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let mut text = String::new();
        open(path)?.read_to_string(&mut text)?;
        Self::parse(&text)
    }

    pub fn from_model(model: &Model, theta: Option<Vec<f64>>) -> Self {
        Self { terms: model.terms.iter().map(TermSpec::from_term).collect(), theta }
    }

    pub fn model(&self) -> Result<Model> {
        if self.terms.is_empty() {
            return Err(Error::InvalidConfig("model file lists no terms".into()));
        }
        let model = Model::new(self.terms.iter().map(TermSpec::to_term).collect::<Result<_>>()?);
        if let Some(t) = &self.theta {
            if t.len() != model.dim() {
                return Err(Error::DimensionMismatch { expected: model.dim(), got: t.len() });
            }
        }
        Ok(model)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("model file serializes")
    }
}

/// Writes `draw,<labels>[,density]`, preceded by `# key=value` comment lines.
pub fn write_stat_matrix(
    w: impl Write,
    stats: &StatMatrix,
    densities: Option<&[f64]>,
    comments: &[(String, String)],
) -> Result<()> {
    let mut w = std::io::BufWriter::new(w);
    for (k, v) in comments {
        writeln!(w, "# {k}={v}")?;
    }
    let mut wtr = csv::Writer::from_writer(w);
    let mut header = vec!["draw".to_string()];
    header.extend(stats.labels().iter().cloned());
    if densities.is_some() {
        header.push("density".into());
    }
    wtr.write_record(&header)?;
    for (i, row) in stats.iter_rows().enumerate() {
        let mut rec = vec![i.to_string()];
        rec.extend(row.iter().map(|v| v.to_string()));
        if let Some(d) = densities {
            rec.push(d[i].to_string());
        }
        wtr.write_record(&rec)?;
    }
    wtr.flush()?;
    Ok(())
}

/// Reads a statistics CSV written by [`write_stat_matrix`]. A trailing
/// `density` column is split off.
pub fn read_stat_matrix(r: impl Read) -> Result<(StatMatrix, Option<Vec<f64>>)> {
    let mut rdr = reader_from(r);
    let header = rdr.headers()?.clone();
    if header.get(0) != Some("draw") {
        return Err(Error::Parse("statistics CSV must start with a `draw` column".into()));
    }
    let has_density = header.iter().last() == Some("density") && header.len() > 2;
    let ncols = header.len() - 1 - usize::from(has_density);
    let labels: Vec<String> = header.iter().skip(1).take(ncols).map(String::from).collect();
    let mut stats = StatMatrix::new(labels);
    let mut dens = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        if rec.len() != header.len() {
            return Err(Error::Parse(format!("row has {} fields, header has {}", rec.len(), header.len())));
        }
        let vals = rec
            .iter()
            .skip(1)
            .map(|c| c.parse::<f64>().map_err(|_| Error::Parse(format!("not a number: `{c}`"))))
            .collect::<Result<Vec<f64>>>()?;
        stats.push_row(&vals[..ncols])?;
        if has_density {
            dens.push(vals[ncols]);
        }
    }
    Ok((stats, has_density.then_some(dens)))
}

pub fn read_stat_matrix_file(path: &Path) -> Result<(StatMatrix, Option<Vec<f64>>)> {
    read_stat_matrix(open(path)?)
}

/// Pretty JSON with a trailing newline.
pub fn to_json_string<T: Serialize + ?Sized>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    std::fs::write(path, to_json_string(value)?)?;
    Ok(())
}

/// Significant when the interval excludes zero or `|estimate / se| > 1.96`.
pub fn is_significant(estimate: f64, se: f64, ci: [f64; 2]) -> bool {
    if estimate == 0.0 {
        return false;
    }
    let excludes_zero = ci[0] > 0.0 || ci[1] < 0.0;
    let wald = se > 0.0 && (estimate / se).abs() > NORMAL_95;
    excludes_zero || wald
}

/// Estimates side by side: `Estimate` and `St. Error` for likelihood-type
/// fits, `Lower Bound` and `Upper Bound` for the bootstrapped MPLE. A `*`
/// marks significant coefficients.
pub fn render_table(fits: &[&FitResult]) -> Result<String> {
    let first = fits.first().ok_or(Error::EmptyInput)?;
    if let Some(bad) = fits.iter().find(|f| f.terms != first.terms) {
        return Err(Error::InvalidConfig(format!(
            "fits have different terms: {:?} vs {:?}",
            first.terms, bad.terms
        )));
    }
    let mut head1 = vec![String::new()];
    let mut head2 = vec!["Term".to_string()];
    let mut rows: Vec<Vec<String>> = first.terms.iter().map(|t| vec![t.clone()]).collect();
    for fit in fits {
        let bootstrap = fit.estimator == Estimator::BootstrapMple;
        head1.push(fit.estimator.display_name().to_string());
        head1.push(String::new());
        if bootstrap {
            head2.extend(["Lower Bound".to_string(), "Upper Bound".to_string()]);
        } else {
            head2.extend(["Estimate".to_string(), "St. Error".to_string()]);
        }
        for (k, row) in rows.iter_mut().enumerate() {
            // Percentile intervals carry no Wald ratio; only the interval counts.
            let se = if bootstrap { 0.0 } else { fit.std_errors[k] };
            let star = if is_significant(fit.theta[k], se, fit.ci[k]) { "*" } else { "" };
            if bootstrap {
                row.push(format!("{:.4}", fit.ci[k][0]));
                row.push(format!("{:.4}{star}", fit.ci[k][1]));
            } else {
                row.push(format!("{:.4}{star}", fit.theta[k]));
                row.push(format!("{:.4}", fit.std_errors[k]));
            }
        }
    }
    let all: Vec<&Vec<String>> = std::iter::once(&head1).chain(std::iter::once(&head2)).chain(rows.iter()).collect();
    let widths: Vec<usize> = (0..head2.len()).map(|c| all.iter().map(|r| r[c].chars().count()).max().unwrap_or(0)).collect();
    let mut out = String::new();
    for (r, row) in all.iter().enumerate() {
        let cells: Vec<String> = row
            .iter()
            .enumerate()
            .map(|(c, s)| if c == 0 { format!("{s:<w$}", w = widths[c]) } else { format!("{s:>w$}", w = widths[c]) })
            .collect();
        out.push_str(cells.join("  ").trim_end());
        out.push('\n');
        if r == 1 {
            let total = widths.iter().sum::<usize>() + 2 * (widths.len() - 1);
            out.push_str(&"-".repeat(total));
            out.push('\n');
        }
    }
    out.push_str("* significant: 0 outside the interval or |estimate / se| > 1.96\n");
    Ok(out)
}
