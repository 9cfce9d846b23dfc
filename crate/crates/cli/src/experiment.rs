use std::fmt::Write as _;

use ergm_core::experiments::{
    alternating_groups, coverage_study, measure_timing, rmse_study, synthetic_network, write_rows, StudyConfig,
    TimingConfig, TimingReport, Truth,
};
use ergm_core::io::{read_network, TermSpec};
use ergm_core::{BootstrapConfig, Estimator, McmleConfig, Model, SamplerConfig, Seed, UndirectedGraph};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::cli::{ExperimentArgs, StudyKind};
use crate::error::{CliError, CliResult};
use crate::output::Output;

/// Study configuration file. Keys left out keep the built-in defaults of the
/// chosen study and scale.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentFile {
    /// Size of the synthetic base network when no `--graph` is given.
    pub nodes: usize,
    /// Levels of the alternating `group` attribute of the synthetic network.
    pub groups: usize,
    #[serde(rename = "term")]
    pub terms: Vec<TermSpec>,
    /// Fixed true coefficients.
    pub theta: Option<Vec<f64>>,
    /// Fit this estimator to the base network and use it as the truth.
    pub truth_estimator: Option<Estimator>,
    pub replicates: usize,
    pub network_burn_in: u64,
    pub sample_grid: Vec<usize>,
    pub mcmle: McmleConfig,
    pub bootstrap: Option<BootstrapConfig>,
    pub timing: TimingConfig,
}

/// Sweeps of the MH chain on `n` nodes.
fn sweeps(n: usize, k: u64) -> u64 {
    k * (n * (n - 1) / 2) as u64
}

pub fn defaults(kind: StudyKind, full_scale: bool) -> ExperimentFile {
    let terms = vec![
        TermSpec { kind: "edges".into(), attr: None, k: None, decay: None, lambda: None },
        TermSpec { kind: "nodematch".into(), attr: Some("group".into()), k: None, decay: None, lambda: None },
        TermSpec { kind: "gwesp".into(), attr: None, k: None, decay: Some(0.25), lambda: None },
    ];
    let chain = |burn_in, interval| McmleConfig {
        sampler: SamplerConfig { burn_in, interval, ..Default::default() },
        ..Default::default()
    };
    let mut f = ExperimentFile {
        nodes: 40,
        groups: 2,
        terms,
        theta: Some(vec![-3.0, 1.0, 0.5]),
        truth_estimator: None,
        replicates: 200,
        network_burn_in: 100_000,
        sample_grid: vec![25, 100, 500, 2000],
        mcmle: chain(20_000, 1000),
        bootstrap: None,
        timing: TimingConfig::default(),
    };
    match kind {
        StudyKind::Rmse => {
            f.nodes = 50;
            f.replicates = if full_scale { 500 } else { 100 };
            if full_scale {
                f.sample_grid = vec![25, 50, 100, 250, 500, 1000, 2500, 5000, 10_000];
            }
        }
        StudyKind::Coverage => {
            f.replicates = if full_scale { 1000 } else { 200 };
            f.bootstrap = Some(BootstrapConfig {
                replicates: if full_scale { 500 } else { 200 },
                sampler: SamplerConfig { burn_in: 20_000, ..Default::default() },
                ..Default::default()
            });
        }
        StudyKind::Timing => {
            f.nodes = 500;
            f.theta = Some(vec![-5.0, 1.0, 0.8]);
            f.network_burn_in = sweeps(500, 40);
            let spacing = sweeps(500, 4);
            f.timing = TimingConfig { replicates: 500, burn_in: spacing, mcmle: chain(spacing, spacing), ..Default::default() };
        }
    }
    f
}

fn merge(base: &mut Value, over: Value) {
    match (base, over) {
        (Value::Object(b), Value::Object(o)) => {
            for (k, v) in o {
                match b.get_mut(&k) {
                    Some(slot) if slot.is_object() && v.is_object() => merge(slot, v),
                    _ => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (b, o) => *b = o,
    }
}

fn resolve(args: &ExperimentArgs) -> CliResult<ExperimentFile> {
    let mut value = serde_json::to_value(defaults(args.kind, args.full_scale)).map_err(ergm_core::Error::from)?;
    if let Some(path) = &args.config {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
        let user: toml::Value = toml::from_str(&text).map_err(ergm_core::Error::from)?;
        merge(&mut value, serde_json::to_value(user).map_err(ergm_core::Error::from)?);
    }
    let mut f: ExperimentFile =
        serde_json::from_value(value).map_err(|e| CliError::input(format!("study configuration: {e}")))?;
    if let Some(m) = args.replicates {
        f.replicates = m;
    }
    Ok(f)
}

fn model_of(f: &ExperimentFile) -> CliResult<Model> {
    Ok(Model::new(f.terms.iter().map(TermSpec::to_term).collect::<ergm_core::Result<_>>()?))
}

fn truth_of(f: &ExperimentFile) -> CliResult<Truth> {
    match (&f.theta, f.truth_estimator) {
        (_, Some(estimator)) => Ok(Truth::Fitted { estimator }),
        (Some(theta), None) => Ok(Truth::Fixed { theta: theta.clone() }),
        (None, None) => Err(CliError::input("study needs `theta` or `truth_estimator`")),
    }
}

#[derive(Serialize)]
struct ResolvedStudy<'a> {
    kind: &'static str,
    full_scale: bool,
    file: &'a ExperimentFile,
    graph: Option<String>,
}

pub fn run(args: &ExperimentArgs) -> CliResult<()> {
    let f = resolve(args)?;
    let model = model_of(&f)?;
    let (base, attrs) = match &args.graph {
        Some(g) => {
            let net = read_network(g, args.attrs.as_deref())?;
            (net.graph, net.attrs)
        }
        None => (UndirectedGraph::new_empty(f.nodes)?, alternating_groups(f.nodes, "group", f.groups)?),
    };
    let compiled = model.compile(&attrs, base.node_count())?;
    let mut out = Output::new(&args.common)?;
    let comments = out.comments();
    let kind = match args.kind {
        StudyKind::Rmse => {
            let report = rmse_study(&base, &compiled, &study_config(&f, &model, args)?)?;
            out.json("rmse.json", &report)?;
            write_rows(out.create("rmse_rows.csv")?, &report.rows, &comments)?;
            if args.svg {
                out.svg("rmse.svg", &rmse_svg(&report))?;
            }
            "rmse"
        }
        StudyKind::Coverage => {
            let report = coverage_study(&base, &compiled, &study_config(&f, &model, args)?)?;
            out.json("coverage.json", &report)?;
            write_rows(out.create("coverage_rows.csv")?, &report.rows, &comments)?;
            if args.svg {
                out.svg("coverage.svg", &coverage_svg(&report))?;
            }
            "coverage"
        }
        StudyKind::Timing => {
            let g = match &args.graph {
                Some(_) => base,
                None => {
                    let theta = f.theta.clone().ok_or_else(|| CliError::input("synthetic timing network needs `theta`"))?;
                    synthetic_network(&compiled, &theta, f.network_burn_in, Seed(args.common.seed).derive(0))?
                }
            };
            let cfg = TimingConfig { seed: args.common.seed, ..f.timing.clone() };
            let report = ergm_core::parallel::with_cores(args.common.cores, || measure_timing(&g, &compiled, &cfg))??;
            out.json("timing_workload.json", &report.workload)?;
            out.json("timing.json", &report)?;
            if args.svg {
                out.svg("timing.svg", &timing_svg(&report))?;
            }
            "timing"
        }
    };
    out.finish(
        &format!("experiment {kind}"),
        &ResolvedStudy {
            kind,
            full_scale: args.full_scale,
            file: &f,
            graph: args.graph.as_ref().map(|p| p.display().to_string()),
        },
    )
}

fn study_config(f: &ExperimentFile, model: &Model, args: &ExperimentArgs) -> CliResult<StudyConfig> {
    let cfg = StudyConfig {
        model: model.clone(),
        truth: truth_of(f)?,
        replicates: f.replicates,
        network_burn_in: f.network_burn_in,
        mcmle_sample_grid: f.sample_grid.clone(),
        mcmle: f.mcmle.clone(),
        bootstrap: f.bootstrap.clone(),
        seed: args.common.seed,
        cores: args.common.cores,
    };
    cfg.validate()?;
    Ok(cfg)
}

const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

struct Frame {
    w: f64,
    h: f64,
    pad: f64,
    x: (f64, f64),
    y: (f64, f64),
}

impl Frame {
    fn px(&self, x: f64) -> f64 {
        self.pad + (self.w - 2.0 * self.pad) * (x - self.x.0) / (self.x.1 - self.x.0).max(1e-12)
    }

    fn py(&self, y: f64) -> f64 {
        self.h - self.pad - (self.h - 2.0 * self.pad) * (y - self.y.0) / (self.y.1 - self.y.0).max(1e-12)
    }

    fn open(&self, s: &mut String, title: &str) {
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{}" height="{}" font-family="sans-serif" font-size="11">"#,
            self.w, self.h
        );
        let _ = writeln!(s, r#"<text x="{}" y="16">{title}</text>"#, self.pad);
        let _ = writeln!(
            s,
            r#"<rect x="{p}" y="{p}" width="{}" height="{}" fill="none" stroke="black"/>"#,
            self.w - 2.0 * self.pad,
            self.h - 2.0 * self.pad,
            p = self.pad
        );
    }

    fn hline(&self, s: &mut String, y: f64, dash: bool, label: &str) {
        let dash = if dash { r#" stroke-dasharray="5,4""# } else { "" };
        let _ = writeln!(
            s,
            r#"<line x1="{:.1}" x2="{:.1}" y1="{y:.1}" y2="{y:.1}" stroke="gray"{dash}/><text x="{:.1}" y="{:.1}">{label}</text>"#,
            self.pad,
            self.w - self.pad,
            self.w - self.pad + 4.0,
            y + 4.0,
            y = self.py(y)
        );
    }

    fn polyline(&self, s: &mut String, pts: &[(f64, f64)], color: &str) {
        let p: Vec<String> = pts.iter().map(|(x, y)| format!("{:.1},{:.1}", self.px(*x), self.py(*y))).collect();
        let _ = writeln!(s, r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#, p.join(" "));
    }

    fn legend(&self, s: &mut String, labels: &[String]) {
        for (i, l) in labels.iter().enumerate() {
            let _ = writeln!(
                s,
                r#"<text x="{:.1}" y="{:.1}" fill="{}">{l}</text>"#,
                self.pad + 6.0,
                self.pad + 14.0 * (i + 1) as f64,
                PALETTE[i % PALETTE.len()]
            );
        }
    }
}

fn bounds(values: impl Iterator<Item = f64>, include: f64) -> (f64, f64) {
    let (lo, hi) = values.fold((include, include), |(a, b), v| (a.min(v), b.max(v)));
    let m = 0.05 * (hi - lo).max(1e-9);
    (lo - m, hi + m)
}

fn rmse_svg(r: &ergm_core::experiments::RmseReport) -> String {
    let pts: Vec<(f64, &Vec<f64>)> = r
        .points
        .iter()
        .filter_map(|p| p.log_relative_rmse.as_ref().map(|v| ((p.sample_size as f64).log10(), v)))
        .collect();
    let xs = pts.iter().map(|p| p.0);
    let frame = Frame {
        w: 520.0,
        h: 340.0,
        pad: 40.0,
        x: bounds(xs, pts.first().map(|p| p.0).unwrap_or(0.0)),
        y: bounds(pts.iter().flat_map(|p| p.1.iter().copied()), 0.0),
    };
    let mut s = String::new();
    frame.open(&mut s, "log relative RMSE (MCMLE / MPLE) against log10 L");
    frame.hline(&mut s, 0.0, true, "0");
    for k in 0..r.terms.len() {
        let line: Vec<(f64, f64)> = pts.iter().map(|(x, v)| (*x, v[k])).collect();
        frame.polyline(&mut s, &line, PALETTE[k % PALETTE.len()]);
    }
    frame.legend(&mut s, &r.terms);
    s.push_str("</svg>\n");
    s
}

fn coverage_svg(r: &ergm_core::experiments::CoverageReport) -> String {
    let frame = Frame { w: 560.0, h: 340.0, pad: 40.0, x: (0.0, r.terms.len() as f64), y: (0.0, 1.0) };
    let mut s = String::new();
    frame.open(&mut s, "interval coverage by term and method");
    let groups = r.methods.len().max(1) as f64;
    for (k, _) in r.terms.iter().enumerate() {
        for (m, method) in r.methods.iter().enumerate() {
            let x0 = frame.px(k as f64 + 0.1 + 0.8 * m as f64 / groups);
            let x1 = frame.px(k as f64 + 0.1 + 0.8 * (m + 1) as f64 / groups);
            let top = frame.py(method.coverage[k]);
            let _ = writeln!(
                s,
                r#"<rect x="{x0:.1}" y="{top:.1}" width="{:.1}" height="{:.1}" fill="{}"/>"#,
                x1 - x0 - 2.0,
                frame.py(0.0) - top,
                PALETTE[m % PALETTE.len()]
            );
        }
    }
    frame.hline(&mut s, r.nominal, true, &format!("{}", r.nominal));
    let names: Vec<String> = r.methods.iter().map(|m| m.method.display_name().to_string()).collect();
    frame.legend(&mut s, &names);
    for (k, t) in r.terms.iter().enumerate() {
        let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}">{t}</text>"#, frame.px(k as f64 + 0.1), frame.h - frame.pad + 14.0);
    }
    s.push_str("</svg>\n");
    s
}

fn timing_svg(r: &TimingReport) -> String {
    let pts: Vec<(f64, f64)> = r.curve.iter().map(|p| ((p.cores as f64).log10(), p.relative_time)).collect();
    let frame = Frame {
        w: 520.0,
        h: 340.0,
        pad: 40.0,
        x: bounds(pts.iter().map(|p| p.0), 0.0),
        y: bounds(pts.iter().map(|p| p.1).chain(r.reference_plateaus.iter().copied()), 0.0),
    };
    let mut s = String::new();
    frame.open(&mut s, "relative computing time against log10 cores");
    frame.hline(&mut s, 1.0, false, "1");
    for p in &r.reference_plateaus {
        frame.hline(&mut s, *p, true, &format!("{p}"));
    }
    frame.polyline(&mut s, &pts, PALETTE[0]);
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn merge_overrides_nested_keys_only() {
        let mut base = serde_json::json!({"a": 1, "m": {"x": 1, "y": 2}, "v": [1, 2]});
        merge(&mut base, serde_json::json!({"m": {"y": 5}, "v": [9]}));
        assert_eq!(base, serde_json::json!({"a": 1, "m": {"x": 1, "y": 5}, "v": [9]}));
    }

    #[test]
    fn defaults_round_trip_and_scale() {
        for kind in [StudyKind::Rmse, StudyKind::Coverage, StudyKind::Timing] {
            let f = defaults(kind, false);
            let v = serde_json::to_value(&f).unwrap();
            let back: ExperimentFile = serde_json::from_value(v).unwrap();
            assert_eq!(back.replicates, f.replicates);
            assert!(model_of(&f).is_ok());
        }
        assert_eq!(defaults(StudyKind::Coverage, true).replicates, 1000);
        assert_eq!(defaults(StudyKind::Coverage, true).bootstrap.unwrap().replicates, 500);
        assert_eq!(*defaults(StudyKind::Rmse, true).sample_grid.last().unwrap(), 10_000);
    }
}
