use std::fs::File;
use std::io::{BufReader, Write};
use std::path::Path;

use ergm_core::bootstrap::parametric_bootstrap;
use ergm_core::diagnostics::{emit_plots, gof, GofThresholds};
use ergm_core::io::{read_attributes, read_network, read_stat_matrix_file, render_table, write_edge_list, write_stat_matrix, ModelFile};
use ergm_core::mcmle::mcmle_fit;
use ergm_core::mple::{mple, LogisticOptions};
use ergm_core::sampler::sample_chains;
use ergm_core::{
    BootstrapConfig, CompiledModel, Error, McmleConfig, NodeAttributes, SamplerConfig, UndirectedGraph,
};
use serde::Serialize;

use crate::cli::{BootstrapArgs, DiagnoseArgs, FitMcmleArgs, FitMpleArgs, NetworkArgs, SamplerArgs, SimulateArgs};
use crate::error::{CliError, CliResult};
use crate::output::Output;

/// The observed network, its compiled model and the coefficients in the
/// model file, if any.
pub struct Loaded {
    pub graph: UndirectedGraph,
    pub node_ids: Vec<String>,
    pub model: CompiledModel,
    pub file_theta: Option<Vec<f64>>,
}

fn open(path: &Path) -> CliResult<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| CliError::input(format!("{}: {e}", path.display())))
}

pub fn load_network(args: &NetworkArgs) -> CliResult<Loaded> {
    let file = ModelFile::read(&args.model)?;
    let (graph, attrs, node_ids) = match (&args.graph, args.nodes) {
        (Some(g), _) => {
            let net = read_network(g, args.attrs.as_deref())?;
            (net.graph, net.attrs, net.node_ids)
        }
        (None, Some(n)) => {
            let (ids, attrs) = match &args.attrs {
                Some(p) => read_attributes(open(p)?)?,
                None => ((0..n).map(|i| i.to_string()).collect(), NodeAttributes::new(n)),
            };
            if ids.len() != n {
                return Err(CliError::input(format!("--nodes {n} but the attribute file lists {} nodes", ids.len())));
            }
            (UndirectedGraph::new_empty(n)?, attrs, ids)
        }
        (None, None) => return Err(CliError::usage("either --graph or --nodes is required")),
    };
    let model = file.model()?.compile(&attrs, graph.node_count())?;
    Ok(Loaded { graph, node_ids, model, file_theta: file.theta })
}

fn coefficients(flag: &Option<Vec<f64>>, loaded: &Loaded) -> CliResult<Vec<f64>> {
    let theta = flag
        .clone()
        .or_else(|| loaded.file_theta.clone())
        .ok_or_else(|| CliError::usage("coefficients required: pass --theta or set `theta` in the model file"))?;
    if theta.len() != loaded.model.dim() {
        return Err(Error::DimensionMismatch { expected: loaded.model.dim(), got: theta.len() }.into());
    }
    Ok(theta)
}

fn sampler_config(args: &SamplerArgs, num_samples: usize, seed: u64) -> SamplerConfig {
    let d = SamplerConfig::default();
    SamplerConfig {
        burn_in: args.burn_in.unwrap_or(d.burn_in),
        interval: args.interval.unwrap_or(d.interval),
        num_samples,
        seed,
        retain_graphs: false,
    }
}

fn with_pool<T: Send>(cores: usize, f: impl FnOnce() -> ergm_core::Result<T> + Send) -> CliResult<T> {
    Ok(ergm_core::parallel::with_cores(cores, f)??)
}

#[derive(Serialize)]
struct SimulateConfig<'a> {
    theta: &'a [f64],
    sampler: &'a SamplerConfig,
    chains: usize,
}

pub fn simulate(args: &SimulateArgs) -> CliResult<()> {
    let loaded = load_network(&args.network)?;
    let theta = coefficients(&args.theta, &loaded)?;
    let mut cfg = sampler_config(&args.sampler, args.num_samples, args.common.seed);
    cfg.retain_graphs = args.save_networks;
    cfg.validate()?;
    let mut out = Output::new(&args.common)?;
    let s = with_pool(args.common.cores, || sample_chains(&loaded.graph, &loaded.model, &theta, &cfg, args.chains))?;
    let mut comments = out.comments();
    comments.push(("acceptance_rate".into(), s.acceptance_rate().to_string()));
    write_stat_matrix(out.create("stats.csv")?, &s.stats, Some(&s.densities), &comments)?;
    for (i, g) in s.graphs.iter().enumerate() {
        let mut f = out.create(&format!("networks/draw_{i:05}.csv"))?;
        for (k, v) in out.comments() {
            writeln!(f, "# {k}={v}")?;
        }
        write_edge_list(f, g, Some(&loaded.node_ids))?;
    }
    out.finish("simulate", &SimulateConfig { theta: &theta, sampler: &cfg, chains: args.chains })
}

pub fn fit_mple(args: &FitMpleArgs) -> CliResult<()> {
    let loaded = load_network(&args.network)?;
    let opts = LogisticOptions::default();
    let mut out = Output::new(&args.common)?;
    let fit = with_pool(args.common.cores, || mple(&loaded.graph, &loaded.model, &opts))?;
    out.json("fit.json", &fit)?;
    out.text("table.txt", &render_table(&[&fit])?)?;
    out.finish("fit-mple", &opts)
}

pub fn fit_mcmle(args: &FitMcmleArgs) -> CliResult<()> {
    let loaded = load_network(&args.network)?;
    let cfg = McmleConfig {
        sample_size: args.sample_size,
        sampler: sampler_config(&args.sampler, args.sample_size, args.common.seed),
        max_outer_rounds: args.rounds,
        chains: args.chains,
        initial: args.initial.clone(),
        ..Default::default()
    };
    cfg.validate()?;
    let mut out = Output::new(&args.common)?;
    let fit = with_pool(args.common.cores, || mcmle_fit(&loaded.graph, &loaded.model, &cfg))?;
    out.json("fit.json", &fit)?;
    out.text("table.txt", &render_table(&[&fit.fit])?)?;
    out.finish("fit-mcmle", &cfg)
}

#[derive(Serialize)]
struct BootstrapSummary<'a> {
    fit: ergm_core::FitResult,
    base_fit: &'a ergm_core::FitResult,
    replicates: usize,
    successes: usize,
    failures: &'a [ergm_core::bootstrap::ReplicateFailure],
}

pub fn bootstrap(args: &BootstrapArgs) -> CliResult<()> {
    let loaded = load_network(&args.network)?;
    let d = BootstrapConfig::default();
    let cfg = BootstrapConfig {
        replicates: args.replicates,
        sampler: SamplerConfig { burn_in: args.burn_in.unwrap_or(d.sampler.burn_in), ..d.sampler.clone() },
        ci_level: args.level,
        cores: args.common.cores,
        seed: args.common.seed,
        max_failure_fraction: args.max_failure_fraction,
        ..d
    };
    cfg.validate()?;
    let mut out = Output::new(&args.common)?;
    let res = parametric_bootstrap(&loaded.graph, &loaded.model, &cfg)?;
    let fit = res.to_fit_result();
    out.json(
        "bootstrap.json",
        &BootstrapSummary {
            fit: fit.clone(),
            base_fit: &res.base_fit,
            replicates: cfg.replicates,
            successes: res.replicate_ids.len(),
            failures: &res.failures,
        },
    )?;
    let mut w = std::io::BufWriter::new(out.create("replicates.csv")?);
    for (k, v) in out.comments() {
        writeln!(w, "# {k}={v}")?;
    }
    let mut wtr = csv::Writer::from_writer(w);
    let mut header = vec!["replicate".to_string()];
    header.extend(res.replicate_thetas.labels().iter().cloned());
    wtr.write_record(&header)?;
    for (row, id) in res.replicate_thetas.iter_rows().zip(&res.replicate_ids) {
        let mut rec = vec![id.to_string()];
        rec.extend(row.iter().map(|v| v.to_string()));
        wtr.write_record(&rec)?;
    }
    wtr.flush()?;
    drop(wtr);
    write_stat_matrix(
        out.create("replicate_stats.csv")?,
        &res.replicate_stats,
        Some(&res.replicate_densities),
        &out.comments(),
    )?;
    out.text("table.txt", &render_table(&[&res.base_fit, &fit])?)?;
    out.finish("bootstrap", &cfg)
}

#[derive(Serialize)]
struct DiagnoseConfig<'a> {
    stats: Option<String>,
    theta: Option<&'a [f64]>,
    sampler: Option<&'a SamplerConfig>,
    thresholds: &'a GofThresholds,
}

pub fn diagnose(args: &DiagnoseArgs) -> CliResult<()> {
    let loaded = load_network(&args.network)?;
    let obs = loaded.model.global_stats(&loaded.graph)?;
    let thresholds = GofThresholds { z: args.z, ..Default::default() };
    let mut out = Output::new(&args.common)?;
    let (stats, densities, theta, cfg) = match &args.stats {
        Some(p) => {
            let (stats, densities) = read_stat_matrix_file(p)?;
            if stats.labels() != loaded.model.labels() {
                return Err(CliError::input(format!(
                    "statistics columns {:?} do not match the model terms {:?}",
                    stats.labels(),
                    loaded.model.labels()
                )));
            }
            let densities = densities.ok_or_else(|| CliError::input("statistics CSV lacks a density column"))?;
            (stats, densities, None, None)
        }
        None => {
            let theta = coefficients(&args.theta, &loaded)?;
            let cfg = sampler_config(&args.sampler, args.num_samples, args.common.seed);
            cfg.validate()?;
            let s = with_pool(args.common.cores, || sample_chains(&loaded.graph, &loaded.model, &theta, &cfg, 1))?;
            (s.stats, s.densities, Some(theta), Some(cfg))
        }
    };
    let report = gof(&stats, &obs, &densities, loaded.graph.density(), &thresholds)?;
    out.json("gof.json", &report.summary())?;
    let files = emit_plots(&report, out.dir(), args.svg, &out.comments())?;
    out.register(files);
    out.finish(
        "diagnose",
        &DiagnoseConfig {
            stats: args.stats.as_ref().map(|p| p.display().to_string()),
            theta: theta.as_deref(),
            sampler: cfg.as_ref(),
            thresholds: &thresholds,
        },
    )
}
