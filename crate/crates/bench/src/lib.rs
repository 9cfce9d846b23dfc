//! Shared fixtures for the benchmarks.

use ergm_core::experiments::{alternating_groups, synthetic_network};
use ergm_core::{CompiledModel, Decay, Model, Seed, Term, UndirectedGraph};

/// Edges, two-group homophily and GWESP, the model used throughout the studies.
pub fn study_model(n: usize) -> CompiledModel {
    let attrs = alternating_groups(n, "group", 2).expect("valid group count");
    Model::new(vec![Term::Edges, Term::NodeMatch("group".into()), Term::Gwesp(Decay::Tau(0.25))])
        .compile(&attrs, n)
        .expect("model compiles")
}

/// A network drawn from [`study_model`] at coefficients giving a sparse,
/// clustered graph.
pub fn study_network(n: usize, seed: u64) -> (UndirectedGraph, CompiledModel) {
    let model = study_model(n);
    let theta = if n >= 200 { [-5.0, 1.0, 0.8] } else { [-3.0, 1.0, 0.5] };
    let sweeps = 20 * (n * (n - 1) / 2) as u64;
    let g = synthetic_network(&model, &theta, sweeps, Seed(seed)).expect("simulation succeeds");
    (g, model)
}
