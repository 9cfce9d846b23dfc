//! Exponential random graph models for undirected networks.
//!
//! The crate covers the full estimation workflow:
//!
//! * [`graph`] and [`attrs`]: the network and its nodal attributes,
//! * [`terms`]: sufficient statistics and incremental change statistics,
//! * [`sampler`]: Metropolis-Hastings simulation at fixed coefficients,
//! * [`mple`]: maximum pseudolikelihood by streamed logistic regression,
//! * [`mcmle`]: Monte Carlo maximum likelihood, plus an exact oracle for tiny graphs,
//! * [`bootstrap`]: parametric-bootstrap percentile intervals for the MPLE,
//! * [`diagnostics`]: degeneracy and goodness-of-fit checks on simulated statistics,
//! * [`experiments`]: the RMSE, coverage and timing studies,
//! * [`io`]: file formats shared by the command-line tool.

pub mod attrs;
pub mod bootstrap;
pub mod diagnostics;
pub mod error;
pub mod experiments;
pub mod fit;
pub mod graph;
pub mod io;
mod linalg;
pub mod mcmle;
pub mod mple;
pub mod parallel;
pub mod rng;
pub mod sampler;
pub mod stat_matrix;
pub mod terms;

pub use attrs::{AttrValues, NodeAttribute, NodeAttributes};
pub use bootstrap::{BootstrapConfig, BootstrapResult};
pub use error::{Error, Result};
pub use fit::{Estimator, FitResult};
pub use graph::UndirectedGraph;
pub use mcmle::{McmleConfig, McmleFit};
pub use rng::Seed;
pub use sampler::{SamplerConfig, Sample};
pub use stat_matrix::StatMatrix;
pub use terms::{CompiledModel, Decay, Model, Term};
