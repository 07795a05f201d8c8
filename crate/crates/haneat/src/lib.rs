//! NEAT with per-node evolvable activation functions.
//!
//! The engine evolves feedforward networks whose hidden nodes each carry
//! their own activation gene drawn from a small closed catalog (step, relu,
//! sigmoid, gaussian). Alongside the usual NEAT operators there is an
//! activation mutation that redraws one hidden node's function per genome
//! per generation, renumbering the node and its incident connections so
//! speciation shields the change while it is refined.
//!
//! The [`experiment`] module wraps the engine in a cross-validation harness
//! that reproduces homogeneous-vs-heterogeneous comparisons on regression
//! and classification datasets.

pub mod activation;
pub mod config;
pub mod data;
pub mod error;
pub mod evolution;
pub mod experiment;
pub mod genome;
pub mod innovation;
pub mod network;
pub mod speciation;
mod util;

pub use activation::{hidden_catalog, ActivationKind};
pub use error::{Error, Result};
pub use evolution::{run, run_homogeneous, run_with_catalog, EvolutionConfig, RunMetrics};
pub use genome::{Genome, Innovation, NodeId};
pub use network::Phenotype;
