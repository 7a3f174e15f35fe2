//! Bayesian network regression: a scalar response regressed on a weighted
//! undirected network, with node selection through a spike-and-slab prior on
//! latent node positions.
//!
//! The crate holds the data types, the distribution samplers, the Gibbs
//! sampler, convergence diagnostics, posterior summaries and the simulation
//! generators used to test everything.

pub mod diagnostics;
pub mod error;
pub mod gibbs;
pub mod network;
pub mod rng;
pub mod samplers;
pub mod simgen;
pub mod stats;
pub mod summaries;
pub mod types;

pub use diagnostics::{assess_convergence, ConvergenceReport};
pub use error::{BnrError, Result};
pub use gibbs::{run_chain, run_chains, Chain, Checkpoint, SweepConfig};
pub use rng::RngStream;
pub use types::{ChainDraws, ChainState, Hyperparameters, NetworkDataset, PosteriorDraws};
