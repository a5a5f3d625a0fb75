//! Investor recommendation for companies with no investment history.
//!
//! Investment events are turned into tripartite tag / company / investor
//! networks, and resource-diffusion kernels (ProbS, HeatS) spread a new
//! company's tags toward investors. The crate also ships the reference
//! scorers, a BPR matrix-factorization model, Ranking Score / AUC
//! evaluation with parameter sweeps, investor preference analysis and a
//! synthetic corpus generator.

pub mod analysis;
pub mod baselines;
pub mod bprmf;
pub mod dataset;
pub mod diffusion;
pub mod error;
pub mod eval;
pub mod fixtures;
pub mod graph;
pub mod scores;
pub mod synth;

pub use error::{Error, Result};
