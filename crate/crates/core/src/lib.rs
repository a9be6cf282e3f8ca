//! Sampling simulator and rank analysis for Clifford circuits and fermionic
//! Gaussian circuits fed with noisy magic states.

pub mod analysis;
pub mod circuit;
pub mod cli;
pub mod denseoracle;
pub mod ensembles;
pub mod pipeline;
pub mod sparsify;
pub mod stabilizer;
pub mod truncation;
pub mod validate;
