//! Phase-exact stabilizer states and chain-rule sampling of their superpositions.

mod phase;
mod sampling;
mod state;
mod superposition;

pub use phase::{omega_unit, Scalar};
pub use sampling::{sample_outcomes, ShotOutcome};
pub use state::{Gate, SingleQubit, StabilizerState, MAX_WIRES};
pub use superposition::{Measured, StabSuperposition, COLLAPSE_TOL};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StabilizerError {
    #[error("wire {wire} out of range for {n} wires")]
    WireOutOfRange { wire: usize, n: usize },
    #[error("gate {gate} expects {expected} wires, got {got}")]
    Arity { gate: &'static str, expected: usize, got: usize },
    #[error("wire {0} repeated in a two-wire gate")]
    RepeatedWire(usize),
    #[error("{n} wires exceeds the supported maximum of {max}")]
    TooManyWires { n: usize, max: usize },
    #[error("dimension mismatch: {left} vs {right} wires")]
    DimensionMismatch { left: usize, right: usize },
    #[error("superposition needs at least one term")]
    Empty,
    #[error("superposition norm collapsed to {0:e}")]
    NormCollapse(f64),
    #[error("non-Clifford op reached the stabilizer sampler")]
    NonClifford,
}
