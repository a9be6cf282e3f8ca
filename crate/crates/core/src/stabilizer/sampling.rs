use rand::Rng;

use super::superposition::StabSuperposition;
use super::StabilizerError;
use crate::circuit::{CircuitIR, Op};

/// Outcome of one shot: final-measurement bits in `final_measure` order and
/// the mid-circuit record bits in declaration order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ShotOutcome {
    pub outcome: Vec<bool>,
    pub records: Vec<bool>,
}

/// Run `circuit` on `psi`, drawing every measurement from its exact marginal.
pub fn sample_outcomes<R: Rng + ?Sized>(
    psi: &StabSuperposition,
    circuit: &CircuitIR,
    rng: &mut R,
) -> Result<ShotOutcome, StabilizerError> {
    if psi.num_wires() != circuit.total_wires() {
        return Err(StabilizerError::DimensionMismatch { left: psi.num_wires(), right: circuit.total_wires() });
    }
    let mut state = psi.clone();
    let mut records = vec![false; circuit.records.len()];
    for ins in &circuit.ops {
        if !ins.cond.is_empty() && !ins.cond.iter().fold(false, |acc, &r| acc ^ records[r]) {
            continue;
        }
        match &ins.op {
            Op::Clifford { gate, wires } => state.apply(*gate, wires)?,
            Op::Measure { wire, record } => {
                let m = state.measure(*wire, rng.random())?;
                records[*record] = m.outcome;
                state = m.state;
            }
            Op::T { .. } => return Err(StabilizerError::NonClifford),
        }
    }
    let mut outcome = Vec::with_capacity(circuit.final_measure.len());
    for &w in &circuit.final_measure {
        let m = state.measure(w, rng.random())?;
        outcome.push(m.outcome);
        state = m.state;
    }
    Ok(ShotOutcome { outcome, records })
}
