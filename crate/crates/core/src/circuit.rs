//! Circuit description: Clifford gates, mid-circuit measurements with named
//! records, parity-conditioned gates and a final measured-wire list.
//!
//! Wires `0..n` are data wires starting in `|0⟩`; wires `n..n+t·wires_per_copy`
//! hold the injected magic copies.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::stabilizer::{Gate, MAX_WIRES};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CircuitError {
    #[error("unknown op `{0}`")]
    UnknownOp(String),
    #[error("op {op} at position {pos}: expected {expected} wires, got {got}")]
    Arity { op: String, pos: usize, expected: usize, got: usize },
    #[error("op at position {pos}: wire {wire} out of range (total {total})")]
    WireOutOfRange { pos: usize, wire: usize, total: usize },
    #[error("op at position {pos}: repeated wire {wire}")]
    RepeatedWire { pos: usize, wire: usize },
    #[error("op at position {pos}: unknown record `{name}`")]
    UnknownRecord { pos: usize, name: String },
    #[error("op at position {pos}: record `{name}` is read before it is written")]
    RecordNotWritten { pos: usize, name: String },
    #[error("op at position {pos}: record `{name}` written twice")]
    RecordRewritten { pos: usize, name: String },
    #[error("op at position {pos}: measurement needs a `record`")]
    MissingRecord { pos: usize },
    #[error("op at position {pos}: {op} cannot be conditioned")]
    ConditionNotAllowed { pos: usize, op: String },
    #[error("duplicate record name `{0}`")]
    DuplicateRecord(String),
    #[error("final_measure wire {wire} out of range (total {total})")]
    FinalWire { wire: usize, total: usize },
    #[error("circuit has {0} wires, more than the supported {MAX_WIRES}")]
    TooManyWires(usize),
    #[error("non-Clifford op {0} present; run gadgetize first")]
    NonClifford(&'static str),
    #[error("malformed circuit JSON: {0}")]
    Json(String),
}

/// A single circuit operation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Op {
    Clifford { gate: Gate, wires: Vec<usize> },
    /// Only valid as input to [`gadgetize`].
    T { wire: usize, dagger: bool },
    Measure { wire: usize, record: usize },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Instruction {
    pub op: Op,
    /// Record indices whose parity gates this instruction; empty means always.
    pub cond: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CircuitIR {
    pub n: usize,
    pub t: usize,
    pub wires_per_copy: usize,
    pub records: Vec<String>,
    pub ops: Vec<Instruction>,
    pub final_measure: Vec<usize>,
}

#[derive(Serialize, Deserialize)]
struct CircuitFile {
    n: usize,
    #[serde(default)]
    t: usize,
    #[serde(default = "one", skip_serializing_if = "is_one")]
    wires_per_copy: usize,
    #[serde(default)]
    records: Vec<String>,
    gates: Vec<GateSpec>,
    #[serde(default)]
    final_measure: Vec<usize>,
}

#[derive(Serialize, Deserialize)]
struct GateSpec {
    op: String,
    wires: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    record: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    cond: Option<String>,
}

fn one() -> usize {
    1
}

fn is_one(v: &usize) -> bool {
    *v == 1
}

fn parse_gate(name: &str) -> Option<Gate> {
    Some(match name.to_ascii_uppercase().as_str() {
        "X" => Gate::X,
        "Y" => Gate::Y,
        "Z" => Gate::Z,
        "H" => Gate::H,
        "S" => Gate::S,
        "SDG" | "SDAG" => Gate::Sdg,
        "CX" | "CNOT" => Gate::CX,
        "CZ" => Gate::CZ,
        "SWAP" => Gate::Swap,
        _ => return None,
    })
}

impl CircuitIR {
    pub fn total_wires(&self) -> usize {
        self.n + self.t * self.wires_per_copy
    }

    /// First wire of magic copy `i`.
    pub fn magic_wire(&self, i: usize) -> usize {
        self.n + i * self.wires_per_copy
    }

    pub fn has_non_clifford(&self) -> bool {
        self.ops.iter().any(|ins| matches!(ins.op, Op::T { .. }))
    }

    /// Fail if any op needs gadgetizing first.
    pub fn require_clifford(&self) -> Result<(), CircuitError> {
        match self.ops.iter().find_map(|ins| match ins.op {
            Op::T { dagger, .. } => Some(if dagger { "TDG" } else { "T" }),
            _ => None,
        }) {
            Some(name) => Err(CircuitError::NonClifford(name)),
            None => Ok(()),
        }
    }

    pub fn from_json(text: &str) -> Result<Self, CircuitError> {
        let file: CircuitFile = serde_json::from_str(text).map_err(|e| CircuitError::Json(e.to_string()))?;
        Self::from_file(file)
    }

    fn from_file(file: CircuitFile) -> Result<Self, CircuitError> {
        let mut records = Vec::with_capacity(file.records.len());
        for r in file.records {
            if records.contains(&r) {
                return Err(CircuitError::DuplicateRecord(r));
            }
            records.push(r);
        }
        let total = file.n + file.t * file.wires_per_copy;
        if total > MAX_WIRES {
            return Err(CircuitError::TooManyWires(total));
        }
        let lookup = |pos: usize, name: &str| {
            records
                .iter()
                .position(|r| r == name)
                .ok_or_else(|| CircuitError::UnknownRecord { pos, name: name.to_string() })
        };

        let mut written = vec![false; records.len()];
        let mut ops = Vec::with_capacity(file.gates.len());
        for (pos, spec) in file.gates.into_iter().enumerate() {
            let upper = spec.op.to_ascii_uppercase();
            let arity = match upper.as_str() {
                "M" | "T" | "TDG" | "TDAG" => 1,
                other => parse_gate(other).ok_or_else(|| CircuitError::UnknownOp(spec.op.clone()))?.arity(),
            };
            if spec.wires.len() != arity {
                return Err(CircuitError::Arity { op: upper, pos, expected: arity, got: spec.wires.len() });
            }
            for (i, &w) in spec.wires.iter().enumerate() {
                if w >= total {
                    return Err(CircuitError::WireOutOfRange { pos, wire: w, total });
                }
                if spec.wires[..i].contains(&w) {
                    return Err(CircuitError::RepeatedWire { pos, wire: w });
                }
            }

            let mut cond = Vec::new();
            if let Some(c) = spec.cond.as_deref() {
                for name in c.split('^').map(str::trim).filter(|s| !s.is_empty()) {
                    let r = lookup(pos, name)?;
                    if !written[r] {
                        return Err(CircuitError::RecordNotWritten { pos, name: name.to_string() });
                    }
                    cond.push(r);
                }
            }

            let op = match upper.as_str() {
                "M" => {
                    if !cond.is_empty() {
                        return Err(CircuitError::ConditionNotAllowed { pos, op: upper });
                    }
                    let name = spec.record.ok_or(CircuitError::MissingRecord { pos })?;
                    let r = lookup(pos, &name)?;
                    if written[r] {
                        return Err(CircuitError::RecordRewritten { pos, name });
                    }
                    written[r] = true;
                    Op::Measure { wire: spec.wires[0], record: r }
                }
                "T" | "TDG" | "TDAG" => {
                    if !cond.is_empty() {
                        return Err(CircuitError::ConditionNotAllowed { pos, op: upper });
                    }
                    Op::T { wire: spec.wires[0], dagger: upper != "T" }
                }
                other => Op::Clifford { gate: parse_gate(other).expect("checked above"), wires: spec.wires },
            };
            ops.push(Instruction { op, cond });
        }

        for &w in &file.final_measure {
            if w >= total {
                return Err(CircuitError::FinalWire { wire: w, total });
            }
        }

        Ok(CircuitIR { n: file.n, t: file.t, wires_per_copy: file.wires_per_copy, records, ops, final_measure: file.final_measure })
    }

    pub fn to_json(&self) -> String {
        let gates = self
            .ops
            .iter()
            .map(|ins| {
                let cond = (!ins.cond.is_empty())
                    .then(|| ins.cond.iter().map(|&r| self.records[r].as_str()).collect::<Vec<_>>().join("^"));
                match &ins.op {
                    Op::Clifford { gate, wires } => GateSpec { op: gate.name().to_string(), wires: wires.clone(), record: None, cond },
                    Op::T { wire, dagger } => {
                        GateSpec { op: if *dagger { "TDG" } else { "T" }.to_string(), wires: vec![*wire], record: None, cond }
                    }
                    Op::Measure { wire, record } => {
                        GateSpec { op: "M".to_string(), wires: vec![*wire], record: Some(self.records[*record].clone()), cond }
                    }
                }
            })
            .collect();
        let file = CircuitFile {
            n: self.n,
            t: self.t,
            wires_per_copy: self.wires_per_copy,
            records: self.records.clone(),
            gates,
            final_measure: self.final_measure.clone(),
        };
        serde_json::to_string_pretty(&file).expect("circuit serialises")
    }
}

/// Replace every `T`/`TDG` by an injection gadget consuming a fresh `|H⟩` copy.
///
/// Each gadget on data wire `d` with magic wire `m` is
/// `SDG m; H m; CX d m; M m -> r; S d if r` (plus `SDG d` for `TDG`).
/// Requires one wire per copy.
pub fn gadgetize(circuit: &CircuitIR) -> Result<CircuitIR, CircuitError> {
    if circuit.wires_per_copy != 1 {
        return Err(CircuitError::Arity { op: "wires_per_copy".into(), pos: 0, expected: 1, got: circuit.wires_per_copy });
    }
    let extra = circuit.ops.iter().filter(|ins| matches!(ins.op, Op::T { .. })).count();
    let total = circuit.total_wires() + extra;
    if total > MAX_WIRES {
        return Err(CircuitError::TooManyWires(total));
    }

    let mut out = circuit.clone();
    out.t = circuit.t + extra;
    out.ops = Vec::with_capacity(circuit.ops.len() + 5 * extra);
    let mut next = circuit.total_wires();
    let mut counter = 0usize;
    let cliff = |gate: Gate, wires: Vec<usize>| Instruction { op: Op::Clifford { gate, wires }, cond: Vec::new() };

    for ins in &circuit.ops {
        let Op::T { wire: d, dagger } = ins.op else {
            out.ops.push(ins.clone());
            continue;
        };
        let m = next;
        next += 1;
        let name = loop {
            let candidate = format!("t{counter}");
            counter += 1;
            if !out.records.contains(&candidate) {
                break candidate;
            }
        };
        out.records.push(name);
        let r = out.records.len() - 1;

        out.ops.push(cliff(Gate::Sdg, vec![m]));
        out.ops.push(cliff(Gate::H, vec![m]));
        out.ops.push(cliff(Gate::CX, vec![d, m]));
        out.ops.push(Instruction { op: Op::Measure { wire: m, record: r }, cond: Vec::new() });
        out.ops.push(Instruction { op: Op::Clifford { gate: Gate::S, wires: vec![d] }, cond: vec![r] });
        if dagger {
            out.ops.push(cliff(Gate::Sdg, vec![d]));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = r#"{
        "n": 2, "t": 1, "records": ["r0", "r1"],
        "gates": [
            {"op": "h", "wires": [0]},
            {"op": "CNOT", "wires": [0, 2]},
            {"op": "M", "wires": [2], "record": "r0"},
            {"op": "S", "wires": [0], "cond": "r0"},
            {"op": "M", "wires": [1], "record": "r1"},
            {"op": "Z", "wires": [0], "cond": "r0^r1"}
        ],
        "final_measure": [0, 1]
    }"#;

    #[test]
    fn parses_and_round_trips() {
        let c = CircuitIR::from_json(SAMPLE).unwrap();
        assert_eq!(c.total_wires(), 3);
        assert_eq!(c.ops[5].cond, vec![0, 1]);
        assert_eq!(c.ops[1].op, Op::Clifford { gate: Gate::CX, wires: vec![0, 2] });
        let again = CircuitIR::from_json(&c.to_json()).unwrap();
        assert_eq!(again, c);
    }

    #[test]
    fn rejects_bad_input() {
        let bad_wire = r#"{"n":1,"gates":[{"op":"H","wires":[1]}]}"#;
        assert!(matches!(CircuitIR::from_json(bad_wire), Err(CircuitError::WireOutOfRange { .. })));
        let early = r#"{"n":1,"records":["a"],"gates":[{"op":"X","wires":[0],"cond":"a"}]}"#;
        assert!(matches!(CircuitIR::from_json(early), Err(CircuitError::RecordNotWritten { .. })));
        let arity = r#"{"n":2,"gates":[{"op":"CZ","wires":[0]}]}"#;
        assert!(matches!(CircuitIR::from_json(arity), Err(CircuitError::Arity { .. })));
        let op = r#"{"n":2,"gates":[{"op":"CCX","wires":[0,1]}]}"#;
        assert!(matches!(CircuitIR::from_json(op), Err(CircuitError::UnknownOp(_))));
        let same = r#"{"n":2,"gates":[{"op":"CX","wires":[1,1]}]}"#;
        assert!(matches!(CircuitIR::from_json(same), Err(CircuitError::RepeatedWire { .. })));
    }

    #[test]
    fn gadgetize_adds_one_copy_per_t() {
        let src = r#"{"n":2,"gates":[{"op":"H","wires":[0]},{"op":"T","wires":[0]},{"op":"TDG","wires":[1]}],"final_measure":[0,1]}"#;
        let c = CircuitIR::from_json(src).unwrap();
        assert!(c.has_non_clifford());
        let g = gadgetize(&c).unwrap();
        assert_eq!(g.t, 2);
        assert_eq!(g.records, vec!["t0", "t1"]);
        assert!(g.require_clifford().is_ok());
        assert_eq!(g.ops.len(), 1 + 5 + 6);
        assert_eq!(g.ops[3].op, Op::Clifford { gate: Gate::CX, wires: vec![0, 2] });
    }
}
