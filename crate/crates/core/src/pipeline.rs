//! End-to-end sampler: draw noisy magic inputs, truncate, sparsify the magic
//! block, and run the Clifford circuit on the resulting superposition.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::circuit::{CircuitError, CircuitIR};
use crate::ensembles::{Ensemble, EnsembleError, EntryKind, FreeState, MagicForm, NoiseCase};
use crate::sparsify::{self, SparsifyError, SubspaceZ2};
use crate::stabilizer::{sample_outcomes, SingleQubit, StabSuperposition, StabilizerError, StabilizerState};
use crate::truncation::{truncation_threshold, TruncationError, TruncationPlan};

/// Seed used when none is given.
pub const DEFAULT_SEED: u64 = 0x5eed_2024;

/// Consecutive collapsed shots tolerated before giving up.
const MAX_COLLAPSE_RETRIES: usize = 1000;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("sampling supports qubit-dephasing only, got {0}")]
    UnsupportedCase(NoiseCase),
    #[error("δ = {0} outside (0, 1]")]
    BadDelta(f64),
    #[error("circuit declares {0} wires per copy, qubit inputs need 1")]
    WiresPerCopy(usize),
    #[error("shot {shot}: {retries} consecutive collapsed branches")]
    Collapse { shot: u64, retries: usize },
    #[error(transparent)]
    Circuit(#[from] CircuitError),
    #[error(transparent)]
    Ensemble(#[from] EnsembleError),
    #[error(transparent)]
    Truncation(#[from] TruncationError),
    #[error(transparent)]
    Sparsify(#[from] SparsifyError),
    #[error(transparent)]
    Stabilizer(#[from] StabilizerError),
}

/// The error budget, split as `δ₁ = δ/2`, `δ₂ = δ²/4` by default.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ErrorSplit {
    pub delta1: f64,
    pub delta2: f64,
}

impl ErrorSplit {
    pub fn from_delta(delta: f64) -> Result<Self, PipelineError> {
        if !(delta > 0.0 && delta <= 1.0) {
            return Err(PipelineError::BadDelta(delta));
        }
        Ok(ErrorSplit { delta1: delta / 2.0, delta2: delta * delta / 4.0 })
    }
}

/// `t` ensemble indices drawn with at most `plan.k` magic entries.
#[derive(Clone, Debug, PartialEq)]
pub struct Draw {
    pub picks: Vec<usize>,
    pub m: usize,
    /// Draws discarded for exceeding `k`.
    pub rejected: usize,
}

/// Draw `t` entries i.i.d., redrawing the whole batch while more than `k` are magic.
pub fn draw_input<R: Rng + ?Sized>(ensemble: &Ensemble, plan: &TruncationPlan, rng: &mut R) -> Draw {
    let mut rejected = 0;
    loop {
        let picks: Vec<usize> = (0..plan.t).map(|_| ensemble.select(rng.random())).collect();
        let m = picks.iter().filter(|&&i| ensemble.entries[i].is_magic()).count();
        if plan.accepts(m as u64) {
            return Draw { picks, m, rejected };
        }
        rejected += 1;
    }
}

/// An input superposition plus what it took to build it.
#[derive(Clone, Debug)]
pub struct Assembled {
    pub state: StabSuperposition,
    pub sparsified: bool,
    pub fidelity: f64,
}

fn as_qubit(s: &FreeState) -> Result<SingleQubit, SparsifyError> {
    match s {
        FreeState::Qubit(q) => Ok(*q),
        _ => Err(SparsifyError::NotQubit),
    }
}

/// Build `|0ⁿ⟩ ⊗ (drawn copies)`, expanding the magic copies exactly when
/// `m ≤ m₀` and through a random subspace otherwise.
pub fn assemble<R: Rng + ?Sized>(
    n: usize,
    ensemble: &Ensemble,
    draw: &Draw,
    delta2: f64,
    rng: &mut R,
) -> Result<Assembled, PipelineError> {
    let mut base = vec![SingleQubit::Zero; n + draw.picks.len()];
    let mut magic_slots = Vec::with_capacity(draw.m);
    let mut forms: Vec<MagicForm> = Vec::with_capacity(draw.m);
    for (i, &pick) in draw.picks.iter().enumerate() {
        match &ensemble.entries[pick].kind {
            EntryKind::Resourceless(s) => base[n + i] = as_qubit(s)?,
            EntryKind::Magic(f) => {
                magic_slots.push(n + i);
                forms.push(f.clone());
            }
        }
    }
    let m = forms.len();
    let exact = match forms.first() {
        None => true,
        Some(f) => sparsify::m0_threshold(f.nu, delta2).is_none_or(|m0| m as u64 <= m0),
    };
    let (subspace, fidelity, sparsified) = if exact {
        (SubspaceZ2::full(m), 1.0, false)
    } else {
        let r = sparsify::find_subspace(m, forms[0].nu, delta2, rng);
        (r.subspace, r.fidelity, !r.full_space)
    };
    let expansion = sparsify::expand_superposition(&subspace, &forms)?;
    let coeff = Complex64::new(expansion.coefficient, 0.0);
    let mut terms = Vec::with_capacity(expansion.chi());
    for i in 0..expansion.chi() {
        let mut parts = base.clone();
        for (slot, s) in magic_slots.iter().zip(expansion.term(i, &forms)) {
            parts[*slot] = as_qubit(s)?;
        }
        terms.push((coeff, StabilizerState::product(&parts)?));
    }
    Ok(Assembled { state: StabSuperposition::new(terms)?, sparsified, fidelity })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SampleTrace {
    pub shot: u64,
    /// Entry label drawn for each copy.
    pub kinds: Vec<String>,
    pub m: usize,
    pub resample_count: usize,
    pub collapse_count: usize,
    pub sparsified: bool,
    pub chi: usize,
    pub outcome: String,
    pub records: String,
}

fn bits(v: &[bool]) -> String {
    v.iter().map(|&b| if b { '1' } else { '0' }).collect()
}

/// Immutable per-run context shared by all shots.
#[derive(Clone, Debug)]
pub struct Sampler {
    pub circuit: CircuitIR,
    pub ensemble: Ensemble,
    pub plan: TruncationPlan,
    pub split: ErrorSplit,
}

impl Sampler {
    pub fn new(circuit: CircuitIR, case: NoiseCase, p: f64, split: ErrorSplit) -> Result<Self, PipelineError> {
        if case != NoiseCase::QubitDephasing {
            return Err(PipelineError::UnsupportedCase(case));
        }
        if circuit.wires_per_copy != 1 {
            return Err(PipelineError::WiresPerCopy(circuit.wires_per_copy));
        }
        circuit.require_clifford()?;
        let ensemble = case.ensemble(p)?;
        let plan = if circuit.t == 0 {
            TruncationPlan { t: 0, p_magic: ensemble.p_magic(), delta1: split.delta1, k: 0 }
        } else {
            truncation_threshold(circuit.t as u64, ensemble.p_magic().clamp(0.0, 1.0), split.delta1)?
        };
        Ok(Sampler { circuit, ensemble, plan, split })
    }

    /// Random stream for `shot`: the run seed selects the key, the shot the stream.
    pub fn rng_for(seed: u64, shot: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(shot);
        rng
    }

    /// One shot. A collapsed branch discards the whole sample and redraws.
    pub fn shot(&self, seed: u64, shot: u64) -> Result<SampleTrace, PipelineError> {
        let mut rng = Self::rng_for(seed, shot);
        let mut resamples = 0;
        for collapses in 0..=MAX_COLLAPSE_RETRIES {
            let draw = draw_input(&self.ensemble, &self.plan, &mut rng);
            resamples += draw.rejected;
            let built = assemble(self.circuit.n, &self.ensemble, &draw, self.split.delta2, &mut rng)?;
            match sample_outcomes(&built.state, &self.circuit, &mut rng) {
                Ok(out) => {
                    return Ok(SampleTrace {
                        shot,
                        kinds: draw.picks.iter().map(|&i| self.ensemble.entries[i].label.clone()).collect(),
                        m: draw.m,
                        resample_count: resamples,
                        collapse_count: collapses,
                        sparsified: built.sparsified,
                        chi: built.state.chi(),
                        outcome: bits(&out.outcome),
                        records: bits(&out.records),
                    })
                }
                Err(StabilizerError::NormCollapse(_)) => continue,
                Err(e) => return Err(e.into()),
            }
        }
        Err(PipelineError::Collapse { shot, retries: MAX_COLLAPSE_RETRIES })
    }

    /// Shots `0..shots` in order, computed on the current rayon pool.
    pub fn run(&self, shots: u64, seed: u64) -> Result<Vec<SampleTrace>, PipelineError> {
        (0..shots).into_par_iter().map(|s| self.shot(seed, s)).collect()
    }
}

/// Convenience wrapper: build the sampler and run on a pool of `threads` workers
/// (`None` uses the global pool).
pub fn run(
    circuit: CircuitIR,
    case: NoiseCase,
    p: f64,
    delta: f64,
    shots: u64,
    seed: u64,
    threads: Option<usize>,
) -> Result<Vec<SampleTrace>, PipelineError> {
    let sampler = Sampler::new(circuit, case, p, ErrorSplit::from_delta(delta)?)?;
    match threads {
        None => sampler.run(shots, seed),
        Some(k) => {
            let pool = rayon::ThreadPoolBuilder::new().num_threads(k.max(1)).build().expect("thread pool");
            pool.install(|| sampler.run(shots, seed))
        }
    }
}

/// Empirical distribution over final bitstrings, indexed with bit `i` for the `i`-th measured wire.
pub fn histogram(traces: &[SampleTrace], width: usize) -> Vec<f64> {
    let mut h = vec![0.0; 1 << width];
    for tr in traces {
        let idx = tr.outcome.bytes().enumerate().fold(0usize, |acc, (i, b)| acc | usize::from(b == b'1') << i);
        h[idx] += 1.0;
    }
    let total = traces.len().max(1) as f64;
    h.iter_mut().for_each(|x| *x /= total);
    h
}
