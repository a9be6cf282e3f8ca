//! Random-subspace sparsification of an `m`-fold product of magic states.
//!
//! For a subspace `L ⊂ Z₂^m` of dimension `l`,
//! `|L⟩ = (2^l Z(L))^{-1/2} Σ_{x∈L} |ψ₁^{x₁}⟩⋯|ψ_m^{x_m}⟩` with
//! `Z(L) = Σ_{x∈L} (2ν²−1)^{|x|}` and `|⟨Ψ|L⟩|² = 2^l ν^{2m} / Z(L)`.

use num_complex::Complex64;
use rand::Rng;
use thiserror::Error;

use crate::denseoracle::{self, Ket};
use crate::ensembles::{FreeState, MagicForm};
use crate::stabilizer::{StabSuperposition, StabilizerError, StabilizerState};

/// Per-call failure probability targeted by the retry budget.
const FAILURE_TARGET: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SparsifyError {
    #[error("ambient dimension {0} exceeds 64")]
    TooWide(usize),
    #[error("rows have rank {rank}, expected {expected}")]
    RankDeficient { rank: usize, expected: usize },
    #[error("forms have different ν ({0} vs {1})")]
    MixedNu(f64, f64),
    #[error("subspace lives in Z₂^{subspace} but {forms} forms were given")]
    LengthMismatch { subspace: usize, forms: usize },
    #[error("form branch is not a single-qubit stabilizer state")]
    NotQubit,
    #[error(transparent)]
    Stabilizer(#[from] StabilizerError),
}

/// A linear subspace of `Z₂^m` held as a reduced row-echelon basis.
///
/// Row `i` is a bitmask over coordinates; pivots are the lowest set bits,
/// strictly increasing, and each pivot column is clear in every other row.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SubspaceZ2 {
    m: usize,
    basis: Vec<u64>,
}

fn coord_mask(m: usize) -> u64 {
    if m == 64 {
        u64::MAX
    } else {
        (1u64 << m) - 1
    }
}

impl SubspaceZ2 {
    /// Span of `rows`, which must be linearly independent.
    pub fn new(m: usize, rows: &[u64]) -> Result<Self, SparsifyError> {
        if m > 64 {
            return Err(SparsifyError::TooWide(m));
        }
        let reduced = rref(rows.iter().map(|r| r & coord_mask(m)).collect());
        if reduced.len() != rows.len() {
            return Err(SparsifyError::RankDeficient { rank: reduced.len(), expected: rows.len() });
        }
        Ok(SubspaceZ2 { m, basis: reduced })
    }

    /// `{0}`.
    pub fn trivial(m: usize) -> Self {
        SubspaceZ2 { m, basis: Vec::new() }
    }

    /// `Z₂^m`.
    pub fn full(m: usize) -> Self {
        SubspaceZ2 { m, basis: (0..m).map(|i| 1u64 << i).collect() }
    }

    pub fn ambient(&self) -> usize {
        self.m
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn basis(&self) -> &[u64] {
        &self.basis
    }

    pub fn contains(&self, mut x: u64) -> bool {
        for &b in &self.basis {
            if x & b & b.wrapping_neg() != 0 {
                x ^= b;
            }
        }
        x == 0
    }

    /// All `2^l` elements in Gray-code order, starting at 0.
    pub fn elements(&self) -> Vec<u64> {
        let mut out = Vec::with_capacity(1 << self.dim());
        let mut x = 0u64;
        out.push(x);
        for i in 1u64..(1 << self.dim()) {
            x ^= self.basis[i.trailing_zeros() as usize];
            out.push(x);
        }
        out
    }
}

fn rref(mut rows: Vec<u64>) -> Vec<u64> {
    let mut out: Vec<u64> = Vec::with_capacity(rows.len());
    for r in rows.iter_mut() {
        for &b in &out {
            if *r & b & b.wrapping_neg() != 0 {
                *r ^= b;
            }
        }
        if *r == 0 {
            continue;
        }
        let pivot = *r & r.wrapping_neg();
        for b in out.iter_mut() {
            if *b & pivot != 0 {
                *b ^= *r;
            }
        }
        out.push(*r);
    }
    out.sort_by_key(|b| b.trailing_zeros());
    out
}

/// `Z(L) = Σ_{x∈L} (2ν²−1)^{|x|}` by Gray-code enumeration.
pub fn zeta(l: &SubspaceZ2, nu: f64) -> f64 {
    let r = 2.0 * nu * nu - 1.0;
    let powers: Vec<f64> = (0..=l.m as i32).map(|h| r.powi(h)).collect();
    let mut x = 0u64;
    let mut z = 1.0;
    for i in 1u64..(1 << l.dim()) {
        x ^= l.basis[i.trailing_zeros() as usize];
        z += powers[x.count_ones() as usize];
    }
    z
}

fn log2_nu2m(m: usize, nu: f64) -> f64 {
    2.0 * m as f64 * nu.log2()
}

/// The `l` with `2 ≤ 2^l ν^{2m} δ₂ < 4`, or `None` when `2^m ≤ 4ν^{−2m}/δ₂`
/// (exact expansion is no larger, so sparsification is skipped).
pub fn choose_rank_dim(m: usize, nu: f64, delta2: f64) -> Option<usize> {
    let a = log2_nu2m(m, nu) + delta2.log2();
    if m as f64 <= 2.0 - a + 1e-12 {
        return None;
    }
    let l = (1.0 - a - 1e-12).ceil().max(0.0) as usize;
    (l < m).then_some(l)
}

/// Largest `m₀` with `2^{m₀} ≤ 4ν^{−2m₀}/δ₂`; `None` stands for `+∞` (`ν ≤ 1/√2`).
pub fn m0_threshold(nu: f64, delta2: f64) -> Option<u64> {
    let growth = (2.0 * nu * nu).ln();
    if growth <= 1e-12 {
        return None;
    }
    Some(((4.0 / delta2).ln() / growth + 1e-9).floor().max(0.0) as u64)
}

/// A dimension-`l` subspace: `l` uniform random rows, redrawn until independent.
pub fn random_subspace<R: Rng + ?Sized>(m: usize, l: usize, rng: &mut R) -> SubspaceZ2 {
    assert!(l <= m && m <= 64, "need l ≤ m ≤ 64");
    if l == m {
        return SubspaceZ2::full(m);
    }
    loop {
        let rows: Vec<u64> = (0..l).map(|_| rng.random::<u64>() & coord_mask(m)).collect();
        let reduced = rref(rows);
        if reduced.len() == l {
            return SubspaceZ2 { m, basis: reduced };
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SparsifyResult {
    pub subspace: SubspaceZ2,
    pub nu: f64,
    pub z: f64,
    pub fidelity: f64,
    /// Number of draws made (0 when skipped).
    pub attempts: usize,
    /// True when the search was skipped or exhausted and the full space is used.
    pub full_space: bool,
}

impl SparsifyResult {
    pub fn rank(&self) -> u64 {
        1u64 << self.subspace.dim()
    }

    fn full(m: usize, nu: f64, attempts: usize) -> Self {
        let subspace = SubspaceZ2::full(m);
        let z = zeta(&subspace, nu);
        let fidelity = fidelity_of(&subspace, nu, z);
        SparsifyResult { subspace, nu, z, fidelity, attempts, full_space: true }
    }
}

fn fidelity_of(l: &SubspaceZ2, nu: f64, z: f64) -> f64 {
    (l.dim() as f64 + log2_nu2m(l.m, nu)).exp2() / z
}

/// Maximum number of draws in [`find_subspace`].
pub fn retry_budget(delta2: f64) -> usize {
    ((1.0 / FAILURE_TARGET).ln() * (2.0 + delta2) / delta2).ceil() as usize
}

/// Draw subspaces until `Z ≤ (1 + 2^l ν^{2m})(1 + δ₂/2)`, which guarantees
/// fidelity at least `1 − δ₂`. Falls back to the full space.
pub fn find_subspace<R: Rng + ?Sized>(m: usize, nu: f64, delta2: f64, rng: &mut R) -> SparsifyResult {
    let Some(l) = choose_rank_dim(m, nu, delta2) else {
        return SparsifyResult::full(m, nu, 0);
    };
    let scale = (l as f64 + log2_nu2m(m, nu)).exp2();
    let limit = (1.0 + scale) * (1.0 + delta2 / 2.0);
    let budget = retry_budget(delta2);
    for attempt in 1..=budget {
        let subspace = random_subspace(m, l, rng);
        let z = zeta(&subspace, nu);
        if z <= limit {
            return SparsifyResult { fidelity: scale / z, subspace, nu, z, attempts: attempt, full_space: false };
        }
    }
    SparsifyResult::full(m, nu, budget)
}

/// `|L⟩` as `coefficient · Σ_{x∈selections} ⊗ᵢ ψᵢ^{xᵢ}`.
#[derive(Clone, Debug, PartialEq)]
pub struct Expansion {
    pub coefficient: f64,
    /// Bit `i` of each selection picks `ψ¹` (set) or `ψ⁰` (clear) for copy `i`.
    pub selections: Vec<u64>,
}

pub fn expand_superposition(l: &SubspaceZ2, forms: &[MagicForm]) -> Result<Expansion, SparsifyError> {
    if forms.len() != l.m {
        return Err(SparsifyError::LengthMismatch { subspace: l.m, forms: forms.len() });
    }
    let nu = forms.first().map_or(1.0, |f| f.nu);
    if let Some(f) = forms.iter().find(|f| (f.nu - nu).abs() > 1e-12) {
        return Err(SparsifyError::MixedNu(nu, f.nu));
    }
    let z = zeta(l, nu);
    Ok(Expansion { coefficient: 1.0 / ((l.dim() as f64).exp2() * z).sqrt(), selections: l.elements() })
}

impl Expansion {
    pub fn chi(&self) -> usize {
        self.selections.len()
    }

    /// The free states of term `i`, one per form.
    pub fn term<'a>(&self, i: usize, forms: &'a [MagicForm]) -> Vec<&'a FreeState> {
        let x = self.selections[i];
        forms.iter().enumerate().map(|(k, f)| f.branch(x >> k & 1 == 1)).collect()
    }

    /// Stabilizer superposition on `prefix ⊗ magic block ⊗ suffix` wires, with
    /// `prefix` and `suffix` fixed single-qubit stabilizer states.
    pub fn to_stabilizer(
        &self,
        forms: &[MagicForm],
        prefix: &[crate::stabilizer::SingleQubit],
        suffix: &[crate::stabilizer::SingleQubit],
    ) -> Result<StabSuperposition, SparsifyError> {
        let coeff = Complex64::new(self.coefficient, 0.0);
        let mut terms = Vec::with_capacity(self.chi());
        for i in 0..self.chi() {
            let mut parts = prefix.to_vec();
            for s in self.term(i, forms) {
                match s {
                    FreeState::Qubit(q) => parts.push(*q),
                    _ => return Err(SparsifyError::NotQubit),
                }
            }
            parts.extend_from_slice(suffix);
            terms.push((coeff, StabilizerState::product(&parts)?));
        }
        Ok(StabSuperposition::new(terms)?)
    }

    /// Dense `|L⟩` (oracle scale only).
    pub fn to_dense(&self, forms: &[MagicForm]) -> Ket {
        let mut out: Option<Ket> = None;
        for i in 0..self.chi() {
            let factors: Vec<Ket> = self.term(i, forms).iter().map(|s| s.to_dense()).collect();
            let v = denseoracle::product_ket(&factors);
            out = Some(match out {
                None => v,
                Some(acc) => acc + v,
            });
        }
        out.expect("at least one term") * Complex64::new(self.coefficient, 0.0)
    }
}
