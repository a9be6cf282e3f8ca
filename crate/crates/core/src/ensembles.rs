//! Pure-state ensembles for the three noisy magic states and the two-branch
//! decompositions `|ψ⟩ = (|ψ⁰⟩ + |ψ¹⟩)/(2ν)` of their magic members.

use num_complex::Complex64;
use serde::Serialize;
use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_8, SQRT_2};
use std::fmt;
use std::str::FromStr;
use thiserror::Error;

use crate::denseoracle::{self, DensityMatrix, Ket, OracleError};
use crate::stabilizer::SingleQubit;

/// Weights with magnitude below this are rounding noise at a branch edge.
const WEIGHT_CLAMP: f64 = 1e-14;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EnsembleError {
    #[error("noise parameter {0} outside [0, 1]")]
    OutOfRange(f64),
    #[error("ν = {0} outside [1/√2, 1]")]
    BadNu(f64),
    #[error("{0}")]
    Degenerate(String),
    #[error("unknown noise case `{0}`")]
    UnknownCase(String),
    #[error(transparent)]
    Oracle(#[from] OracleError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum NoiseCase {
    QubitDephasing,
    FermionLoss,
    FermionDephasing,
}

impl NoiseCase {
    pub const ALL: [NoiseCase; 3] = [NoiseCase::QubitDephasing, NoiseCase::FermionLoss, NoiseCase::FermionDephasing];

    pub fn name(self) -> &'static str {
        match self {
            NoiseCase::QubitDephasing => "qubit-dephasing",
            NoiseCase::FermionLoss => "fermion-loss",
            NoiseCase::FermionDephasing => "fermion-dephasing",
        }
    }

    /// Wires (qubits or modes) per magic copy.
    pub fn wires_per_copy(self) -> usize {
        match self {
            NoiseCase::QubitDephasing => 1,
            _ => 4,
        }
    }

    pub fn ensemble(self, p: f64) -> Result<Ensemble, EnsembleError> {
        match self {
            NoiseCase::QubitDephasing => qubit_dephasing_ensemble(p),
            NoiseCase::FermionLoss => fermion_loss_ensemble(p),
            NoiseCase::FermionDephasing => fermion_dephasing_ensemble(p),
        }
    }
}

impl fmt::Display for NoiseCase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for NoiseCase {
    type Err = EnsembleError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "qubit-dephasing" | "qubit" => Ok(NoiseCase::QubitDephasing),
            "fermion-loss" | "loss" => Ok(NoiseCase::FermionLoss),
            "fermion-dephasing" | "dephasing" => Ok(NoiseCase::FermionDephasing),
            _ => Err(EnsembleError::UnknownCase(s.to_string())),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    fn value(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }

    fn suffix(self) -> &'static str {
        match self {
            Sign::Plus => "+",
            Sign::Minus => "-",
        }
    }
}

/// A resourceless pure state.
#[derive(Clone, Debug, PartialEq)]
pub enum FreeState {
    Qubit(SingleQubit),
    /// Fock basis state; bit `i` of `occupied` is mode `i`.
    Fock { modes: usize, occupied: u64 },
    /// `⊗ₖ (aₖ|00⟩ + bₖ|11⟩)` over consecutive mode pairs `(2k, 2k+1)`.
    EvenPairs(Vec<(f64, f64)>),
}

impl FreeState {
    pub fn fock(label: &str) -> Self {
        let occupied = label.chars().enumerate().filter(|(_, ch)| *ch == '1').fold(0u64, |m, (i, _)| m | 1 << i);
        FreeState::Fock { modes: label.len(), occupied }
    }

    pub fn num_wires(&self) -> usize {
        match self {
            FreeState::Qubit(_) => 1,
            FreeState::Fock { modes, .. } => *modes,
            FreeState::EvenPairs(pairs) => 2 * pairs.len(),
        }
    }

    pub fn label(&self) -> String {
        match self {
            FreeState::Qubit(q) => q.label().to_string(),
            FreeState::Fock { modes, occupied } => (0..*modes).map(|i| if occupied >> i & 1 == 1 { '1' } else { '0' }).collect(),
            FreeState::EvenPairs(pairs) => pairs.iter().map(|(a, b)| format!("({a}|00>{b:+}|11>)")).collect(),
        }
    }

    pub fn to_dense(&self) -> Ket {
        match self {
            FreeState::Qubit(q) => Ket::from_vec(q.amplitudes().to_vec()),
            FreeState::Fock { modes, occupied } => denseoracle::basis_ket(1 << modes, *occupied as usize),
            FreeState::EvenPairs(pairs) => {
                let factors: Vec<Ket> = pairs
                    .iter()
                    .map(|&(a, b)| {
                        let z = Complex64::new(0.0, 0.0);
                        Ket::from_vec(vec![Complex64::new(a, 0.0), z, z, Complex64::new(b, 0.0)])
                    })
                    .collect();
                denseoracle::product_ket(&factors)
            }
        }
    }
}

/// `|ψ⟩ = (|ψ⁰⟩ + |ψ¹⟩)/(2ν)` with `⟨ψ⁰|ψ¹⟩ = 2ν² − 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct MagicForm {
    pub nu: f64,
    pub psi0: FreeState,
    pub psi1: FreeState,
    pub overlap: f64,
}

impl MagicForm {
    pub fn new(nu: f64, psi0: FreeState, psi1: FreeState) -> Result<Self, EnsembleError> {
        if !(FRAC_1_SQRT_2 - 1e-12..=1.0 + 1e-12).contains(&nu) {
            return Err(EnsembleError::BadNu(nu));
        }
        Ok(MagicForm { nu, psi0, psi1, overlap: 2.0 * nu * nu - 1.0 })
    }

    pub fn branch(&self, j: bool) -> &FreeState {
        if j {
            &self.psi1
        } else {
            &self.psi0
        }
    }

    /// Dense `(|ψ⁰⟩ + |ψ¹⟩)/(2ν)`.
    pub fn to_dense(&self) -> Ket {
        (self.psi0.to_dense() + self.psi1.to_dense()) / Complex64::new(2.0 * self.nu, 0.0)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum EntryKind {
    Resourceless(FreeState),
    Magic(MagicForm),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Entry {
    pub weight: f64,
    pub label: String,
    pub kind: EntryKind,
}

impl Entry {
    fn free(weight: f64, state: FreeState) -> Self {
        Entry { weight: clamp(weight), label: state.label(), kind: EntryKind::Resourceless(state) }
    }

    fn magic(weight: f64, label: &str, form: MagicForm) -> Self {
        Entry { weight: clamp(weight), label: label.to_string(), kind: EntryKind::Magic(form) }
    }

    pub fn is_magic(&self) -> bool {
        matches!(self.kind, EntryKind::Magic(_))
    }

    pub fn to_dense(&self) -> Ket {
        match &self.kind {
            EntryKind::Resourceless(s) => s.to_dense(),
            EntryKind::Magic(m) => m.to_dense(),
        }
    }
}

fn clamp(w: f64) -> f64 {
    if w.abs() < WEIGHT_CLAMP {
        0.0
    } else {
        w
    }
}

/// A noisy magic state written as a weighted list of pure states.
#[derive(Clone, Debug, PartialEq)]
pub struct Ensemble {
    pub case: NoiseCase,
    pub p: f64,
    pub branch: &'static str,
    pub entries: Vec<Entry>,
}

#[derive(Serialize)]
struct EntryView<'a> {
    weight: f64,
    kind: &'static str,
    label: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    nu: Option<f64>,
}

#[derive(Serialize)]
struct EnsembleView<'a> {
    case: NoiseCase,
    p: f64,
    branch: &'a str,
    entries: Vec<EntryView<'a>>,
}

impl Ensemble {
    /// Total weight of magic entries.
    pub fn p_magic(&self) -> f64 {
        self.entries.iter().filter(|e| e.is_magic()).map(|e| e.weight).sum()
    }

    /// Common `ν` of the magic entries, if any.
    pub fn nu(&self) -> Option<f64> {
        self.entries.iter().find_map(|e| match &e.kind {
            EntryKind::Magic(m) => Some(m.nu),
            _ => None,
        })
    }

    pub fn wires_per_copy(&self) -> usize {
        self.case.wires_per_copy()
    }

    /// Index of the entry selected by `u ∈ [0,1)` under the cumulative weights.
    pub fn select(&self, u: f64) -> usize {
        let total: f64 = self.entries.iter().map(|e| e.weight).sum();
        let mut acc = 0.0;
        let target = u * total;
        let mut last = 0;
        for (i, e) in self.entries.iter().enumerate() {
            if e.weight <= 0.0 {
                continue;
            }
            acc += e.weight;
            last = i;
            if target < acc {
                return i;
            }
        }
        last
    }

    /// `Σ wᵢ |ψᵢ⟩⟨ψᵢ|`.
    pub fn density(&self) -> Result<DensityMatrix, EnsembleError> {
        let parts: Vec<(f64, Ket)> = self.entries.iter().map(|e| (e.weight, e.to_dense())).collect();
        Ok(DensityMatrix::mixture(&parts)?)
    }

    pub fn to_json(&self) -> String {
        let view = EnsembleView {
            case: self.case,
            p: self.p,
            branch: self.branch,
            entries: self
                .entries
                .iter()
                .map(|e| EntryView {
                    weight: e.weight,
                    kind: if e.is_magic() { "magic" } else { "resourceless" },
                    label: &e.label,
                    nu: match &e.kind {
                        EntryKind::Magic(m) => Some(m.nu),
                        _ => None,
                    },
                })
                .collect(),
        };
        serde_json::to_string_pretty(&view).expect("ensemble serialises")
    }
}

fn check_p(p: f64) -> Result<(), EnsembleError> {
    if !(0.0..=1.0).contains(&p) || p.is_nan() {
        return Err(EnsembleError::OutOfRange(p));
    }
    Ok(())
}

/// `(1 − tan(π/8))/2`, below which the dephased `|H⟩` needs a magic entry.
pub fn qubit_critical_p() -> f64 {
    (1.0 - FRAC_PI_8.tan()) / 2.0
}

/// `cos(π/8)`.
pub fn nu_qubit() -> f64 {
    FRAC_PI_8.cos()
}

/// `|H⟩ = (|0⟩ + |+⟩)/(2 cos(π/8))`.
pub fn magic_form_qubit() -> MagicForm {
    MagicForm::new(nu_qubit(), FreeState::Qubit(SingleQubit::Zero), FreeState::Qubit(SingleQubit::Plus)).expect("ν in range")
}

/// `|H′⟩ = cos(π/8)|0⟩ − sin(π/8)|1⟩ = (|0⟩ + |−⟩)/(2 cos(π/8))`.
pub fn magic_form_qubit_mirror() -> MagicForm {
    MagicForm::new(nu_qubit(), FreeState::Qubit(SingleQubit::Zero), FreeState::Qubit(SingleQubit::Minus)).expect("ν in range")
}

/// Unclamped weights `(|0⟩, |1⟩, |±⟩)` of the stabilizer-only ensemble:
/// the `|+⟩` form for `p ≤ 1/2`, the `|−⟩` form above.
pub fn all_stabilizer_weights(p: f64) -> [f64; 3] {
    let r = FRAC_1_SQRT_2;
    if p <= 0.5 {
        [0.5 + p * r, (1.0 - SQRT_2) / 2.0 + p * r, r - SQRT_2 * p]
    } else {
        [(1.0 + SQRT_2) / 2.0 - p * r, 0.5 - p * r, SQRT_2 * p - r]
    }
}

pub fn qubit_dephasing_ensemble(p: f64) -> Result<Ensemble, EnsembleError> {
    check_p(p)?;
    let pc = qubit_critical_p();
    let q = |s| FreeState::Qubit(s);
    let (branch, entries) = if p < pc {
        (
            "magic-low",
            vec![
                Entry::free((1.0 + SQRT_2) * p, q(SingleQubit::Zero)),
                Entry::free(p, q(SingleQubit::Plus)),
                Entry::magic(1.0 - (2.0 + SQRT_2) * p, "H", magic_form_qubit()),
            ],
        )
    } else if p > 1.0 - pc {
        let r = 1.0 - p;
        (
            "magic-high",
            vec![
                Entry::free((1.0 + SQRT_2) * r, q(SingleQubit::Zero)),
                Entry::free(r, q(SingleQubit::Minus)),
                Entry::magic(1.0 - (2.0 + SQRT_2) * r, "H'", magic_form_qubit_mirror()),
            ],
        )
    } else {
        let [w0, w1, w2] = all_stabilizer_weights(p);
        let (branch, third) = if p <= 0.5 { ("stabilizer-low", SingleQubit::Plus) } else { ("stabilizer-high", SingleQubit::Minus) };
        (branch, vec![Entry::free(w0, q(SingleQubit::Zero)), Entry::free(w1, q(SingleQubit::One)), Entry::free(w2, q(third))])
    };
    Ok(Ensemble { case: NoiseCase::QubitDephasing, p, branch, entries })
}

/// `√((2p² − 2p + 1)/(3p² − 2p + 1))`.
pub fn nu_loss(p: f64) -> f64 {
    ((2.0 * p * p - 2.0 * p + 1.0) / (3.0 * p * p - 2.0 * p + 1.0)).sqrt()
}

/// `√(1/(1 + (1 − 2p)⁴))`.
pub fn nu_dep(p: f64) -> f64 {
    (1.0 / (1.0 + (1.0 - 2.0 * p).powi(4))).sqrt()
}

/// `φ± = [(1−p)|0000⟩ ± p|ψ₄⟩]/√N` as two products of two-mode even states.
pub fn magic_form_loss(p: f64, sign: Sign) -> Result<MagicForm, EnsembleError> {
    check_p(p)?;
    if p == 0.0 {
        return Err(EnsembleError::Degenerate("at p = 0 both φ± are the vacuum".into()));
    }
    let n = 2.0 * p * p - 2.0 * p + 1.0;
    let m = (3.0 * p * p - 2.0 * p + 1.0) / (4.0 * n);
    let a = (1.0 - p) / (2.0 * (n * m).sqrt());
    let b = sign.value() * p / (2.0 * n * m).sqrt();
    let psi0 = FreeState::EvenPairs(vec![(1.0, 0.0), (a, b)]);
    let psi1 = FreeState::EvenPairs(vec![(a, b), (1.0, 0.0)]);
    MagicForm::new(nu_loss(p), psi0, psi1)
}

/// `C± = ½(√(1+η⁴) ± √(1−η⁴))`, with `C₋` evaluated without cancellation.
fn dephasing_coefficients(p: f64) -> (f64, f64) {
    let eta4 = (1.0 - 2.0 * p).powi(4);
    let (rp, rm) = ((1.0 + eta4).sqrt(), (1.0 - eta4).sqrt());
    (0.5 * (rp + rm), eta4 / (rp + rm))
}

/// `ω± = C±|0011⟩ + C∓|1100⟩` as two products of two-mode even states.
pub fn magic_form_dep(p: f64, sign: Sign) -> Result<MagicForm, EnsembleError> {
    check_p(p)?;
    let eta2 = (1.0 - 2.0 * p).powi(2);
    if eta2 == 0.0 {
        return Err(EnsembleError::Degenerate("at p = 1/2 both ω± are Fock states".into()));
    }
    let eta4 = eta2 * eta2;
    let (rp, rm) = ((1.0 + eta4).sqrt(), (1.0 - eta4).sqrt());
    let xi_plus = (rp + rm) / (SQRT_2 * eta2);
    let xi_minus = SQRT_2 * eta2 / (rp + rm);
    let (xs, xo) = match sign {
        Sign::Plus => (xi_plus, xi_minus),
        Sign::Minus => (xi_minus, xi_plus),
    };
    let (no, ns) = ((1.0 + xo * xo).sqrt(), (1.0 + xs * xs).sqrt());
    let pair = |j: f64| vec![(1.0 / no, j * xo / no), (j / ns, xs / ns)];
    MagicForm::new(nu_dep(p), FreeState::EvenPairs(pair(1.0)), FreeState::EvenPairs(pair(-1.0)))
}

pub fn fermion_loss_ensemble(p: f64) -> Result<Ensemble, EnsembleError> {
    check_p(p)?;
    let n = 2.0 * p * p - 2.0 * p + 1.0;
    let single = 0.5 * p * (1.0 - p);
    let mut entries = if p == 0.0 {
        vec![Entry::free(0.5, FreeState::fock("0000")), Entry::free(0.5, FreeState::fock("0000"))]
    } else {
        vec![
            Entry::magic(n / 2.0, "phi+", magic_form_loss(p, Sign::Plus)?),
            Entry::magic(n / 2.0, "phi-", magic_form_loss(p, Sign::Minus)?),
        ]
    };
    for label in ["0001", "0010", "0100", "1000"] {
        entries.push(Entry::free(single, FreeState::fock(label)));
    }
    let branch = if p == 0.0 { "vacuum" } else { "loss" };
    Ok(Ensemble { case: NoiseCase::FermionLoss, p, branch, entries })
}

pub fn fermion_dephasing_ensemble(p: f64) -> Result<Ensemble, EnsembleError> {
    check_p(p)?;
    if (1.0 - 2.0 * p) == 0.0 {
        let entries = vec![Entry::free(0.5, FreeState::fock("0011")), Entry::free(0.5, FreeState::fock("1100"))];
        return Ok(Ensemble { case: NoiseCase::FermionDephasing, p, branch: "resourceless", entries });
    }
    let entries = [Sign::Plus, Sign::Minus]
        .into_iter()
        .map(|s| Ok(Entry::magic(0.5, &format!("omega{}", s.suffix()), magic_form_dep(p, s)?)))
        .collect::<Result<Vec<_>, EnsembleError>>()?;
    Ok(Ensemble { case: NoiseCase::FermionDephasing, p, branch: "dephasing", entries })
}

/// `C±` for the dephased `|ψ₄⟩`.
pub fn dephasing_c(p: f64) -> (f64, f64) {
    dephasing_coefficients(p)
}
