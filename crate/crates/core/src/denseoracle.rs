//! Brute-force dense reference: kets, density matrices, Kraus channels,
//! fermionic loss, and exact circuit output distributions.
//!
//! Index convention matches the rest of the crate: bit `a` of a basis index
//! is wire (or mode) `a`. Fock labels are read left to right as modes
//! `0, 1, …`, so `"0011"` occupies modes 2 and 3. Every fermionic state used
//! here is an even-parity product over mode pairs, so no Jordan-Wigner signs
//! are tracked.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_8};
use thiserror::Error;

use crate::circuit::{CircuitIR, Op};
use crate::stabilizer::Gate;

pub type Ket = DVector<Complex64>;
pub type Matrix = DMatrix<Complex64>;

/// Largest qubit register the oracle will build.
pub const MAX_QUBITS: usize = 14;
/// Largest Fock register the oracle will build.
pub const MAX_MODES: usize = 12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("dimension {0} is not a power of two")]
    NotPowerOfTwo(usize),
    #[error("register of {0} wires exceeds the dense oracle ceiling")]
    TooLarge(usize),
    #[error("not a probability vector: {0}")]
    NotProbability(String),
    #[error("density matrix invalid: {0}")]
    InvalidDensity(String),
    #[error("Kraus operators are not trace preserving (deviation {0:e})")]
    NotTracePreserving(f64),
    #[error("state has weight {0:e} outside the even two-mode sector")]
    OddSector(f64),
    #[error("parameter out of range: {0}")]
    BadParameter(String),
    #[error("bad Fock label `{0}`")]
    BadLabel(String),
}

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

fn log2_dim(dim: usize) -> Result<usize, OracleError> {
    if dim == 0 || !dim.is_power_of_two() {
        return Err(OracleError::NotPowerOfTwo(dim));
    }
    Ok(dim.trailing_zeros() as usize)
}

pub fn basis_ket(dim: usize, index: usize) -> Ket {
    let mut v = Ket::zeros(dim);
    v[index] = c(1.0);
    v
}

/// `|n₀n₁…⟩` from a string of `0`/`1` occupations.
pub fn fock_ket(label: &str) -> Result<Ket, OracleError> {
    if label.is_empty() || label.len() > MAX_MODES {
        return Err(OracleError::BadLabel(label.to_string()));
    }
    let mut index = 0usize;
    for (i, ch) in label.chars().enumerate() {
        match ch {
            '0' => {}
            '1' => index |= 1 << i,
            _ => return Err(OracleError::BadLabel(label.to_string())),
        }
    }
    Ok(basis_ket(1 << label.len(), index))
}

/// `|H⟩ = cos(π/8)|0⟩ + sin(π/8)|1⟩`.
pub fn h_state() -> Ket {
    Ket::from_vec(vec![c(FRAC_PI_8.cos()), c(FRAC_PI_8.sin())])
}

/// `(|0011⟩ + |1100⟩)/√2`.
pub fn psi4() -> Ket {
    let mut v = Ket::zeros(16);
    v[0b1100] = c(FRAC_1_SQRT_2);
    v[0b0011] = c(FRAC_1_SQRT_2);
    v
}

/// Tensor product with `factors[0]` on the lowest index bits.
pub fn product_ket(factors: &[Ket]) -> Ket {
    factors.iter().fold(Ket::from_element(1, c(1.0)), |acc, f| f.kronecker(&acc))
}

/// `|⟨a|b⟩|²`.
pub fn fidelity(a: &Ket, b: &Ket) -> f64 {
    a.dotc(b).norm_sqr()
}

pub fn projector(v: &Ket) -> Matrix {
    v * v.adjoint()
}

/// A validated density matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    entries: Matrix,
}

impl DensityMatrix {
    /// Checks Hermiticity, unit trace and positivity.
    pub fn new(entries: Matrix) -> Result<Self, OracleError> {
        if !entries.is_square() {
            return Err(OracleError::InvalidDensity("not square".into()));
        }
        let herm = (&entries - entries.adjoint()).camax();
        if herm > 1e-12 {
            return Err(OracleError::InvalidDensity(format!("anti-Hermitian part {herm:e}")));
        }
        let tr = entries.trace();
        if (tr - c(1.0)).norm() > 1e-12 {
            return Err(OracleError::InvalidDensity(format!("trace {tr}")));
        }
        let min = entries.clone().symmetric_eigen().eigenvalues.min();
        if min < -1e-10 {
            return Err(OracleError::InvalidDensity(format!("eigenvalue {min:e}")));
        }
        Ok(DensityMatrix { entries })
    }

    pub fn pure(v: &Ket) -> Result<Self, OracleError> {
        Self::new(projector(v))
    }

    /// `Σ wᵢ |ψᵢ⟩⟨ψᵢ|`.
    pub fn mixture(parts: &[(f64, Ket)]) -> Result<Self, OracleError> {
        let dim = parts.first().map(|(_, v)| v.len()).ok_or_else(|| OracleError::InvalidDensity("empty mixture".into()))?;
        let mut m = Matrix::zeros(dim, dim);
        for (w, v) in parts {
            if v.len() != dim {
                return Err(OracleError::DimensionMismatch { left: dim, right: v.len() });
            }
            m += projector(v) * c(*w);
        }
        Self::new(m)
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &Matrix {
        &self.entries
    }

    pub fn frobenius_distance(&self, other: &DensityMatrix) -> f64 {
        (&self.entries - &other.entries).norm()
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        self.entries.clone().symmetric_eigen().eigenvalues.iter().copied().collect()
    }
}

/// A trace-preserving channel in Kraus form.
#[derive(Clone, Debug)]
pub struct KrausChannel {
    operators: Vec<Matrix>,
}

impl KrausChannel {
    pub fn new(operators: Vec<Matrix>) -> Result<Self, OracleError> {
        let dim = operators.first().map(|k| k.nrows()).ok_or(OracleError::NotTracePreserving(1.0))?;
        let mut sum = Matrix::zeros(dim, dim);
        for k in &operators {
            if k.nrows() != dim || k.ncols() != dim {
                return Err(OracleError::DimensionMismatch { left: dim, right: k.nrows() });
            }
            sum += k.adjoint() * k;
        }
        let dev = (sum - Matrix::identity(dim, dim)).camax();
        if dev > 1e-12 {
            return Err(OracleError::NotTracePreserving(dev));
        }
        Ok(KrausChannel { operators })
    }

    /// `K₀ = √(1−p) I`, `K₁ = √p Z`.
    pub fn dephasing(p: f64) -> Result<Self, OracleError> {
        if !(0.0..=1.0).contains(&p) {
            return Err(OracleError::BadParameter(format!("dephasing rate {p}")));
        }
        let z = Matrix::from_diagonal(&Ket::from_vec(vec![c(1.0), c(-1.0)]));
        Self::new(vec![Matrix::identity(2, 2) * c((1.0 - p).sqrt()), z * c(p.sqrt())])
    }

    /// Lift a single-wire channel onto wire `wire` of an `n`-wire register.
    pub fn on_wire(&self, wire: usize, n: usize) -> Result<Self, OracleError> {
        if wire >= n {
            return Err(OracleError::BadParameter(format!("wire {wire} of {n}")));
        }
        if n > MAX_QUBITS {
            return Err(OracleError::TooLarge(n));
        }
        let local = self.operators[0].nrows();
        if local != 2 {
            return Err(OracleError::DimensionMismatch { left: 2, right: local });
        }
        let low = Matrix::identity(1 << wire, 1 << wire);
        let high = Matrix::identity(1 << (n - wire - 1), 1 << (n - wire - 1));
        Ok(KrausChannel { operators: self.operators.iter().map(|k| high.kronecker(&k.kronecker(&low))).collect() })
    }

    pub fn operators(&self) -> &[Matrix] {
        &self.operators
    }

    pub fn dim(&self) -> usize {
        self.operators[0].nrows()
    }
}

/// `Σ K ρ K†`.
pub fn apply_channel(rho: &DensityMatrix, ch: &KrausChannel) -> Result<DensityMatrix, OracleError> {
    if rho.dim() != ch.dim() {
        return Err(OracleError::DimensionMismatch { left: rho.dim(), right: ch.dim() });
    }
    let mut out = Matrix::zeros(rho.dim(), rho.dim());
    for k in &ch.operators {
        out += k * &rho.entries * k.adjoint();
    }
    // symmetrise away rounding so the result passes the Hermiticity check
    let out = (&out + out.adjoint()) * c(0.5);
    DensityMatrix::new(out)
}

/// Per-mode beamsplitter with a vacuum environment mode, then trace out the
/// environment. `p = cos²λ` is the transmission probability.
///
/// For each set `e` of lost modes the environment branch is
/// `v_e[x∖e] = Σ_{x ⊇ e} ψ(x) (cos λ)^{|x∖e|} (−i sin λ)^{|e|}`.
pub fn loss_channel_fock(state: &Ket, p: f64) -> Result<DensityMatrix, OracleError> {
    if !(0.0..=1.0).contains(&p) {
        return Err(OracleError::BadParameter(format!("transmission {p}")));
    }
    let modes = log2_dim(state.len())?;
    if modes > MAX_MODES {
        return Err(OracleError::TooLarge(modes));
    }
    let lambda = p.sqrt().acos();
    let (cl, sl) = (lambda.cos(), lambda.sin());
    let lost = Complex64::new(0.0, -sl);
    let dim = state.len();
    let mut rho = Matrix::zeros(dim, dim);
    for e in 0..dim {
        let mut v = Ket::zeros(dim);
        for (x, amp) in state.iter().enumerate() {
            if x & e != e || amp.norm() == 0.0 {
                continue;
            }
            let kept = (x & !e).count_ones() as i32;
            v[x & !e] += amp * cl.powi(kept) * lost.powi(e.count_ones() as i32);
        }
        if v.iter().any(|a| a.norm() > 0.0) {
            rho += projector(&v);
        }
    }
    let rho = (&rho + rho.adjoint()) * c(0.5);
    DensityMatrix::new(rho)
}

/// `½ Σ |Pᵢ − Qᵢ|`.
pub fn tvd(p: &[f64], q: &[f64]) -> Result<f64, OracleError> {
    if p.len() != q.len() {
        return Err(OracleError::DimensionMismatch { left: p.len(), right: q.len() });
    }
    for v in [p, q] {
        let s: f64 = v.iter().sum();
        if (s - 1.0).abs() > 1e-9 || v.iter().any(|&x| x < 0.0 || !x.is_finite()) {
            return Err(OracleError::NotProbability(format!("sum {s}")));
        }
    }
    Ok(0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>())
}

/// `cos θ|00⟩ − i e^{iφ} sin θ|11⟩`.
pub fn two_mode_even(theta: f64, phi: f64) -> Ket {
    let mut v = Ket::zeros(4);
    v[0] = c(theta.cos());
    v[3] = Complex64::new(0.0, -1.0) * Complex64::from_polar(theta.sin(), phi);
    v
}

/// Recover `(θ, φ)` with `θ ∈ [0, π/2]`, `φ ∈ [0, 2π)` such that
/// [`two_mode_even`] reproduces `state` up to global phase.
pub fn check_two_mode_even_gaussian(state: &Ket) -> Result<(f64, f64), OracleError> {
    if state.len() != 4 {
        return Err(OracleError::DimensionMismatch { left: 4, right: state.len() });
    }
    let odd = state[1].norm_sqr() + state[2].norm_sqr();
    if odd > 1e-20 {
        return Err(OracleError::OddSector(odd));
    }
    let (a, b) = (state[0], state[3]);
    let norm = (a.norm_sqr() + b.norm_sqr()).sqrt();
    if (norm - 1.0).abs() > 1e-9 {
        return Err(OracleError::BadParameter(format!("state norm {norm}")));
    }
    let theta = b.norm().atan2(a.norm());
    let phi = if a.norm() < 1e-12 || b.norm() < 1e-12 {
        0.0
    } else {
        (Complex64::i() * b / a).arg().rem_euclid(std::f64::consts::TAU)
    };
    let f = fidelity(&two_mode_even(theta, phi), state);
    if f < 1.0 - 1e-10 {
        return Err(OracleError::BadParameter(format!("reconstruction fidelity {f}")));
    }
    Ok((theta, phi))
}

/// Fidelity between the four-component dephasing branch
/// `(C±|0011⟩ + C∓|1100⟩ + (−1)^j D(|0000⟩ + |1111⟩))/√E` and its product
/// form over the mode pairs (0,1) and (2,3), with `η = 1 − 2p`.
pub fn check_omega_product_form(p: f64, plus: bool, j: u8) -> Result<f64, OracleError> {
    if !(0.0..=1.0).contains(&p) || j > 1 {
        return Err(OracleError::BadParameter(format!("p={p}, j={j}")));
    }
    let eta2 = (1.0 - 2.0 * p).powi(2);
    if eta2 < 1e-12 {
        return Err(OracleError::BadParameter("p = 1/2 makes ξ± singular".into()));
    }
    let eta4 = eta2 * eta2;
    let (rp, rm) = ((1.0 + eta4).sqrt(), (1.0 - eta4).max(0.0).sqrt());
    let (cp, cm) = (0.5 * (rp + rm), 0.5 * (rp - rm));
    let (c_first, c_second) = if plus { (cp, cm) } else { (cm, cp) };
    let d = eta2 / 2f64.sqrt();
    let e = eta4 + 1.0;
    let sign = if j == 0 { 1.0 } else { -1.0 };

    let mut direct = Ket::zeros(16);
    direct[0b1100] = c(c_first / e.sqrt());
    direct[0b0011] = c(c_second / e.sqrt());
    direct[0b0000] = c(sign * d / e.sqrt());
    direct[0b1111] = c(sign * d / e.sqrt());

    let xi_p = (rp + rm) / (2f64.sqrt() * eta2);
    let xi_m = (rp - rm) / (2f64.sqrt() * eta2);
    let (xs, xo) = if plus { (xi_p, xi_m) } else { (xi_m, xi_p) };
    let alpha = 1.0 / (1.0 + xo * xo).sqrt();
    let beta = sign * xo / (1.0 + xo * xo).sqrt();
    let gamma = sign / (1.0 + xs * xs).sqrt();
    let kappa = xs / (1.0 + xs * xs).sqrt();
    let pair = |a: f64, b: f64| Ket::from_vec(vec![c(a), c(0.0), c(0.0), c(b)]);
    let product = product_ket(&[pair(alpha, beta), pair(gamma, kappa)]);

    Ok(fidelity(&direct, &product))
}

fn apply_1q(state: &mut Ket, wire: usize, u: [[Complex64; 2]; 2]) {
    let m = 1usize << wire;
    for i in 0..state.len() {
        if i & m == 0 {
            let (a, b) = (state[i], state[i | m]);
            state[i] = u[0][0] * a + u[0][1] * b;
            state[i | m] = u[1][0] * a + u[1][1] * b;
        }
    }
}

fn apply_phase(state: &mut Ket, wire: usize, phase: Complex64) {
    let m = 1usize << wire;
    for i in 0..state.len() {
        if i & m != 0 {
            state[i] *= phase;
        }
    }
}

/// Dense action of a circuit gate (Clifford or `T`/`T†`).
pub fn apply_op(state: &mut Ket, op: &Op) {
    let z = c(0.0);
    let h = c(FRAC_1_SQRT_2);
    match op {
        Op::T { wire, dagger } => {
            let sgn = if *dagger { -1.0 } else { 1.0 };
            apply_phase(state, *wire, Complex64::from_polar(1.0, sgn * std::f64::consts::FRAC_PI_4));
        }
        Op::Clifford { gate, wires } => match gate {
            Gate::X => apply_1q(state, wires[0], [[z, c(1.0)], [c(1.0), z]]),
            Gate::Y => apply_1q(state, wires[0], [[z, Complex64::new(0.0, -1.0)], [Complex64::new(0.0, 1.0), z]]),
            Gate::Z => apply_phase(state, wires[0], c(-1.0)),
            Gate::H => apply_1q(state, wires[0], [[h, h], [h, -h]]),
            Gate::S => apply_phase(state, wires[0], Complex64::i()),
            Gate::Sdg => apply_phase(state, wires[0], -Complex64::i()),
            Gate::CX | Gate::CZ | Gate::Swap => {
                let (a, b) = (1usize << wires[0], 1usize << wires[1]);
                for i in 0..state.len() {
                    match gate {
                        Gate::CX if i & a != 0 && i & b == 0 => state.swap_rows(i, i | b),
                        Gate::CZ if i & a != 0 && i & b != 0 => state[i] = -state[i],
                        Gate::Swap if i & a != 0 && i & b == 0 => state.swap_rows(i, (i & !a) | b),
                        _ => {}
                    }
                }
            }
        },
        Op::Measure { .. } => panic!("measurement is not a unitary op"),
    }
}

/// Exact distribution of the `final_measure` bitstring (bit `i` of the index
/// is the `i`-th measured wire) for a mixture of pure inputs.
pub fn circuit_distribution(circuit: &CircuitIR, inputs: &[(f64, Ket)]) -> Result<Vec<f64>, OracleError> {
    let total = circuit.total_wires();
    if total > MAX_QUBITS {
        return Err(OracleError::TooLarge(total));
    }
    let mut dist = vec![0.0; 1 << circuit.final_measure.len()];
    for (w, v) in inputs {
        if v.len() != 1 << total {
            return Err(OracleError::DimensionMismatch { left: 1 << total, right: v.len() });
        }
        let records = vec![false; circuit.records.len()];
        branch(circuit, 0, v.clone(), *w, records, &mut dist);
    }
    Ok(dist)
}

fn branch(circuit: &CircuitIR, start: usize, mut state: Ket, weight: f64, mut records: Vec<bool>, dist: &mut [f64]) {
    for (pos, ins) in circuit.ops.iter().enumerate().skip(start) {
        if !ins.cond.is_empty() && !ins.cond.iter().fold(false, |acc, &r| acc ^ records[r]) {
            continue;
        }
        if let Op::Measure { wire, record } = ins.op {
            let m = 1usize << wire;
            for outcome in [false, true] {
                let mut next = state.clone();
                for (i, a) in next.iter_mut().enumerate() {
                    if (i & m != 0) != outcome {
                        *a = c(0.0);
                    }
                }
                let prob = next.norm_squared();
                if prob < 1e-15 {
                    continue;
                }
                next /= c(prob.sqrt());
                records[record] = outcome;
                branch(circuit, pos + 1, next, weight * prob, records.clone(), dist);
            }
            return;
        }
        apply_op(&mut state, &ins.op);
    }
    for (i, a) in state.iter().enumerate() {
        let mut idx = 0usize;
        for (k, &w) in circuit.final_measure.iter().enumerate() {
            if i >> w & 1 == 1 {
                idx |= 1 << k;
            }
        }
        dist[idx] += weight * a.norm_sqr();
    }
}

/// Weighted pure components of `|0⟩^{⊗n} ⊗ ρ^{⊗t}` with `ρ = Σ wᵢ|vᵢ⟩⟨vᵢ|`.
pub fn product_inputs(n: usize, t: usize, single: &[(f64, Ket)]) -> Vec<(f64, Ket)> {
    let zero = basis_ket(2, 0);
    let mut out = vec![(1.0, product_ket(&vec![zero; n]))];
    for _ in 0..t {
        let mut next = Vec::with_capacity(out.len() * single.len());
        for (w, v) in &out {
            for (ws, s) in single {
                if *ws > 0.0 {
                    next.push((w * ws, s.kronecker(v)));
                }
            }
        }
        out = next;
    }
    out
}

/// Pure components of the dephased `|H⟩`: `(1−p, |H⟩)` and `(p, Z|H⟩)`.
pub fn dephased_h_components(p: f64) -> Vec<(f64, Ket)> {
    let h = h_state();
    let mut zh = h.clone();
    zh[1] = -zh[1];
    vec![(1.0 - p, h), (p, zh)]
}
