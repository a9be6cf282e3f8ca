use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::fmt;

use super::phase::{bit, bits, eliminate_var, exponential_sum, parity, sum_out, AffineMap, QuadPhase, Scalar};
use super::StabilizerError;

/// Largest wire count supported by the bitmask representation.
pub const MAX_WIRES: usize = 63;

/// Clifford gates acting on stabilizer states.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Gate {
    X,
    Y,
    Z,
    H,
    S,
    Sdg,
    CX,
    CZ,
    Swap,
}

impl Gate {
    pub fn arity(self) -> usize {
        match self {
            Gate::CX | Gate::CZ | Gate::Swap => 2,
            _ => 1,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Gate::X => "X",
            Gate::Y => "Y",
            Gate::Z => "Z",
            Gate::H => "H",
            Gate::S => "S",
            Gate::Sdg => "SDG",
            Gate::CX => "CX",
            Gate::CZ => "CZ",
            Gate::Swap => "SWAP",
        }
    }
}

/// The six single-qubit stabilizer states.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SingleQubit {
    Zero,
    One,
    Plus,
    Minus,
    PlusI,
    MinusI,
}

impl SingleQubit {
    pub fn label(self) -> &'static str {
        match self {
            SingleQubit::Zero => "0",
            SingleQubit::One => "1",
            SingleQubit::Plus => "+",
            SingleQubit::Minus => "-",
            SingleQubit::PlusI => "+i",
            SingleQubit::MinusI => "-i",
        }
    }

    /// Amplitudes `(⟨0|s⟩, ⟨1|s⟩)`.
    pub fn amplitudes(self) -> [Complex64; 2] {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let c = |re, im| Complex64::new(re, im);
        match self {
            SingleQubit::Zero => [c(1.0, 0.0), c(0.0, 0.0)],
            SingleQubit::One => [c(0.0, 0.0), c(1.0, 0.0)],
            SingleQubit::Plus => [c(h, 0.0), c(h, 0.0)],
            SingleQubit::Minus => [c(h, 0.0), c(-h, 0.0)],
            SingleQubit::PlusI => [c(h, 0.0), c(0.0, h)],
            SingleQubit::MinusI => [c(h, 0.0), c(0.0, -h)],
        }
    }
}

/// A stabilizer state with its exact global phase.
///
/// Amplitudes are `⟨x|ψ⟩ = 2^{-k/2} f(y)` when `x = shift ⊕ G·y` for some
/// `y ∈ {0,1}^k` and zero otherwise, where `G` is injective and `f` is a
/// [`QuadPhase`]. Dense indices put wire `a` on bit `a`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct StabilizerState {
    n: usize,
    map: AffineMap,
    phase: QuadPhase,
}

impl fmt::Debug for StabilizerState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("StabilizerState")
            .field("n", &self.n)
            .field("k", &self.phase.nvars())
            .field("shift", &format_args!("{:#b}", self.map.shift))
            .field("rows", &self.map.rows)
            .field("lin", &self.phase.lin)
            .field("quad", &self.phase.quad)
            .field("omega", &self.phase.omega)
            .finish()
    }
}

/// Row reduction of a support map: left inverse and parity checks.
struct Echelon {
    /// `y_j = parity(solve[j] & (x ⊕ shift))` on the support.
    solve: Vec<u64>,
    /// `parity(check & (x ⊕ shift)) = 0` characterises the support.
    checks: Vec<u64>,
}

impl Echelon {
    fn new(map: &AffineMap, k: usize) -> Self {
        let mut pivots: Vec<(u64, u64)> = Vec::with_capacity(k);
        let mut checks = Vec::new();
        for (a, &row) in map.rows.iter().enumerate() {
            let (mut vars, mut wires) = (row, bit(a));
            for &(pv, pw) in &pivots {
                let low = pv & pv.wrapping_neg();
                if vars & low != 0 {
                    vars ^= pv;
                    wires ^= pw;
                }
            }
            if vars == 0 {
                checks.push(wires);
                continue;
            }
            let low = vars & vars.wrapping_neg();
            for p in pivots.iter_mut() {
                if p.0 & low != 0 {
                    p.0 ^= vars;
                    p.1 ^= wires;
                }
            }
            pivots.push((vars, wires));
        }
        debug_assert_eq!(pivots.len(), k, "support map must be injective");
        let mut solve = vec![0u64; k];
        for (vars, wires) in pivots {
            debug_assert_eq!(vars.count_ones(), 1);
            solve[vars.trailing_zeros() as usize] = wires;
        }
        Echelon { solve, checks }
    }
}

impl StabilizerState {
    /// `|0…0⟩` on `n` wires.
    pub fn zero(n: usize) -> Result<Self, StabilizerError> {
        if n > MAX_WIRES {
            return Err(StabilizerError::TooManyWires { n, max: MAX_WIRES });
        }
        Ok(StabilizerState {
            n,
            map: AffineMap { shift: 0, rows: vec![0; n] },
            phase: QuadPhase::new(0),
        })
    }

    /// Tensor product of single-qubit stabilizer states, wire `a` = `parts[a]`.
    pub fn product(parts: &[SingleQubit]) -> Result<Self, StabilizerError> {
        let mut s = Self::zero(parts.len())?;
        for (a, part) in parts.iter().enumerate() {
            let lin = match part {
                SingleQubit::Zero => continue,
                SingleQubit::One => {
                    s.map.shift |= bit(a);
                    continue;
                }
                SingleQubit::Plus => 0,
                SingleQubit::PlusI => 1,
                SingleQubit::Minus => 2,
                SingleQubit::MinusI => 3,
            };
            let j = s.phase.push_var();
            s.phase.lin[j] = lin;
            s.map.rows[a] = bit(j);
        }
        Ok(s)
    }

    /// Computational basis state `|x⟩`.
    pub fn basis(n: usize, x: u64) -> Result<Self, StabilizerError> {
        let mut s = Self::zero(n)?;
        s.map.shift = x & mask_n(n);
        Ok(s)
    }

    pub fn num_wires(&self) -> usize {
        self.n
    }

    /// Dimension of the affine support (`|⟨x|ψ⟩| = 2^{-k/2}` on it).
    pub fn support_dim(&self) -> usize {
        self.phase.nvars()
    }

    /// Global phase `e^{iπω/4}` relative to the canonical representative.
    pub fn global_phase(&self) -> Complex64 {
        super::phase::omega_unit(self.phase.omega)
    }

    fn check_wire(&self, w: usize) -> Result<(), StabilizerError> {
        if w >= self.n {
            Err(StabilizerError::WireOutOfRange { wire: w, n: self.n })
        } else {
            Ok(())
        }
    }

    /// Apply a Clifford gate in place.
    pub fn apply(&mut self, gate: Gate, wires: &[usize]) -> Result<(), StabilizerError> {
        if wires.len() != gate.arity() {
            return Err(StabilizerError::Arity { gate: gate.name(), expected: gate.arity(), got: wires.len() });
        }
        for &w in wires {
            self.check_wire(w)?;
        }
        if gate.arity() == 2 && wires[0] == wires[1] {
            return Err(StabilizerError::RepeatedWire(wires[0]));
        }
        let a = wires[0];
        match gate {
            Gate::X => self.map.shift ^= bit(a),
            Gate::Z => self.phase_gate(a, 2),
            Gate::Y => {
                self.phase_gate(a, 2);
                self.map.shift ^= bit(a);
                self.phase.omega = (self.phase.omega + 2) & 7;
            }
            Gate::S => self.phase_gate(a, 1),
            Gate::Sdg => self.phase_gate(a, 3),
            Gate::H => self.hadamard(a),
            Gate::CZ => {
                let b = wires[1];
                let (ra, rb) = (self.map.rows[a], self.map.rows[b]);
                self.phase.add_product(ra, self.shift_bit(a), rb, self.shift_bit(b));
            }
            Gate::CX => {
                let b = wires[1];
                self.map.rows[b] ^= self.map.rows[a];
                if self.shift_bit(a) {
                    self.map.shift ^= bit(b);
                }
            }
            Gate::Swap => {
                let b = wires[1];
                self.map.rows.swap(a, b);
                if self.shift_bit(a) != self.shift_bit(b) {
                    self.map.shift ^= bit(a) | bit(b);
                }
            }
        }
        Ok(())
    }

    fn shift_bit(&self, a: usize) -> bool {
        self.map.shift & bit(a) != 0
    }

    /// Multiply by `i^{m·x_a}`.
    fn phase_gate(&mut self, a: usize, m: u8) {
        let row = self.map.rows[a];
        let c = self.shift_bit(a);
        self.phase.add_parity(row, c, m);
    }

    fn hadamard(&mut self, a: usize) {
        let k = self.phase.nvars();
        let row = self.map.rows[a];
        let c = self.shift_bit(a);
        // H|x_a⟩ = 2^{-1/2} Σ_w (−1)^{x_a w} |w⟩ with a fresh variable w
        let w = self.phase.push_var();
        self.phase.add_product(bit(w), false, row, c);
        self.map.rows[a] = bit(w);
        self.map.shift &= !bit(a);

        // the other wires may no longer determine the old variables
        let Some(u) = kernel_vector(&self.map.rows, k) else {
            return;
        };
        let j0 = u.trailing_zeros() as usize;
        let maps: Vec<u64> = (0..=k)
            .map(|j| if j != j0 && u & bit(j) != 0 { bit(j) | bit(j0) } else { bit(j) })
            .collect();
        self.phase = self.phase.pullback(&maps, 0, k + 1);
        // G·T keeps every column except j0, which becomes G·u = 0
        for row in self.map.rows.iter_mut() {
            debug_assert!(!parity(*row & u));
            *row &= !bit(j0);
        }
        let before = self.phase.nvars();
        let s = sum_out(&mut self.phase, Some(&mut self.map), j0);
        debug_assert!(!s.zero);
        debug_assert_eq!(s.sqrt2 as usize, before - self.phase.nvars());
        self.phase.omega = self.phase.omega.wrapping_add(s.omega) & 7;
    }

    /// Unnormalised projection of `wire` onto `outcome`.
    ///
    /// Returns `None` when the outcome is forbidden. Otherwise the returned
    /// weight `w` satisfies `|outcome⟩⟨outcome|_wire |ψ⟩ = w · |ψ'⟩` with `|ψ'⟩`
    /// normalised and all phase carried by `|ψ'⟩`.
    pub fn project(&self, wire: usize, outcome: bool) -> Result<Option<(StabilizerState, f64)>, StabilizerError> {
        self.check_wire(wire)?;
        let mut out = self.clone();
        Ok(out.constrain(self.map.rows[wire], self.shift_bit(wire) ^ outcome).map(|w| (out, w)))
    }

    /// Restrict to `parity(vars·y) = target`; returns the amplitude weight.
    fn constrain(&mut self, vars: u64, target: bool) -> Option<f64> {
        if vars == 0 {
            return if target { None } else { Some(1.0) };
        }
        let i0 = vars.trailing_zeros() as usize;
        eliminate_var(&mut self.phase, Some(&mut self.map), i0, vars & !bit(i0), target);
        Some(std::f64::consts::FRAC_1_SQRT_2)
    }

    /// `⟨x|ψ⟩`.
    pub fn amplitude(&self, x: u64) -> Complex64 {
        let k = self.phase.nvars();
        let ech = Echelon::new(&self.map, k);
        let v = (x & mask_n(self.n)) ^ self.map.shift;
        if ech.checks.iter().any(|&h| parity(h & v)) {
            return Complex64::new(0.0, 0.0);
        }
        let mut y = 0u64;
        for (j, &h) in ech.solve.iter().enumerate() {
            if parity(h & v) {
                y |= bit(j);
            }
        }
        Scalar::new(-(k as i32), self.phase.eval(y)).to_complex()
    }

    /// `⟨self|other⟩`, exact including phase.
    pub fn inner(&self, other: &StabilizerState) -> Result<Complex64, StabilizerError> {
        Ok(self.inner_scalar(other)?.to_complex())
    }

    pub(crate) fn inner_scalar(&self, other: &StabilizerState) -> Result<Scalar, StabilizerError> {
        if self.n != other.n {
            return Err(StabilizerError::DimensionMismatch { left: self.n, right: other.n });
        }
        let ka = self.phase.nvars();
        let kb = other.phase.nvars();
        let ech = Echelon::new(&self.map, ka);

        // restrict `other` to the support of `self`
        let mut b = other.clone();
        for &h in &ech.checks {
            let vars = bits(h).fold(0u64, |acc, a| acc ^ b.map.rows[a]);
            let target = parity(h & (b.map.shift ^ self.map.shift));
            if b.constrain(vars, target).is_none() {
                return Ok(Scalar::ZERO);
            }
        }
        // express self's variables through b's remaining variables
        let kr = b.phase.nvars();
        let mut maps = vec![0u64; ka];
        let mut consts = 0u64;
        for (j, &h) in ech.solve.iter().enumerate() {
            maps[j] = bits(h).fold(0u64, |acc, a| acc ^ b.map.rows[a]);
            if parity(h & (b.map.shift ^ self.map.shift)) {
                consts |= bit(j);
            }
        }
        let mut conj = self.phase.pullback(&maps, consts, kr);
        conj.negate();
        conj.add_assign(&b.phase);
        let sum = exponential_sum(conj);
        Ok(sum.mul(Scalar::new(-((ka + kb) as i32), 0)))
    }

    /// Canonical representative: reduced support basis ordered by pivot wire.
    ///
    /// Returns the canonical state with zero global phase exponent together
    /// with the phase `e^{iπω/4}` it must be multiplied by to equal `self`.
    pub fn canonical(&self) -> (StabilizerState, Complex64) {
        let mut s = self.canonicalized();
        let omega = s.phase.omega;
        s.phase.omega = 0;
        (s, super::phase::omega_unit(omega))
    }

    fn canonicalized(&self) -> StabilizerState {
        let k = self.phase.nvars();
        // columns of G as wire masks, each tagged with its combination of variables
        let mut cols: Vec<(u64, u64)> = (0..k)
            .map(|j| {
                let wires = self.map.rows.iter().enumerate().filter(|(_, r)| *r & bit(j) != 0).fold(0u64, |m, (a, _)| m | bit(a));
                (wires, bit(j))
            })
            .collect();
        // Gauss-Jordan on columns, pivot = lowest wire
        for i in 0..k {
            let best = (i..k).min_by_key(|&c| cols[c].0.trailing_zeros()).unwrap();
            cols.swap(i, best);
            let low = cols[i].0 & cols[i].0.wrapping_neg();
            for c in 0..k {
                if c != i && cols[c].0 & low != 0 {
                    cols[c].0 ^= cols[i].0;
                    cols[c].1 ^= cols[i].1;
                }
            }
        }
        // shift reduced to zero on pivot wires
        let mut shift = self.map.shift;
        let mut y0 = 0u64;
        for &(wires, combo) in &cols {
            let low = wires & wires.wrapping_neg();
            if shift & low != 0 {
                shift ^= wires;
                y0 ^= combo;
            }
        }
        let mut maps = vec![0u64; k];
        for (jn, &(_, combo)) in cols.iter().enumerate() {
            for i in bits(combo) {
                maps[i] |= bit(jn);
            }
        }
        let phase = self.phase.pullback(&maps, y0, k);
        let mut rows = vec![0u64; self.n];
        for (jn, &(wires, _)) in cols.iter().enumerate() {
            for a in bits(wires) {
                rows[a] |= bit(jn);
            }
        }
        StabilizerState { n: self.n, map: AffineMap { shift, rows }, phase }
    }

    /// Dense amplitude vector (index bit `a` = wire `a`).
    pub fn to_dense(&self) -> Vec<Complex64> {
        let k = self.phase.nvars();
        let mut out = vec![Complex64::new(0.0, 0.0); 1usize << self.n];
        for y in 0..(1u64 << k) {
            let mut x = self.map.shift;
            for (a, &row) in self.map.rows.iter().enumerate() {
                if parity(row & y) {
                    x ^= bit(a);
                }
            }
            out[x as usize] = Scalar::new(-(k as i32), self.phase.eval(y)).to_complex();
        }
        out
    }
}

fn mask_n(n: usize) -> u64 {
    if n >= 64 {
        u64::MAX
    } else {
        bit(n) - 1
    }
}

/// A nonzero `u` with `G·u = 0` over the first `k` variables, if any.
fn kernel_vector(rows: &[u64], k: usize) -> Option<u64> {
    let mut basis: Vec<(u64, u64)> = Vec::new();
    for j in 0..k {
        let mut wires = rows.iter().enumerate().filter(|(_, r)| *r & bit(j) != 0).fold(0u64, |m, (a, _)| m | bit(a));
        let mut combo = bit(j);
        for &(bw, bc) in &basis {
            let low = bw & bw.wrapping_neg();
            if wires & low != 0 {
                wires ^= bw;
                combo ^= bc;
            }
        }
        if wires == 0 {
            return Some(combo);
        }
        // keep basis in reduced form so each pivot is unique
        let low = wires & wires.wrapping_neg();
        for b in basis.iter_mut() {
            if b.0 & low != 0 {
                b.0 ^= wires;
                b.1 ^= combo;
            }
        }
        basis.push((wires, combo));
    }
    None
}
