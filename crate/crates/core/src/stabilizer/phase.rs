//! Quadratic phase functions over binary variables and exact exponential sums.
//!
//! A [`QuadPhase`] on `k` binary variables `y` is the function
//!
//! ```text
//! f(y) = e^{iπ ω/4} · i^{Σ_j l_j y_j} · (−1)^{Σ_{i<j} Q_ij y_i y_j}
//! ```
//!
//! with `l_j ∈ Z4`, `Q` a symmetric zero-diagonal binary matrix and `ω ∈ Z8`.
//! The triple `(l, Q, ω)` is unique for a given function, which is what makes
//! canonical stabilizer states comparable by value.

use num_complex::Complex64;
use std::f64::consts::{FRAC_1_SQRT_2, SQRT_2};

#[inline]
pub(crate) fn bit(j: usize) -> u64 {
    1u64 << j
}

#[inline]
pub(crate) fn parity(x: u64) -> bool {
    x.count_ones() & 1 == 1
}

/// Iterate over the set bit positions of `mask`, lowest first.
#[inline]
pub(crate) fn bits(mut mask: u64) -> impl Iterator<Item = usize> {
    std::iter::from_fn(move || {
        if mask == 0 {
            None
        } else {
            let j = mask.trailing_zeros() as usize;
            mask &= mask - 1;
            Some(j)
        }
    })
}

/// Move bit `from` of `mask` to position `to` (bit `to` must be clear).
#[inline]
pub(crate) fn move_bit(mask: u64, from: usize, to: usize) -> u64 {
    if from == to || mask & bit(from) == 0 {
        mask
    } else {
        (mask & !bit(from)) | bit(to)
    }
}

/// An exact scalar `0` or `√2^sqrt2 · e^{iπ ω/4}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Scalar {
    pub zero: bool,
    pub sqrt2: i32,
    pub omega: u8,
}

impl Scalar {
    pub const ONE: Scalar = Scalar { zero: false, sqrt2: 0, omega: 0 };
    pub const ZERO: Scalar = Scalar { zero: true, sqrt2: 0, omega: 0 };

    pub fn new(sqrt2: i32, omega: u8) -> Self {
        Scalar { zero: false, sqrt2, omega: omega & 7 }
    }

    #[allow(clippy::should_implement_trait)]
    pub fn mul(self, other: Scalar) -> Scalar {
        if self.zero || other.zero {
            return Scalar::ZERO;
        }
        Scalar::new(self.sqrt2 + other.sqrt2, self.omega.wrapping_add(other.omega))
    }

    pub fn to_complex(self) -> Complex64 {
        if self.zero {
            return Complex64::new(0.0, 0.0);
        }
        let magnitude = SQRT_2.powi(self.sqrt2);
        omega_unit(self.omega) * magnitude
    }
}

/// `e^{iπ ω/4}` with exact components.
pub fn omega_unit(omega: u8) -> Complex64 {
    let h = FRAC_1_SQRT_2;
    match omega & 7 {
        0 => Complex64::new(1.0, 0.0),
        1 => Complex64::new(h, h),
        2 => Complex64::new(0.0, 1.0),
        3 => Complex64::new(-h, h),
        4 => Complex64::new(-1.0, 0.0),
        5 => Complex64::new(-h, -h),
        6 => Complex64::new(0.0, -1.0),
        _ => Complex64::new(h, -h),
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub(crate) struct QuadPhase {
    pub lin: Vec<u8>,
    pub quad: Vec<u64>,
    pub omega: u8,
}

impl QuadPhase {
    pub fn new(k: usize) -> Self {
        QuadPhase { lin: vec![0; k], quad: vec![0; k], omega: 0 }
    }

    pub fn nvars(&self) -> usize {
        self.lin.len()
    }

    pub fn push_var(&mut self) -> usize {
        self.lin.push(0);
        self.quad.push(0);
        self.lin.len() - 1
    }

    /// Multiply by `i^{m · (c ⊕ ⊕_{j∈mask} y_j)}`.
    pub fn add_parity(&mut self, mask: u64, c: bool, m: u8) {
        let m = m & 3;
        if m == 0 {
            return;
        }
        // parity = e1 − 2 e2 (mod 4), the constant counting as one more item
        if c {
            self.omega = self.omega.wrapping_add(2 * m) & 7;
        }
        for j in bits(mask) {
            self.lin[j] = (self.lin[j] + m) & 3;
        }
        if m & 1 == 1 {
            for j in bits(mask) {
                self.quad[j] ^= mask & !bit(j);
                if c {
                    self.lin[j] = (self.lin[j] + 2) & 3;
                }
            }
        }
    }

    /// Multiply by `(−1)^{(ca ⊕ a·y)(cb ⊕ b·y)}`.
    pub fn add_product(&mut self, a: u64, ca: bool, b: u64, cb: bool) {
        if ca && cb {
            self.omega = self.omega.wrapping_add(4) & 7;
        }
        if ca {
            self.add_parity(b, false, 2);
        }
        if cb {
            self.add_parity(a, false, 2);
        }
        for j in bits(a & b) {
            self.lin[j] = (self.lin[j] + 2) & 3;
        }
        for j in bits(a | b) {
            let mut toggle = 0;
            if a & bit(j) != 0 {
                toggle ^= b;
            }
            if b & bit(j) != 0 {
                toggle ^= a;
            }
            self.quad[j] ^= toggle & !bit(j);
        }
    }

    /// Exponent of the value at `y`, in units of `π/4`.
    pub fn eval(&self, y: u64) -> u8 {
        let mut e = self.omega as u32;
        let mut pairs = 0u32;
        for j in bits(y) {
            e += 2 * self.lin[j] as u32;
            pairs += (self.quad[j] & y).count_ones();
        }
        // each unordered pair was counted twice
        e += 4 * ((pairs / 2) & 1);
        (e & 7) as u8
    }

    pub fn negate(&mut self) {
        for l in &mut self.lin {
            *l = (4 - *l) & 3;
        }
        self.omega = (8 - self.omega) & 7;
    }

    pub fn add_assign(&mut self, other: &QuadPhase) {
        debug_assert_eq!(self.nvars(), other.nvars());
        for (l, o) in self.lin.iter_mut().zip(&other.lin) {
            *l = (*l + o) & 3;
        }
        for (q, o) in self.quad.iter_mut().zip(&other.quad) {
            *q ^= o;
        }
        self.omega = self.omega.wrapping_add(other.omega) & 7;
    }

    /// The same function expressed in new variables `y'`, where old variable
    /// `j` equals `consts_j ⊕ parity(maps[j] · y')`.
    pub fn pullback(&self, maps: &[u64], consts: u64, new_k: usize) -> QuadPhase {
        debug_assert_eq!(maps.len(), self.nvars());
        let mut out = QuadPhase::new(new_k);
        out.omega = self.omega;
        for (j, &map) in maps.iter().enumerate() {
            out.add_parity(map, consts & bit(j) != 0, self.lin[j]);
        }
        for i in 0..self.nvars() {
            for j in bits(self.quad[i] & !((bit(i) << 1).wrapping_sub(1))) {
                out.add_product(maps[i], consts & bit(i) != 0, maps[j], consts & bit(j) != 0);
            }
        }
        out
    }

    /// Detach variable `j` from all quadratic couplings, returning its
    /// linear coefficient and neighbour mask.
    fn detach(&mut self, j: usize) -> (u8, u64) {
        let l = self.lin[j];
        let nb = self.quad[j];
        for i in bits(nb) {
            self.quad[i] &= !bit(j);
        }
        self.lin[j] = 0;
        self.quad[j] = 0;
        (l, nb)
    }

    /// Replace variable `i0` by `c ⊕ parity(mask · y)`; `i0` is left detached.
    pub fn substitute(&mut self, i0: usize, mask: u64, c: bool) {
        debug_assert_eq!(mask & bit(i0), 0);
        let (l, nb) = self.detach(i0);
        self.add_parity(mask, c, l);
        self.add_product(nb, false, mask, c);
    }

    /// Remove a detached variable by moving the last variable into its slot.
    /// Returns the index that was moved (so the caller can remap its masks).
    pub fn remove_var(&mut self, j: usize) -> usize {
        let last = self.nvars() - 1;
        debug_assert!(self.lin[j] == 0 && self.quad[j] == 0);
        if j != last {
            self.lin[j] = self.lin[last];
            self.quad[j] = self.quad[last];
            for q in self.quad.iter_mut() {
                *q = move_bit(*q, last, j);
            }
        }
        self.lin.pop();
        self.quad.pop();
        last
    }
}

/// Affine support map `x = shift ⊕ G·y`; `rows[a]` is the mask of variables
/// feeding wire `a`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub(crate) struct AffineMap {
    pub shift: u64,
    pub rows: Vec<u64>,
}

impl AffineMap {
    pub fn substitute(&mut self, i0: usize, mask: u64, c: bool) {
        for (a, row) in self.rows.iter_mut().enumerate() {
            if *row & bit(i0) != 0 {
                *row = (*row & !bit(i0)) ^ mask;
                if c {
                    self.shift ^= bit(a);
                }
            }
        }
    }

    pub fn remap(&mut self, from: usize, to: usize) {
        for row in self.rows.iter_mut() {
            *row = move_bit(*row, from, to);
        }
    }

    pub fn mentions(&self, j: usize) -> bool {
        self.rows.iter().any(|r| r & bit(j) != 0)
    }
}

fn remove_var(phase: &mut QuadPhase, map: Option<&mut AffineMap>, j: usize) {
    let moved = phase.remove_var(j);
    if let Some(map) = map {
        debug_assert!(!map.mentions(j));
        map.remap(moved, j);
    }
}

/// Substitute `y_{i0} = c ⊕ parity(mask·y)` in both phase and support, then drop `i0`.
pub(crate) fn eliminate_var(
    phase: &mut QuadPhase,
    mut map: Option<&mut AffineMap>,
    i0: usize,
    mask: u64,
    c: bool,
) {
    phase.substitute(i0, mask, c);
    if let Some(map) = map.as_deref_mut() {
        map.substitute(i0, mask, c);
    }
    remove_var(phase, map, i0);
}

/// Sum the phase over variable `j`, which must not feed any wire.
///
/// Removes `j` (and possibly one more variable fixed by the resulting linear
/// constraint) and returns the scalar factor produced by the sum.
pub(crate) fn sum_out(phase: &mut QuadPhase, mut map: Option<&mut AffineMap>, j: usize) -> Scalar {
    let (l, nb) = phase.detach(j);
    if nb == 0 {
        remove_var(phase, map, j);
        return match l {
            0 => Scalar::new(2, 0),
            1 => Scalar::new(1, 1),
            2 => Scalar::ZERO,
            _ => Scalar::new(1, 7),
        };
    }
    if l & 1 == 1 {
        // 1 + i^l (−1)^L = √2 e^{±iπ/4} (∓i)^L
        let (factor, m) = if l == 1 { (Scalar::new(1, 1), 3) } else { (Scalar::new(1, 7), 1) };
        phase.add_parity(nb, false, m);
        remove_var(phase, map, j);
        return factor;
    }
    // 1 + (−1)^{l/2 + L} = 2·[L = l/2]
    let last = phase.nvars() - 1;
    let nb = move_bit(nb, last, j);
    remove_var(phase, map.as_deref_mut(), j);
    let i0 = nb.trailing_zeros() as usize;
    eliminate_var(phase, map, i0, nb & !bit(i0), l == 2);
    Scalar::new(2, 0)
}

/// `Σ_y f(y)` over all assignments of the phase's variables.
pub(crate) fn exponential_sum(mut phase: QuadPhase) -> Scalar {
    let mut acc = Scalar::new(0, phase.omega);
    phase.omega = 0;
    while phase.nvars() > 0 {
        let j = phase.nvars() - 1;
        acc = acc.mul(sum_out(&mut phase, None, j));
        if acc.zero {
            return acc;
        }
    }
    acc.mul(Scalar::new(0, phase.omega))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute(phase: &QuadPhase) -> Complex64 {
        let k = phase.nvars();
        (0..1u64 << k).map(|y| omega_unit(phase.eval(y))).sum()
    }

    fn random_phase(k: usize, seed: u64) -> QuadPhase {
        let mut s = seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) | 1;
        let mut next = || {
            s ^= s << 13;
            s ^= s >> 7;
            s ^= s << 17;
            s
        };
        let mut p = QuadPhase::new(k);
        p.omega = (next() & 7) as u8;
        for j in 0..k {
            p.lin[j] = (next() & 3) as u8;
        }
        for i in 0..k {
            for j in (i + 1)..k {
                if next() & 1 == 1 {
                    p.quad[i] ^= bit(j);
                    p.quad[j] ^= bit(i);
                }
            }
        }
        p
    }

    #[test]
    fn exponential_sum_matches_enumeration() {
        for k in 0..8 {
            for seed in 0..40 {
                let p = random_phase(k, seed * 31 + k as u64);
                let exact = exponential_sum(p.clone()).to_complex();
                let expected = brute(&p);
                assert!((exact - expected).norm() < 1e-9, "k={k} seed={seed}: {exact} vs {expected}");
            }
        }
    }

    #[test]
    fn pullback_agrees_pointwise() {
        let p = random_phase(5, 7);
        let maps = [0b011, 0b110, 0b001, 0b111, 0b100];
        let consts = 0b10101;
        let q = p.pullback(&maps, consts, 3);
        for y in 0..8u64 {
            let mut old = 0u64;
            for (j, m) in maps.iter().enumerate() {
                if parity(m & y) ^ (consts & bit(j) != 0) {
                    old |= bit(j);
                }
            }
            assert_eq!(q.eval(y), p.eval(old));
        }
    }

    #[test]
    fn parity_phase_is_exact() {
        let mut p = QuadPhase::new(4);
        p.add_parity(0b1011, true, 1);
        for y in 0..16u64 {
            let x = parity(y & 0b1011) ^ true;
            assert_eq!(p.eval(y), if x { 2 } else { 0 });
        }
    }
}
