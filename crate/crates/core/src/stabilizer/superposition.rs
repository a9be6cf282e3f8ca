use indexmap::IndexMap;
use num_complex::Complex64;

use super::state::{Gate, StabilizerState};
use super::StabilizerError;

/// Below this relative magnitude a merged coefficient is treated as cancelled.
const CANCEL_TOL: f64 = 1e-14;

/// Norms under this value are treated as a numerically collapsed branch.
pub const COLLAPSE_TOL: f64 = 1e-12;

/// A coefficient-weighted sum of stabilizer states on the same wires.
#[derive(Clone, Debug)]
pub struct StabSuperposition {
    n: usize,
    terms: Vec<(Complex64, StabilizerState)>,
}

/// Result of measuring one wire of a superposition.
#[derive(Clone, Debug)]
pub struct Measured {
    pub outcome: bool,
    /// Probability of `outcome` given the pre-measurement state.
    pub probability: f64,
    /// Post-measurement state, renormalised.
    pub state: StabSuperposition,
}

impl StabSuperposition {
    pub fn new(terms: Vec<(Complex64, StabilizerState)>) -> Result<Self, StabilizerError> {
        let n = terms.first().ok_or(StabilizerError::Empty)?.1.num_wires();
        if let Some((_, bad)) = terms.iter().find(|(_, s)| s.num_wires() != n) {
            return Err(StabilizerError::DimensionMismatch { left: n, right: bad.num_wires() });
        }
        Ok(StabSuperposition { n, terms })
    }

    pub fn single(state: StabilizerState) -> Self {
        StabSuperposition { n: state.num_wires(), terms: vec![(Complex64::new(1.0, 0.0), state)] }
    }

    pub fn num_wires(&self) -> usize {
        self.n
    }

    /// Number of terms (the stabilizer rank of this representation).
    pub fn chi(&self) -> usize {
        self.terms.len()
    }

    pub fn terms(&self) -> &[(Complex64, StabilizerState)] {
        &self.terms
    }

    pub fn apply(&mut self, gate: Gate, wires: &[usize]) -> Result<(), StabilizerError> {
        for (_, s) in self.terms.iter_mut() {
            s.apply(gate, wires)?;
        }
        Ok(())
    }

    /// `Σ_{a,b} c_a* c_b ⟨φ_a|φ_b⟩`.
    pub fn norm_sqr(&self) -> f64 {
        let mut total = 0.0;
        for (i, (ci, si)) in self.terms.iter().enumerate() {
            total += ci.norm_sqr();
            for (cj, sj) in &self.terms[i + 1..] {
                let overlap = si.inner(sj).expect("terms share wire count");
                total += 2.0 * (ci.conj() * cj * overlap).re;
            }
        }
        total
    }

    /// `⟨x|ψ⟩`.
    pub fn amplitude(&self, x: u64) -> Complex64 {
        self.terms.iter().map(|(c, s)| c * s.amplitude(x)).sum()
    }

    pub fn to_dense(&self) -> Vec<Complex64> {
        let mut out = vec![Complex64::new(0.0, 0.0); 1usize << self.n];
        for (c, s) in &self.terms {
            for (o, a) in out.iter_mut().zip(s.to_dense()) {
                *o += c * a;
            }
        }
        out
    }

    pub fn scale(&mut self, factor: f64) {
        for (c, _) in self.terms.iter_mut() {
            *c *= factor;
        }
    }

    /// Unnormalised projection of `wire` onto `outcome`, merging terms that
    /// collapse onto the same stabilizer state. May return zero terms.
    pub fn project(&self, wire: usize, outcome: bool) -> Result<StabSuperposition, StabilizerError> {
        let mut merged: IndexMap<StabilizerState, Complex64> = IndexMap::with_capacity(self.terms.len());
        let mut scale = 0.0f64;
        for (c, s) in &self.terms {
            scale = scale.max(c.norm());
            if let Some((p, w)) = s.project(wire, outcome)? {
                let (canon, phase) = p.canonical();
                *merged.entry(canon).or_insert(Complex64::new(0.0, 0.0)) += c * phase * w;
            }
        }
        let terms = merged.into_iter().filter(|(_, c)| c.norm() > CANCEL_TOL * scale).map(|(s, c)| (c, s)).collect();
        Ok(StabSuperposition { n: self.n, terms })
    }

    /// Merge equal states, returning an equivalent (possibly shorter) superposition.
    pub fn compress(&self) -> StabSuperposition {
        let mut merged: IndexMap<StabilizerState, Complex64> = IndexMap::with_capacity(self.terms.len());
        let scale = self.terms.iter().map(|(c, _)| c.norm()).fold(0.0, f64::max);
        for (c, s) in &self.terms {
            let (canon, phase) = s.canonical();
            *merged.entry(canon).or_insert(Complex64::new(0.0, 0.0)) += c * phase;
        }
        let terms: Vec<_> = merged.into_iter().filter(|(_, c)| c.norm() > CANCEL_TOL * scale).map(|(s, c)| (c, s)).collect();
        if terms.is_empty() {
            return self.clone();
        }
        StabSuperposition { n: self.n, terms }
    }

    /// Exact unnormalised marginal weights `(‖P₀ψ‖², ‖P₁ψ‖²)` of `wire`.
    pub fn marginal(&self, wire: usize) -> Result<(f64, f64), StabilizerError> {
        let zero = self.project(wire, false)?;
        let one = self.project(wire, true)?;
        Ok((zero.norm_sqr(), one.norm_sqr()))
    }

    /// Measure `wire` in the computational basis using the uniform variate `u ∈ [0,1)`.
    pub fn measure(&self, wire: usize, u: f64) -> Result<Measured, StabilizerError> {
        let zero = self.project(wire, false)?;
        let one = self.project(wire, true)?;
        let (n0, n1) = (zero.norm_sqr().max(0.0), one.norm_sqr().max(0.0));
        let total = n0 + n1;
        if total < COLLAPSE_TOL {
            return Err(StabilizerError::NormCollapse(total));
        }
        let outcome = u * total >= n0;
        let (mut state, weight) = if outcome { (one, n1) } else { (zero, n0) };
        if weight < COLLAPSE_TOL * total || state.terms.is_empty() {
            return Err(StabilizerError::NormCollapse(weight));
        }
        state.scale(1.0 / weight.sqrt());
        Ok(Measured { outcome, probability: weight / total, state })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stabilizer::SingleQubit;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_state(n: usize, rng: &mut impl Rng) -> StabilizerState {
        let gates = [Gate::H, Gate::S, Gate::X, Gate::CX, Gate::CZ];
        let mut s = StabilizerState::zero(n).unwrap();
        for _ in 0..4 * n {
            let g = gates[rng.random_range(0..if n > 1 { 5 } else { 3 })];
            let a = rng.random_range(0..n);
            if g.arity() == 2 {
                s.apply(g, &[a, (a + rng.random_range(1..n)) % n]).unwrap();
            } else {
                s.apply(g, &[a]).unwrap();
            }
        }
        s
    }

    fn random_superposition(n: usize, chi: usize, rng: &mut impl Rng) -> StabSuperposition {
        let terms = (0..chi)
            .map(|_| (Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5), random_state(n, rng)))
            .collect();
        StabSuperposition::new(terms).unwrap()
    }

    #[test]
    fn marginals_match_dense() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for trial in 0..200 {
            let n = 1 + trial % 8;
            let chi = 1 + trial % 16;
            let psi = random_superposition(n, chi, &mut rng);
            let dense = psi.to_dense();
            let norm: f64 = dense.iter().map(|a| a.norm_sqr()).sum();
            assert!((psi.norm_sqr() - norm).abs() < 1e-9 * norm.max(1.0));
            let wire = rng.random_range(0..n);
            let (n0, n1) = psi.marginal(wire).unwrap();
            let d1: f64 = dense.iter().enumerate().filter(|(i, _)| i >> wire & 1 == 1).map(|(_, a)| a.norm_sqr()).sum();
            assert!((n1 - d1).abs() < 1e-9, "trial {trial}");
            assert!((n0 - (norm - d1)).abs() < 1e-9);
            for x in 0..(1u64 << n) {
                assert!((psi.amplitude(x) - dense[x as usize]).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn projection_merges_duplicates() {
        // |0⟩ + |+⟩ projected on 0 collapses to one term
        let zero = StabilizerState::zero(1).unwrap();
        let plus = StabilizerState::product(&[SingleQubit::Plus]).unwrap();
        let one = Complex64::new(1.0, 0.0);
        let psi = StabSuperposition::new(vec![(one, zero), (one, plus)]).unwrap();
        let p0 = psi.project(0, false).unwrap();
        assert_eq!(p0.chi(), 1);
        assert!((p0.terms()[0].0.norm() - (1.0 + std::f64::consts::FRAC_1_SQRT_2)).abs() < 1e-12);
        let p1 = psi.project(0, true).unwrap();
        assert_eq!(p1.chi(), 1);
    }

    #[test]
    fn cancelling_terms_collapse() {
        let zero = StabilizerState::zero(1).unwrap();
        let psi = StabSuperposition::new(vec![(Complex64::new(1.0, 0.0), zero.clone()), (Complex64::new(-1.0, 0.0), zero)]).unwrap();
        assert!(matches!(psi.measure(0, 0.3), Err(StabilizerError::NormCollapse(_))));
        assert!(StabSuperposition::new(vec![]).is_err());
    }

    #[test]
    fn measure_renormalises() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let psi = random_superposition(4, 6, &mut rng);
        let total = psi.norm_sqr();
        let (n0, _) = psi.marginal(2).unwrap();
        let m = psi.measure(2, 0.0).unwrap();
        assert!(!m.outcome || n0 < 1e-12);
        assert!((m.state.norm_sqr() - 1.0).abs() < 1e-9);
        if !m.outcome {
            assert!((m.probability - n0 / total).abs() < 1e-9);
        }
    }
}
