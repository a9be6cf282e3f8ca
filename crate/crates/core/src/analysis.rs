//! Closed-form cost model: magic counts after truncation, worst-case ranks,
//! memory lines, rank curves and budgeted simulability boundaries.

use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::SQRT_2;
use thiserror::Error;

use crate::ensembles::{nu_dep, nu_loss, nu_qubit, qubit_critical_p, NoiseCase};
use crate::sparsify::m0_threshold;
use crate::truncation::{truncation_threshold, TruncationError};

/// Bytes per stored complex coefficient.
pub const BYTES_PER_COEFF: f64 = 8.0;

/// One terabyte, `10¹²` bytes.
pub const TERABYTE: f64 = 1e12;

/// Default rank budget for boundaries.
pub const DEFAULT_BUDGET: f64 = 1_099_511_627_776.0; // 2^40

/// Copy counts beyond this are reported as unbounded.
const T_CAP: u64 = 1 << 40;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalysisError {
    #[error("p = {0} outside [0, 1]")]
    BadP(f64),
    #[error("δ = {0} outside (0, 1]")]
    BadDelta(f64),
    #[error("t must be at least 1")]
    ZeroCopies,
    #[error("budget {0} must be at least 1")]
    BadBudget(f64),
    #[error("budget {budget} is below the smallest rank {min} reachable for this case")]
    BudgetUnreachable { budget: f64, min: f64 },
    #[error("empty or reversed grid")]
    BadGrid,
    #[error(transparent)]
    Truncation(#[from] TruncationError),
}

/// Per-case closed forms.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CaseParams {
    pub case: NoiseCase,
}

impl CaseParams {
    pub fn new(case: NoiseCase) -> Self {
        CaseParams { case }
    }

    /// Probability that one drawn copy is magic.
    pub fn p_magic(&self, p: f64) -> f64 {
        match self.case {
            NoiseCase::QubitDephasing => {
                let r = p.min(1.0 - p);
                (1.0 - (2.0 + SQRT_2) * r).max(0.0)
            }
            NoiseCase::FermionLoss => 2.0 * p * p - 2.0 * p + 1.0,
            NoiseCase::FermionDephasing => 1.0,
        }
    }

    pub fn nu(&self, p: f64) -> f64 {
        match self.case {
            NoiseCase::QubitDephasing => nu_qubit(),
            NoiseCase::FermionLoss => nu_loss(p),
            NoiseCase::FermionDephasing => nu_dep(p),
        }
    }

    /// Noise values where the cost structure changes.
    pub fn critical_points(&self) -> Vec<f64> {
        match self.case {
            NoiseCase::QubitDephasing => vec![qubit_critical_p(), 1.0 - qubit_critical_p()],
            NoiseCase::FermionLoss => vec![0.0],
            NoiseCase::FermionDephasing => vec![0.5],
        }
    }

    /// `(easy, hard)` ends of the interval searched by [`boundary_p`]. Rank
    /// falls from `hard` to `easy`; for loss only up to single steps in `f`.
    pub fn search_interval(&self) -> (f64, f64) {
        match self.case {
            NoiseCase::QubitDephasing => (qubit_critical_p(), 0.0),
            NoiseCase::FermionLoss => (0.0, 1.0),
            NoiseCase::FermionDephasing => (0.5, 0.0),
        }
    }
}

fn check(p: f64, delta: f64) -> Result<(), AnalysisError> {
    if !(0.0..=1.0).contains(&p) {
        return Err(AnalysisError::BadP(p));
    }
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(AnalysisError::BadDelta(delta));
    }
    Ok(())
}

/// Largest retained magic count: the truncation threshold at `δ₁ = δ/2`.
pub fn f_count(case: NoiseCase, t: u64, p: f64, delta: f64) -> Result<u64, AnalysisError> {
    check(p, delta)?;
    if t == 0 {
        return Err(AnalysisError::ZeroCopies);
    }
    let pm = CaseParams::new(case).p_magic(p).clamp(0.0, 1.0);
    Ok(truncation_threshold(t, pm, delta / 2.0)?.k)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RankReport {
    pub case: NoiseCase,
    pub t: u64,
    pub p: f64,
    pub delta: f64,
    pub f: u64,
    /// `None` when unbounded.
    pub m0: Option<u64>,
    pub log2_rank: f64,
    pub worst_rank: f64,
    pub bytes: f64,
    pub sparsified: bool,
}

/// `log2` of `min(2^f, ⌈16 ν^{−2f} δ^{−2}⌉)`, taking `2^f` whenever `f ≤ m₀`.
pub fn worst_rank(case: NoiseCase, t: u64, p: f64, delta: f64) -> Result<RankReport, AnalysisError> {
    let f = f_count(case, t, p, delta)?;
    let nu = CaseParams::new(case).nu(p);
    let m0 = m0_threshold(nu, delta * delta / 4.0);
    let sparsified = m0.is_some_and(|m0| f > m0);
    let log2_rank = if sparsified {
        let x = 4.0 - 2.0 * f as f64 * nu.log2() - 2.0 * delta.log2();
        let x = if x < 52.0 { x.exp2().ceil().log2() } else { x };
        x.min(f as f64)
    } else {
        f as f64
    };
    let worst_rank = log2_rank.exp2();
    Ok(RankReport { case, t, p, delta, f, m0, log2_rank, worst_rank, bytes: BYTES_PER_COEFF * worst_rank, sparsified })
}

/// Number of coefficients that fit in `bytes`.
pub fn memory_line(bytes: f64) -> f64 {
    (bytes / BYTES_PER_COEFF).floor()
}

/// `from, from+step, …`, always ending exactly at `to`.
pub fn grid(from: f64, to: f64, step: f64) -> Result<Vec<f64>, AnalysisError> {
    if step.is_nan() || step <= 0.0 || to < from {
        return Err(AnalysisError::BadGrid);
    }
    let count = ((to - from) / step + 1e-9).floor() as usize;
    let mut out: Vec<f64> = (0..=count).map(|i| from + i as f64 * step).collect();
    if to - out[count] > 1e-9 * step {
        out.push(to);
    } else {
        out[count] = to;
    }
    Ok(out)
}

pub fn rank_curve(case: NoiseCase, t: u64, delta: f64, ps: &[f64]) -> Result<Vec<RankReport>, AnalysisError> {
    ps.par_iter().map(|&p| worst_rank(case, t, p, delta)).collect()
}

fn fmt_num(x: f64) -> String {
    if x.abs() >= 1e16 {
        format!("{x:e}")
    } else {
        format!("{x}")
    }
}

pub const CSV_HEADER: &str = "p,f,m0,log2_rank,bytes";

pub fn csv_row(r: &RankReport) -> String {
    let m0 = r.m0.map_or("inf".to_string(), |m| m.to_string());
    format!("{},{},{},{},{}", r.p, r.f, m0, r.log2_rank, fmt_num(r.bytes))
}

pub fn to_csv(rows: &[RankReport]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&csv_row(r));
        out.push('\n');
    }
    out
}

/// Adjacent grid points between which `worst_rank` crosses `capacity`.
pub fn grid_crossings(rows: &[RankReport], capacity: f64) -> Vec<(f64, f64)> {
    let cap = capacity.log2();
    rows.windows(2).filter(|w| (w[0].log2_rank > cap) != (w[1].log2_rank > cap)).map(|w| (w[0].p, w[1].p)).collect()
}

fn check_budget(budget: f64) -> Result<(), AnalysisError> {
    if budget >= 1.0 {
        Ok(())
    } else {
        Err(AnalysisError::BadBudget(budget))
    }
}

/// The noise value nearest the hard end at which `worst_rank ≤ budget`.
pub fn boundary_p(case: NoiseCase, t: u64, delta: f64, budget: f64) -> Result<f64, AnalysisError> {
    check_budget(budget)?;
    let (mut easy, mut hard) = CaseParams::new(case).search_interval();
    let fits = |p: f64| worst_rank(case, t, p, delta).map(|r| r.worst_rank <= budget);
    if !fits(easy)? {
        let min = worst_rank(case, t, easy, delta)?.worst_rank;
        return Err(AnalysisError::BudgetUnreachable { budget, min });
    }
    if fits(hard)? {
        return Ok(hard);
    }
    for _ in 0..200 {
        let mid = 0.5 * (easy + hard);
        if mid == easy || mid == hard {
            break;
        }
        if fits(mid)? {
            easy = mid;
        } else {
            hard = mid;
        }
    }
    Ok(easy)
}

/// Largest `t` with `worst_rank ≤ budget`; `None` when no finite `t` exceeds it.
pub fn boundary_t(case: NoiseCase, p: f64, delta: f64, budget: f64) -> Result<Option<u64>, AnalysisError> {
    check_budget(budget)?;
    let fits = |t: u64| worst_rank(case, t, p, delta).map(|r| r.worst_rank <= budget);
    if !fits(1)? {
        return Ok(Some(0));
    }
    let mut lo = 1u64;
    let mut hi = 2u64;
    while fits(hi)? {
        if hi >= T_CAP {
            return Ok(None);
        }
        lo = hi;
        hi = (hi * 2).min(T_CAP);
    }
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if fits(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(Some(lo))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensembles::{magic_form_dep, magic_form_loss, Sign};

    const CASES: [NoiseCase; 3] = NoiseCase::ALL;

    #[test]
    fn memory_line_examples() {
        assert_eq!(memory_line(8.0), 1.0);
        assert_eq!(memory_line(80.0), 10.0);
        assert_eq!(memory_line(TERABYTE), 1.25e11);
        assert!((memory_line(TERABYTE).log2() - 36.863).abs() < 1e-3);
    }

    #[test]
    fn f_count_examples() {
        let pc = qubit_critical_p();
        assert_eq!(f_count(NoiseCase::QubitDephasing, 100, pc + 0.01, 0.01).unwrap(), 0);
        for t in [1, 17, 60] {
            assert_eq!(f_count(NoiseCase::FermionDephasing, t, 0.2, 0.01).unwrap(), t);
        }
        let k = f_count(NoiseCase::QubitDephasing, 100, 0.1, 0.01).unwrap();
        let pm = 1.0 - (2.0 + SQRT_2) * 0.1;
        assert_eq!(k, truncation_threshold(100, pm, 0.005).unwrap().k);
        assert!(f_count(NoiseCase::FermionLoss, 0, 0.1, 0.01).is_err());
        assert!(f_count(NoiseCase::FermionLoss, 5, 1.1, 0.01).is_err());
    }

    #[test]
    fn nu_matches_forms() {
        for i in 1..100 {
            let p = i as f64 / 100.0;
            let params = CaseParams::new(NoiseCase::FermionLoss);
            assert!((params.nu(p) - magic_form_loss(p, Sign::Plus).unwrap().nu).abs() < 1e-12);
            if i != 50 {
                let dp = CaseParams::new(NoiseCase::FermionDephasing);
                assert!((dp.nu(p) - magic_form_dep(p, Sign::Minus).unwrap().nu).abs() < 1e-12);
            }
        }
        let dp = CaseParams::new(NoiseCase::FermionDephasing);
        assert!((dp.nu(0.0) - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-15);
        assert_eq!(dp.nu(0.5), 1.0);
        for i in 0..50 {
            let (a, b) = (i as f64 / 100.0, (i + 1) as f64 / 100.0);
            assert!(dp.nu(a) < dp.nu(b));
            let lp = CaseParams::new(NoiseCase::FermionLoss);
            assert!(lp.nu(2.0 * a) > lp.nu(2.0 * b));
        }
    }

    #[test]
    fn report_invariants() {
        for case in CASES {
            for t in [1u64, 10, 40, 100] {
                for i in 0..=50 {
                    let p = i as f64 / 50.0;
                    let r = worst_rank(case, t, p, 0.01).unwrap();
                    assert!(r.worst_rank >= 1.0);
                    assert!((r.worst_rank.log2() - r.log2_rank).abs() < 1e-9);
                    if !r.sparsified {
                        assert_eq!(r.worst_rank, (r.f as f64).exp2());
                    }
                    assert_eq!(r.bytes, 8.0 * r.worst_rank);
                }
            }
        }
    }

    #[test]
    fn rank_monotone_toward_easy_end() {
        for case in [NoiseCase::QubitDephasing, NoiseCase::FermionDephasing] {
            let (easy, hard) = CaseParams::new(case).search_interval();
            for t in [10u64, 40, 100, 200] {
                let mut last = f64::INFINITY;
                for i in 0..=400 {
                    let p = hard + (easy - hard) * i as f64 / 400.0;
                    let r = worst_rank(case, t, p, 0.01).unwrap().log2_rank;
                    assert!(r <= last + 1e-12, "{case} t={t} p={p}");
                    last = r;
                }
            }
        }
    }

    // f is integer-valued, so each unit step in f can lift the loss rank by
    // at most one factor ν⁻² ≤ 2 even though ν alone pushes it down.
    #[test]
    fn loss_rank_upticks_bounded_by_one_step() {
        let (easy, hard) = CaseParams::new(NoiseCase::FermionLoss).search_interval();
        for t in [10u64, 40, 100, 200] {
            let mut prev = worst_rank(NoiseCase::FermionLoss, t, hard, 0.01).unwrap();
            let mut upticks = 0;
            for i in 1..=1000 {
                let p = hard + (easy - hard) * i as f64 / 1000.0;
                let r = worst_rank(NoiseCase::FermionLoss, t, p, 0.01).unwrap();
                if r.log2_rank > prev.log2_rank + 1e-12 {
                    upticks += 1;
                    assert_eq!(r.f, prev.f + 1, "t={t} p={p}");
                    assert!(r.log2_rank - prev.log2_rank <= 1.0 + 1e-12);
                }
                prev = r;
            }
            assert!(upticks > 0 || t == 10);
            let first = worst_rank(NoiseCase::FermionLoss, t, hard, 0.01).unwrap().log2_rank;
            assert!(prev.log2_rank <= first);
        }
    }

    #[test]
    fn grid_includes_endpoint() {
        let g = grid(0.0, 0.2929, 0.002).unwrap();
        assert_eq!(*g.last().unwrap(), 0.2929);
        assert!((g[g.len() - 2] - 0.292).abs() < 1e-12);
        assert_eq!(grid(0.0, 1.0, 0.25).unwrap(), vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        assert!(grid(1.0, 0.0, 0.1).is_err());
    }

    #[test]
    fn symmetric_cases_mirror() {
        for case in [NoiseCase::QubitDephasing, NoiseCase::FermionDephasing] {
            for i in 0..=100 {
                let p = i as f64 / 200.0;
                let a = worst_rank(case, 60, p, 0.01).unwrap();
                let b = worst_rank(case, 60, 1.0 - p, 0.01).unwrap();
                assert_eq!((a.f, a.m0), (b.f, b.m0));
                assert!((a.log2_rank - b.log2_rank).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn plateau_and_threshold_limits() {
        let r = worst_rank(NoiseCase::FermionLoss, 40, 1e-9, 0.01).unwrap();
        assert!((r.log2_rank - 160_000f64.log2()).abs() < 1e-3);
        assert!((r.log2_rank - 17.29).abs() < 0.01);
        let pc = qubit_critical_p();
        assert_eq!(worst_rank(NoiseCase::QubitDephasing, 100, pc - 1e-12, 0.01).unwrap().worst_rank, 1.0);
        assert_eq!(worst_rank(NoiseCase::QubitDephasing, 100, pc, 0.01).unwrap().worst_rank, 1.0);
    }

    #[test]
    fn qubit_curve_shape() {
        let ps = grid(0.0, 0.2929, 0.002).unwrap();
        let rows = rank_curve(NoiseCase::QubitDephasing, 100, 0.01, &ps).unwrap();
        assert_eq!(rows.len(), ps.len());
        assert!(rows.windows(2).all(|w| w[1].log2_rank <= w[0].log2_rank));
        assert_eq!(rows.last().unwrap().log2_rank, 0.0);
        let csv = to_csv(&rows);
        assert!(csv.starts_with("p,f,m0,log2_rank,bytes\n0,"));
        assert_eq!(csv.lines().count(), rows.len() + 1);
    }

    #[test]
    fn terabyte_crossings() {
        let cap = memory_line(TERABYTE);
        let quotes = [
            (NoiseCase::QubitDephasing, 100, 0.0809),
            (NoiseCase::QubitDephasing, 200, 0.1993),
            (NoiseCase::FermionLoss, 40, 0.8320),
            (NoiseCase::FermionLoss, 60, 0.4402),
            (NoiseCase::FermionDephasing, 40, 0.1015),
            (NoiseCase::FermionDephasing, 60, 0.1453),
        ];
        for (case, t, want) in quotes {
            let p = boundary_p(case, t, 0.01, cap).unwrap();
            assert!((p - want).abs() <= 0.02, "{case} t={t}: {p}");
            let rows = rank_curve(case, t, 0.01, &grid(0.0, 1.0, 0.001).unwrap()).unwrap();
            let bracket = grid_crossings(&rows, cap);
            assert!(bracket.iter().any(|&(a, b)| a.min(b) - 1e-12 <= p && p <= a.max(b) + 1e-12));
        }
    }

    #[test]
    fn boundary_examples() {
        let pc = qubit_critical_p();
        let p = boundary_p(NoiseCase::QubitDephasing, 50, 0.01, 1.0).unwrap();
        assert!((p - pc).abs() < 1e-9);
        assert_eq!(boundary_t(NoiseCase::QubitDephasing, pc, 0.01, 1.0).unwrap(), None);
        assert!(boundary_p(NoiseCase::FermionDephasing, 50, 0.01, 100.0).is_err());
        assert!(boundary_p(NoiseCase::FermionLoss, 50, 0.01, 0.5).is_err());
        assert_eq!(boundary_t(NoiseCase::FermionDephasing, 0.5, 0.01, DEFAULT_BUDGET).unwrap(), None);
    }

    #[test]
    fn boundaries_are_consistent() {
        for case in CASES {
            for t in [30u64, 100, 400] {
                let p = boundary_p(case, t, 0.01, DEFAULT_BUDGET).unwrap();
                let back = boundary_t(case, p, 0.01, DEFAULT_BUDGET).unwrap();
                assert!(back.is_none_or(|tb| tb >= t), "{case} t={t} p={p} back={back:?}");
            }
        }
    }
}
