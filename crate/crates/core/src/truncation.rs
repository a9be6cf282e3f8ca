//! Binomial truncation of the magic-draw count: KL divergence, Chernoff and
//! exact tails, the threshold `k`, and the combined TVD budget.

use serde::Serialize;
use statrs::function::factorial::ln_binomial;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TruncationError {
    #[error("t must be at least 1")]
    ZeroCopies,
    #[error("probability {0} outside [0, 1]")]
    BadProbability(f64),
    #[error("δ₁ = {0} outside (0, 1]")]
    BadDelta(f64),
    #[error("k = {k} exceeds t = {t}")]
    BadK { t: u64, k: u64 },
    #[error("Pr[X ≤ k] vanishes")]
    EmptyAcceptance,
}

/// `D(a‖p) = a ln(a/p) + (1−a) ln((1−a)/(1−p))`, natural log, `0 ln 0 = 0`.
/// Returns `+∞` when `p ∈ {0, 1}` and `a ≠ p`.
pub fn kl_divergence(a: f64, p: f64) -> f64 {
    let term = |x: f64, y: f64| {
        if x == 0.0 {
            0.0
        } else if y == 0.0 {
            f64::INFINITY
        } else {
            x * (x / y).ln()
        }
    };
    (term(a, p) + term(1.0 - a, 1.0 - p)).max(0.0)
}

fn log_sum_exp(terms: impl Iterator<Item = f64>) -> f64 {
    let v: Vec<f64> = terms.filter(|x| *x > f64::NEG_INFINITY).collect();
    let Some(max) = v.iter().copied().reduce(f64::max) else {
        return f64::NEG_INFINITY;
    };
    max + v.iter().map(|x| (x - max).exp()).sum::<f64>().ln()
}

fn ln_pmf(t: u64, j: u64, p: f64) -> f64 {
    ln_binomial(t, j) + j as f64 * p.ln() + (t - j) as f64 * (1.0 - p).ln()
}

/// `Pr[X ≥ k+1]` for `X ~ Bin(t, p)`, summed in log space over whichever
/// side of the distribution is smaller.
pub fn exact_binomial_tail(t: u64, k: u64, p: f64) -> f64 {
    if k >= t || p <= 0.0 {
        return 0.0;
    }
    if p >= 1.0 {
        return 1.0;
    }
    if (k + 1) as f64 >= t as f64 * p {
        log_sum_exp((k + 1..=t).map(|j| ln_pmf(t, j, p))).exp().min(1.0)
    } else {
        (1.0 - log_sum_exp((0..=k).map(|j| ln_pmf(t, j, p))).exp()).clamp(0.0, 1.0)
    }
}

/// `exp(−t D((k+1)/t ‖ p))`; zero when `k ≥ t`.
pub fn chernoff_bound(t: u64, k: u64, p: f64) -> f64 {
    if k >= t {
        return 0.0;
    }
    (-(t as f64) * kl_divergence((k + 1) as f64 / t as f64, p)).exp()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TruncationPlan {
    pub t: u64,
    pub p_magic: f64,
    pub delta1: f64,
    /// Largest accepted number of magic draws.
    pub k: u64,
}

impl TruncationPlan {
    pub fn exact_tail(&self) -> f64 {
        exact_binomial_tail(self.t, self.k, self.p_magic)
    }

    pub fn chernoff_bound(&self) -> f64 {
        chernoff_bound(self.t, self.k, self.p_magic)
    }

    /// Whether a draw with `m` magic entries is kept.
    pub fn accepts(&self, m: u64) -> bool {
        m <= self.k
    }
}

/// Smallest `k ≥ t·p` with `D((k+1)/t ‖ p) ≥ ln(1/δ₁)/t`, or `t` if none is below `t`.
pub fn truncation_threshold(t: u64, p_magic: f64, delta1: f64) -> Result<TruncationPlan, TruncationError> {
    if t == 0 {
        return Err(TruncationError::ZeroCopies);
    }
    if !(0.0..=1.0).contains(&p_magic) {
        return Err(TruncationError::BadProbability(p_magic));
    }
    if !(delta1 > 0.0 && delta1 <= 1.0) {
        return Err(TruncationError::BadDelta(delta1));
    }
    let plan = |k| TruncationPlan { t, p_magic, delta1, k };
    if p_magic == 0.0 {
        return Ok(plan(0));
    }
    if p_magic == 1.0 {
        return Ok(plan(t));
    }
    let k0 = ((t as f64 * p_magic) - 1e-9).ceil().max(0.0) as u64;
    if k0 >= t {
        return Ok(plan(t));
    }
    let rhs = (1.0 / delta1).ln() / t as f64;
    // D((k+1)/t‖p) grows with k once (k+1)/t exceeds p, so the first hit can be bisected
    let ok = |k: u64| kl_divergence((k + 1) as f64 / t as f64, p_magic) >= rhs;
    let (mut lo, mut hi) = (k0, t);
    while lo < hi {
        let mid = lo + (hi - lo) / 2;
        if mid < t && ok(mid) {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    Ok(plan(lo.min(t)))
}

/// `δ₁ + Pr[m₀ < X ≤ k]/Pr[X ≤ k] · √δ₂` with `X ~ Bin(t, p_magic)`.
/// Pass `u64::MAX` for an unbounded `m₀`.
pub fn tvd_bound(plan: &TruncationPlan, m0: u64, delta2: f64) -> Result<f64, TruncationError> {
    if plan.k > plan.t {
        return Err(TruncationError::BadK { t: plan.t, k: plan.k });
    }
    let (t, k, p) = (plan.t, plan.k, plan.p_magic);
    let accept = 1.0 - exact_binomial_tail(t, k, p);
    if accept <= 0.0 {
        return Err(TruncationError::EmptyAcceptance);
    }
    let middle = if m0 >= k { 0.0 } else { (exact_binomial_tail(t, m0, p) - exact_binomial_tail(t, k, p)).max(0.0) };
    Ok(plan.delta1 + middle / accept * delta2.max(0.0).sqrt())
}
