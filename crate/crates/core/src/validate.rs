//! Self-checks runnable from the command line. Each check compares a module
//! against the dense oracle or a closed form and reports one line.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::analysis::{self, memory_line, TERABYTE};
use crate::circuit::{gadgetize, CircuitIR, Op};
use crate::denseoracle::{self as oracle, DensityMatrix, Ket, KrausChannel};
use crate::ensembles::{self, magic_form_loss, magic_form_qubit, NoiseCase, Sign};
use crate::pipeline;
use crate::sparsify::{self, SubspaceZ2};
use crate::stabilizer::{Gate, StabSuperposition, StabilizerState};
use crate::truncation::{chernoff_bound, exact_binomial_tail, truncation_threshold};

pub type CheckResult = Result<String, String>;

pub struct Check {
    pub suite: &'static str,
    pub name: &'static str,
    pub run: fn() -> CheckResult,
}

pub const SUITES: [&str; 7] = ["stabilizer", "circuit", "ensembles", "truncation", "sparsify", "pipeline", "analysis"];

pub fn checks() -> Vec<Check> {
    vec![
        Check { suite: "stabilizer", name: "clifford-amplitudes", run: clifford_amplitudes },
        Check { suite: "stabilizer", name: "superposition-marginals", run: superposition_marginals },
        Check { suite: "circuit", name: "t-gadget-distribution", run: t_gadget },
        Check { suite: "ensembles", name: "qubit-reconstruction", run: qubit_reconstruction },
        Check { suite: "ensembles", name: "qubit-stabilizer-window", run: qubit_window },
        Check { suite: "ensembles", name: "fermion-reconstruction", run: fermion_reconstruction },
        Check { suite: "ensembles", name: "fermion-identities", run: fermion_identities },
        Check { suite: "truncation", name: "chernoff-dominance", run: chernoff_dominance },
        Check { suite: "truncation", name: "plan-tail", run: plan_tail },
        Check { suite: "sparsify", name: "subspace-fidelity", run: subspace_fidelity },
        Check { suite: "pipeline", name: "small-circuit-tvd", run: small_circuit_tvd },
        Check { suite: "analysis", name: "terabyte-crossings", run: terabyte_crossings },
        Check { suite: "analysis", name: "loss-plateau", run: loss_plateau },
    ]
}

/// Run the checks of `suite` (or every check for `"all"`); `None` if the suite is unknown.
pub fn run_suite(suite: &str) -> Option<Vec<(&'static str, CheckResult)>> {
    if suite != "all" && !SUITES.contains(&suite) {
        return None;
    }
    Some(checks().into_iter().filter(|c| suite == "all" || c.suite == suite).map(|c| (c.name, (c.run)())).collect())
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn clifford_amplitudes() -> CheckResult {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let gates = [Gate::H, Gate::S, Gate::Sdg, Gate::X, Gate::Y, Gate::Z, Gate::CX, Gate::CZ, Gate::Swap];
    let trials = 300;
    for trial in 0..trials {
        let n = 1 + trial % 6;
        let mut s = StabilizerState::zero(n).map_err(|e| e.to_string())?;
        let mut dense = oracle::basis_ket(1 << n, 0);
        for _ in 0..6 * n {
            let g = gates[rng.random_range(0..if n > 1 { gates.len() } else { 6 })];
            let a = rng.random_range(0..n);
            let wires = if g.arity() == 2 { vec![a, (a + rng.random_range(1..n)) % n] } else { vec![a] };
            s.apply(g, &wires).map_err(|e| e.to_string())?;
            oracle::apply_op(&mut dense, &Op::Clifford { gate: g, wires });
        }
        let err = s.to_dense().iter().zip(dense.iter()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        ensure(err < 1e-12, || format!("trial {trial}: amplitude error {err:e}"))?;
    }
    Ok(format!("{trials} random circuits, phases exact"))
}

fn superposition_marginals() -> CheckResult {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst = 0.0f64;
    for trial in 0..100 {
        let n = 1 + trial % 8;
        let chi = 1 + trial % 16;
        let terms = (0..chi)
            .map(|_| {
                let mut s = StabilizerState::zero(n).unwrap();
                for _ in 0..3 * n {
                    let a = rng.random_range(0..n);
                    match rng.random_range(0..4) {
                        0 => s.apply(Gate::H, &[a]).unwrap(),
                        1 => s.apply(Gate::S, &[a]).unwrap(),
                        2 if n > 1 => s.apply(Gate::CX, &[a, (a + 1) % n]).unwrap(),
                        _ => s.apply(Gate::X, &[a]).unwrap(),
                    }
                }
                (Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5), s)
            })
            .collect();
        let psi = StabSuperposition::new(terms).map_err(|e| e.to_string())?;
        let dense = psi.to_dense();
        let wire = rng.random_range(0..n);
        let (n0, n1) = psi.marginal(wire).map_err(|e| e.to_string())?;
        let d1: f64 = dense.iter().enumerate().filter(|(i, _)| i >> wire & 1 == 1).map(|(_, a)| a.norm_sqr()).sum();
        let d0: f64 = dense.iter().map(|a| a.norm_sqr()).sum::<f64>() - d1;
        worst = worst.max((n0 - d0).abs()).max((n1 - d1).abs());
    }
    ensure(worst < 1e-9, || format!("marginal error {worst:e}"))?;
    Ok(format!("max marginal error {worst:.1e}"))
}

fn t_gadget() -> CheckResult {
    let direct = CircuitIR::from_json(
        r#"{"n":3,"gates":[{"op":"H","wires":[0]},{"op":"T","wires":[0]},{"op":"CX","wires":[0,1]},
            {"op":"H","wires":[1]},{"op":"TDG","wires":[1]},{"op":"CZ","wires":[1,2]},{"op":"H","wires":[2]},
            {"op":"T","wires":[2]},{"op":"H","wires":[2]}],"final_measure":[0,1,2]}"#,
    )
    .map_err(|e| e.to_string())?;
    let gadget = gadgetize(&direct).map_err(|e| e.to_string())?;
    let want = oracle::circuit_distribution(&direct, &oracle::product_inputs(3, 0, &[])).map_err(|e| e.to_string())?;
    let got = oracle::circuit_distribution(&gadget, &oracle::product_inputs(3, gadget.t, &[(1.0, oracle::h_state())]))
        .map_err(|e| e.to_string())?;
    let err = want.iter().zip(&got).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    ensure(err < 1e-12, || format!("distribution error {err:e}"))?;
    Ok(format!("{} gadgets, max error {err:.1e}", gadget.t))
}

fn dephased_h(p: f64) -> DensityMatrix {
    oracle::apply_channel(&DensityMatrix::pure(&oracle::h_state()).unwrap(), &KrausChannel::dephasing(p).unwrap()).unwrap()
}

fn dephased_psi4(p: f64) -> DensityMatrix {
    let mut rho = DensityMatrix::pure(&oracle::psi4()).unwrap();
    for mode in 0..4 {
        rho = oracle::apply_channel(&rho, &KrausChannel::dephasing(p).unwrap().on_wire(mode, 4).unwrap()).unwrap();
    }
    rho
}

/// Largest Frobenius error of `case` against its channel over `steps + 1` grid points.
pub fn reconstruction_error(case: NoiseCase, steps: usize) -> Result<f64, String> {
    let mut worst = 0.0f64;
    for i in 0..=steps {
        let p = i as f64 / steps as f64;
        let e = case.ensemble(p).map_err(|e| e.to_string())?;
        let rho = e.density().map_err(|e| e.to_string())?;
        let target = match case {
            NoiseCase::QubitDephasing => dephased_h(p),
            NoiseCase::FermionLoss => oracle::loss_channel_fock(&oracle::psi4(), p).map_err(|e| e.to_string())?,
            NoiseCase::FermionDephasing => dephased_psi4(p),
        };
        worst = worst.max(rho.frobenius_distance(&target));
    }
    Ok(worst)
}

fn qubit_reconstruction() -> CheckResult {
    let err = reconstruction_error(NoiseCase::QubitDephasing, 1000)?;
    ensure(err <= 1e-10, || format!("Frobenius error {err:e}"))?;
    Ok(format!("1001 grid points, max Frobenius error {err:.1e}"))
}

fn fermion_reconstruction() -> CheckResult {
    let loss = reconstruction_error(NoiseCase::FermionLoss, 100)?;
    let dep = reconstruction_error(NoiseCase::FermionDephasing, 100)?;
    ensure(loss.max(dep) <= 1e-10, || format!("Frobenius errors {loss:e}, {dep:e}"))?;
    Ok(format!("loss {loss:.1e}, dephasing {dep:.1e}"))
}

fn qubit_window() -> CheckResult {
    let pc = ensembles::qubit_critical_p();
    let nonneg = |p: f64| ensembles::all_stabilizer_weights(p).iter().all(|&w| w >= 0.0);
    for i in 0..=1000 {
        let p = pc + (1.0 - 2.0 * pc) * i as f64 / 1000.0;
        let e = ensembles::qubit_dephasing_ensemble(p).map_err(|e| e.to_string())?;
        ensure(e.p_magic() == 0.0 && e.entries.iter().all(|x| x.weight >= 0.0), || {
            format!("negative weight inside the window at p={p}")
        })?;
    }
    ensure(!nonneg(pc - 1e-6) && !nonneg(1.0 - pc + 1e-6), || "no negative weight just outside the window".into())?;
    Ok(format!("window [{pc:.6}, {:.6}]", 1.0 - pc))
}

fn fermion_identities() -> CheckResult {
    let mut worst = 0.0f64;
    for p in [0.0, 0.1, 0.25, 0.4] {
        for plus in [true, false] {
            for j in 0..2 {
                worst = worst.max(1.0 - oracle::check_omega_product_form(p, plus, j).map_err(|e| e.to_string())?);
            }
        }
    }
    for p in [0.1, 0.3, 0.5, 0.9] {
        let n = 2.0 * p * p - 2.0 * p + 1.0;
        for (sign, s) in [(Sign::Plus, 1.0), (Sign::Minus, -1.0)] {
            let want: Ket = (oracle::fock_ket("0000").unwrap() * Complex64::new(1.0 - p, 0.0) + oracle::psi4() * Complex64::new(s * p, 0.0))
                / Complex64::new(n.sqrt(), 0.0);
            let got = magic_form_loss(p, sign).map_err(|e| e.to_string())?.to_dense();
            worst = worst.max(1.0 - oracle::fidelity(&want, &got));
        }
    }
    ensure(worst <= 1e-10, || format!("fidelity defect {worst:e}"))?;
    Ok(format!("max fidelity defect {worst:.1e}"))
}

fn chernoff_dominance() -> CheckResult {
    let mut count = 0;
    for t in 1..=60u64 {
        for i in 1..20 {
            let p = i as f64 / 20.0;
            for k in (t as f64 * p).ceil() as u64..=t {
                let (exact, bound) = (exact_binomial_tail(t, k, p), chernoff_bound(t, k, p));
                ensure(exact <= bound * (1.0 + 1e-9), || format!("t={t} k={k} p={p}: {exact:e} > {bound:e}"))?;
                count += 1;
            }
        }
    }
    Ok(format!("{count} (t, k, p) triples"))
}

fn plan_tail() -> CheckResult {
    let mut count = 0;
    for t in [1u64, 10, 50, 200] {
        for i in 0..20 {
            let p = i as f64 / 20.0;
            for d in [0.5, 0.1, 1e-3, 1e-6] {
                let plan = truncation_threshold(t, p, d).map_err(|e| e.to_string())?;
                ensure(plan.exact_tail() <= d * (1.0 + 1e-12), || format!("t={t} p={p} δ₁={d}: tail {}", plan.exact_tail()))?;
                count += 1;
            }
        }
    }
    ensure(truncation_threshold(10, 0.5, 0.01).map_err(|e| e.to_string())?.k == 9, || "k(10, 0.5, 0.01) != 9".into())?;
    Ok(format!("{count} plans"))
}

fn subspace_fidelity() -> CheckResult {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let form = magic_form_qubit();
    let m = 10;
    let forms = vec![form.clone(); m];
    let target = oracle::product_ket(&vec![form.to_dense(); m]);
    let mut worst = 1.0f64;
    for _ in 0..10 {
        let r = sparsify::find_subspace(m, form.nu, 0.05, &mut rng);
        let e = sparsify::expand_superposition(&r.subspace, &forms).map_err(|e| e.to_string())?;
        let f = oracle::fidelity(&target, &e.to_dense(&forms));
        ensure((f - r.fidelity).abs() < 1e-9, || format!("fidelity {f} vs formula {}", r.fidelity))?;
        ensure(f >= 0.95, || format!("fidelity {f} < 0.95"))?;
        worst = worst.min(f);
    }
    let full = sparsify::expand_superposition(&SubspaceZ2::full(3), &forms[..3]).map_err(|e| e.to_string())?;
    ensure(full.chi() == 8, || "full expansion size".into())?;
    Ok(format!("m={m}, δ₂=0.05, min fidelity {worst:.4}"))
}

fn small_circuit_tvd() -> CheckResult {
    let c = CircuitIR::from_json(
        r#"{"n":2,"t":2,"gates":[{"op":"H","wires":[0]},{"op":"CX","wires":[2,0]},{"op":"H","wires":[3]},
            {"op":"CZ","wires":[1,3]},{"op":"H","wires":[1]},{"op":"CX","wires":[3,2]}],"final_measure":[0,1,2,3]}"#,
    )
    .map_err(|e| e.to_string())?;
    let (p, delta, shots) = (0.05, 0.2, 4000u64);
    let traces = pipeline::run(c.clone(), NoiseCase::QubitDephasing, p, delta, shots, 17, None).map_err(|e| e.to_string())?;
    let exact = oracle::circuit_distribution(&c, &oracle::product_inputs(2, 2, &oracle::dephased_h_components(p)))
        .map_err(|e| e.to_string())?;
    let tvd = oracle::tvd(&pipeline::histogram(&traces, 4), &exact).map_err(|e| e.to_string())?;
    let limit = delta + 3.0 * (16.0 / shots as f64).sqrt();
    ensure(tvd <= limit, || format!("TVD {tvd} > {limit}"))?;
    Ok(format!("TVD {tvd:.4} ≤ {limit:.4}"))
}

/// `(case, t, quoted crossing)` for the one-terabyte line at `δ = 0.01`.
pub const TERABYTE_QUOTES: [(NoiseCase, u64, f64); 6] = [
    (NoiseCase::QubitDephasing, 100, 0.0809),
    (NoiseCase::QubitDephasing, 200, 0.1993),
    (NoiseCase::FermionLoss, 40, 0.8320),
    (NoiseCase::FermionLoss, 60, 0.4402),
    (NoiseCase::FermionDephasing, 40, 0.1015),
    (NoiseCase::FermionDephasing, 60, 0.1453),
];

fn terabyte_crossings() -> CheckResult {
    let cap = memory_line(TERABYTE);
    let mut found = Vec::new();
    for (case, t, want) in TERABYTE_QUOTES {
        let p = analysis::boundary_p(case, t, 0.01, cap).map_err(|e| e.to_string())?;
        ensure((p - want).abs() <= 0.02, || format!("{case} t={t}: crossing {p} vs {want}"))?;
        found.push(format!("{p:.4}"));
    }
    Ok(format!("crossings {}", found.join(" ")))
}

fn loss_plateau() -> CheckResult {
    let r = analysis::worst_rank(NoiseCase::FermionLoss, 60, 1e-6, 0.01).map_err(|e| e.to_string())?;
    ensure((r.log2_rank - 17.29).abs() < 0.01, || format!("plateau log2 rank {}", r.log2_rank))?;
    Ok(format!("log2 rank {:.3}", r.log2_rank))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_suite_passes() {
        for suite in SUITES {
            for (name, res) in run_suite(suite).unwrap() {
                assert!(res.is_ok(), "{suite}/{name}: {res:?}");
            }
        }
        assert!(run_suite("nope").is_none());
        assert_eq!(run_suite("all").unwrap().len(), checks().len());
    }
}
