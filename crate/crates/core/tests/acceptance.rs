//! Acceptance criteria 1-9. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any fails.

use std::f64::consts::FRAC_PI_8;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use magicsim::analysis::{self, memory_line, CaseParams, TERABYTE};
use magicsim::circuit::{gadgetize, CircuitIR};
use magicsim::denseoracle::{self as oracle, Ket};
use magicsim::ensembles::{self, magic_form_dep, magic_form_loss, magic_form_qubit, FreeState, NoiseCase, Sign};
use magicsim::pipeline;
use magicsim::sparsify;
use magicsim::truncation::{chernoff_bound, exact_binomial_tail, truncation_threshold};
use magicsim::validate::{reconstruction_error, TERABYTE_QUOTES};

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(elapsed: Duration, limit: Duration) -> Result<(), String> {
    ensure(elapsed <= limit, || format!("runtime {:.1}s exceeds {:.0}s", elapsed.as_secs_f64(), limit.as_secs_f64()))
}

/// 1. Ensembles reproduce the channel output on a 0.001 grid, Frobenius ≤ 1e-10, < 10 s.
fn ensemble_exactness() -> Outcome {
    let start = Instant::now();
    let mut parts = Vec::new();
    for case in NoiseCase::ALL {
        let err = reconstruction_error(case, 1000)?;
        ensure(err <= 1e-10, || format!("{case}: Frobenius error {err:e}"))?;
        parts.push(format!("{case} {err:.1e}"));
    }
    within(start.elapsed(), Duration::from_secs(10))?;
    Ok(format!("{} ({:.2}s)", parts.join(", "), start.elapsed().as_secs_f64()))
}

/// 2. All-stabilizer weights are nonnegative exactly on [p_c, 1 − p_c].
fn stabilizer_window() -> Outcome {
    let pc = ensembles::qubit_critical_p();
    ensure((pc - 0.292893).abs() < 1e-6, || format!("p_c = {pc}"))?;
    // weights below 1e-14 in magnitude are rounding at the edge
    let nonneg = |p: f64| ensembles::all_stabilizer_weights(p).iter().all(|&w| w > -1e-14);
    let step = 1e-6;
    for edge in [pc, 1.0 - pc] {
        for i in -50i32..=50 {
            let p = edge + i as f64 * step;
            let inside = p >= pc - 1e-15 && p <= 1.0 - pc + 1e-15;
            ensure(nonneg(p) == inside, || format!("p={p}: nonnegative={} but inside={inside}", nonneg(p)))?;
        }
    }
    for i in 0..=10_000 {
        let p = pc + (1.0 - 2.0 * pc) * i as f64 / 10_000.0;
        let e = ensembles::qubit_dephasing_ensemble(p).map_err(|e| e.to_string())?;
        ensure(e.p_magic() == 0.0 && e.entries.iter().all(|x| x.weight >= 0.0), || format!("ensemble at p={p}"))?;
    }
    for p in [0.0, 0.1, pc - step, 1.0 - pc + step, 0.9, 1.0] {
        ensure(!nonneg(p), || format!("no negative weight at p={p}"))?;
    }
    Ok(format!("window [{pc:.9}, {:.9}], negativity one 1e-6 step outside", 1.0 - pc))
}

/// 3. Exact tail ≤ Chernoff bound for t ≤ 200, k ≥ tp; plans meet δ₁. < 30 s.
fn chernoff_suite() -> Outcome {
    let start = Instant::now();
    let mut count = 0u64;
    for t in 1..=200u64 {
        for i in 1..100 {
            let p = i as f64 / 100.0;
            for k in (t as f64 * p - 1e-9).ceil() as u64..=t {
                let (exact, bound) = (exact_binomial_tail(t, k, p), chernoff_bound(t, k, p));
                ensure(exact <= bound * (1.0 + 1e-9) + 1e-300, || format!("t={t} k={k} p={p}: {exact:e} > {bound:e}"))?;
                count += 1;
            }
        }
    }
    let mut plans = 0u64;
    for t in 1..=200u64 {
        for i in 0..=100 {
            let p = i as f64 / 100.0;
            for d in [0.5, 0.1, 0.01, 1e-4, 1e-8] {
                let plan = truncation_threshold(t, p, d).map_err(|e| e.to_string())?;
                // equality is attainable (e.g. t=2, k=1: tail p² = δ₁), so allow rounding only
                ensure(plan.exact_tail() <= d * (1.0 + 1e-12), || format!("t={t} p={p} δ₁={d}: tail {}", plan.exact_tail()))?;
                plans += 1;
            }
        }
    }
    within(start.elapsed(), Duration::from_secs(30))?;
    Ok(format!("{count} tails, {plans} plans ({:.2}s)", start.elapsed().as_secs_f64()))
}

/// 4. Random-subspace guarantee for m ∈ {8, 10, 12}, δ₂ ∈ {0.05, 0.01}, 100 repetitions. < 2 min.
fn subspace_guarantee() -> Outcome {
    let start = Instant::now();
    let form = magic_form_qubit();
    let nu = FRAC_PI_8.cos();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut parts = Vec::new();
    for m in [8usize, 10, 12] {
        let forms = vec![form.clone(); m];
        let target = oracle::product_ket(&vec![form.to_dense(); m]);
        for d2 in [0.05, 0.01] {
            let cap = 4.0 * nu.powi(-2 * m as i32) / d2;
            let mut worst = 1.0f64;
            let mut max_rank = 0u64;
            let mut sparse = 0;
            for _ in 0..100 {
                let r = sparsify::find_subspace(m, nu, d2, &mut rng);
                let l = r.subspace.dim() as f64;
                if !r.full_space {
                    sparse += 1;
                    let limit = (1.0 + l.exp2() * nu.powi(2 * m as i32)) * (1.0 + d2 / 2.0);
                    ensure(r.z <= limit, || format!("m={m} δ₂={d2}: Z {} > {limit}", r.z))?;
                }
                ensure(r.rank() as f64 <= cap, || format!("m={m} δ₂={d2}: rank {} > {cap}", r.rank()))?;
                let e = sparsify::expand_superposition(&r.subspace, &forms).map_err(|e| e.to_string())?;
                let f = oracle::fidelity(&target, &e.to_dense(&forms));
                ensure(f >= 1.0 - d2, || format!("m={m} δ₂={d2}: fidelity {f}"))?;
                worst = worst.min(f);
                max_rank = max_rank.max(r.rank());
            }
            parts.push(format!("m={m} δ₂={d2}: min F {worst:.4}, rank ≤ {max_rank}{}", if sparse == 0 { " (exact)" } else { "" }));
        }
    }
    within(start.elapsed(), Duration::from_secs(120))?;
    Ok(format!("{} ({:.1}s)", parts.join("; "), start.elapsed().as_secs_f64()))
}

/// 5. Fermionic decompositions: φ± reconstruction, ω± product form, two-mode round-trip.
fn fermion_identities() -> Outcome {
    let mut worst = 0.0f64;
    for i in 1..=20 {
        let p = i as f64 / 20.0;
        let n = 2.0 * p * p - 2.0 * p + 1.0;
        for (sign, s) in [(Sign::Plus, 1.0), (Sign::Minus, -1.0)] {
            let want: Ket = (oracle::fock_ket("0000").unwrap() * Complex64::new(1.0 - p, 0.0) + oracle::psi4() * Complex64::new(s * p, 0.0))
                / Complex64::new(n.sqrt(), 0.0);
            let got = magic_form_loss(p, sign).map_err(|e| e.to_string())?.to_dense();
            worst = worst.max(1.0 - oracle::fidelity(&want, &got));
        }
    }
    ensure(worst <= 1e-10, || format!("φ± fidelity defect {worst:e}"))?;
    let loss_defect = worst;

    let mut worst = 0.0f64;
    for p in [0.0, 0.1, 0.25, 0.4] {
        for plus in [true, false] {
            for j in 0..2u8 {
                worst = worst.max(1.0 - oracle::check_omega_product_form(p, plus, j).map_err(|e| e.to_string())?);
            }
            let form = magic_form_dep(p, if plus { Sign::Plus } else { Sign::Minus }).map_err(|e| e.to_string())?;
            for branch in [&form.psi0, &form.psi1] {
                let FreeState::EvenPairs(pairs) = branch else { return Err("ω branch is not a pair product".into()) };
                for &(a, b) in pairs {
                    let z = Complex64::new(0.0, 0.0);
                    let v = Ket::from_vec(vec![Complex64::new(a, 0.0), z, z, Complex64::new(b, 0.0)]);
                    oracle::check_two_mode_even_gaussian(&v).map_err(|e| format!("p={p}: {e}"))?;
                }
            }
        }
    }
    ensure(worst <= 1e-10, || format!("ω± product-form defect {worst:e}"))?;
    let dep_defect = worst;

    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let (a, b) = (
            Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5),
            Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5),
        );
        let norm = (a.norm_sqr() + b.norm_sqr()).sqrt();
        let z = Complex64::new(0.0, 0.0);
        let v = Ket::from_vec(vec![a / norm, z, z, b / norm]);
        let (theta, phi) = oracle::check_two_mode_even_gaussian(&v).map_err(|e| e.to_string())?;
        worst = worst.max(1.0 - oracle::fidelity(&oracle::two_mode_even(theta, phi), &v));
    }
    ensure(worst <= 1e-10, || format!("round-trip defect {worst:e}"))?;
    Ok(format!("φ± {loss_defect:.1e}, ω± {dep_defect:.1e}, 1000 round-trips {worst:.1e}"))
}

fn random_clifford_gates(n: usize, depth: usize, rng: &mut ChaCha8Rng) -> Vec<String> {
    let mut out = Vec::new();
    for _ in 0..depth {
        let a = rng.random_range(0..n);
        let g = match rng.random_range(0..5) {
            0 => format!(r#"{{"op":"H","wires":[{a}]}}"#),
            1 => format!(r#"{{"op":"S","wires":[{a}]}}"#),
            2 => format!(r#"{{"op":"CX","wires":[{a},{}]}}"#, (a + rng.random_range(1..n)) % n),
            3 => format!(r#"{{"op":"CZ","wires":[{a},{}]}}"#, (a + rng.random_range(1..n)) % n),
            _ => format!(r#"{{"op":"X","wires":[{a}]}}"#),
        };
        out.push(g);
    }
    out
}

/// Four data qubits, a T on each after a Hadamard layer, then a random Clifford.
fn tvd_circuit(with_t: bool) -> CircuitIR {
    let mut rng = ChaCha8Rng::seed_from_u64(606);
    let mut gates: Vec<String> = (0..4).map(|a| format!(r#"{{"op":"H","wires":[{a}]}}"#)).collect();
    gates.extend(random_clifford_gates(4, 6, &mut rng));
    if with_t {
        gates.extend((0..4).map(|a| format!(r#"{{"op":"T","wires":[{a}]}}"#)));
    }
    gates.extend(random_clifford_gates(4, 12, &mut rng));
    let text = format!(r#"{{"n":4,"gates":[{}],"final_measure":[0,1,2,3]}}"#, gates.join(","));
    let c = CircuitIR::from_json(&text).expect("valid circuit");
    if with_t {
        gadgetize(&c).expect("gadgetize")
    } else {
        c
    }
}

/// 6. End-to-end TVD against the dense oracle. < 5 min.
fn end_to_end_tvd() -> Outcome {
    let start = Instant::now();
    let (delta, shots) = (0.2, 20_000u64);
    let noise = 3.0 * (16.0 / shots as f64).sqrt();
    let c = tvd_circuit(true);
    ensure(c.t == 4 && c.total_wires() == 8, || "gadgetized circuit shape".into())?;
    let mut parts = Vec::new();
    for p in [0.02, 0.1, 0.25] {
        let traces = pipeline::run(c.clone(), NoiseCase::QubitDephasing, p, delta, shots, 42, None).map_err(|e| e.to_string())?;
        let exact = oracle::circuit_distribution(&c, &oracle::product_inputs(4, 4, &oracle::dephased_h_components(p)))
            .map_err(|e| e.to_string())?;
        let tvd = oracle::tvd(&pipeline::histogram(&traces, 4), &exact).map_err(|e| e.to_string())?;
        ensure(tvd <= delta + noise, || format!("p={p}: TVD {tvd} > {}", delta + noise))?;
        parts.push(format!("p={p} TVD {tvd:.4}"));
    }
    let control = tvd_circuit(false);
    let traces = pipeline::run(control.clone(), NoiseCase::QubitDephasing, 0.1, delta, shots, 43, None).map_err(|e| e.to_string())?;
    let exact = oracle::circuit_distribution(&control, &oracle::product_inputs(4, 0, &[])).map_err(|e| e.to_string())?;
    let tvd = oracle::tvd(&pipeline::histogram(&traces, 4), &exact).map_err(|e| e.to_string())?;
    ensure(tvd <= noise, || format!("t=0 control TVD {tvd} > {noise}"))?;
    parts.push(format!("t=0 TVD {tvd:.4}"));
    within(start.elapsed(), Duration::from_secs(300))?;
    Ok(format!("{} (limit {:.4}, {:.1}s)", parts.join(", "), delta + noise, start.elapsed().as_secs_f64()))
}

/// 7. One-terabyte crossings at δ = 0.01 within ±0.02 of the quoted values, and the loss plateau.
fn terabyte_numerics() -> Outcome {
    let cap = memory_line(TERABYTE);
    ensure(cap == 1.25e11, || format!("1 TB line {cap}"))?;
    let ps = analysis::grid(0.0, 1.0, 0.0001).map_err(|e| e.to_string())?;
    let mut parts = Vec::new();
    let mut misses = Vec::new();
    for (case, t, want) in TERABYTE_QUOTES {
        let p = analysis::boundary_p(case, t, 0.01, cap).map_err(|e| e.to_string())?;
        let rows = analysis::rank_curve(case, t, 0.01, &ps).map_err(|e| e.to_string())?;
        let bracket = analysis::grid_crossings(&rows, cap)
            .into_iter()
            .find(|&(a, b)| a.min(b) - 1e-12 <= p && p <= a.max(b) + 1e-12)
            .ok_or_else(|| format!("{case} t={t}: no grid bracket around {p}"))?;
        let line = format!("{case} t={t}: {p:.4} in [{:.4}, {:.4}] vs {want}", bracket.0, bracket.1);
        if (p - want).abs() > 0.02 {
            misses.push(line.clone());
        }
        parts.push(line);
    }
    ensure(misses.is_empty(), || format!("outside ±0.02: {}", misses.join("; ")))?;
    let plateau = analysis::worst_rank(NoiseCase::FermionLoss, 60, 1e-9, 0.01).map_err(|e| e.to_string())?;
    ensure((plateau.log2_rank - 17.29).abs() < 0.005, || format!("plateau log2 rank {}", plateau.log2_rank))?;
    Ok(format!("{}; plateau 2^{:.3}", parts.join("; "), plateau.log2_rank))
}

/// 8. Scaling of budgeted boundaries at t ∈ {10³, 4·10³, 1.6·10⁴}, budget 2^40.
fn scaling_laws() -> Outcome {
    let budget = analysis::DEFAULT_BUDGET;
    let delta = 0.01;
    let ts = [1000u64, 4000, 16000];
    let bp = |case, t| analysis::boundary_p(case, t, delta, budget).map_err(|e| e.to_string());

    let loss: Vec<f64> = ts.iter().map(|&t| bp(NoiseCase::FermionLoss, t)).collect::<Result<_, _>>()?;
    let loss_ratios = [loss[0] / loss[1], loss[1] / loss[2]];
    for r in loss_ratios {
        ensure((r / 2.0 - 1.0).abs() <= 0.15, || format!("loss p* ratio {r} vs 2 (p* = {loss:?})"))?;
    }

    let dep: Vec<f64> = ts.iter().map(|&t| bp(NoiseCase::FermionDephasing, t).map(|p| 0.5 - p)).collect::<Result<_, _>>()?;
    let dep_ratio = dep[0] / dep[2];
    ensure((dep_ratio / 2.0 - 1.0).abs() <= 0.15, || format!("dephasing (1/2 − p*) ratio {dep_ratio} vs 2 ({dep:?})"))?;

    let params = CaseParams::new(NoiseCase::QubitDephasing);
    let qubit: Vec<f64> =
        ts.iter().map(|&t| bp(NoiseCase::QubitDephasing, t).map(|p| t as f64 * params.p_magic(p))).collect::<Result<_, _>>()?;
    let spread = qubit.iter().cloned().fold(0.0, f64::max) / qubit.iter().cloned().fold(f64::INFINITY, f64::min);
    ensure(spread <= 1.2, || format!("qubit t·p_magic spread {spread} ({qubit:?})"))?;

    let bt = |p: f64| analysis::boundary_t(NoiseCase::FermionLoss, p, delta, budget).map_err(|e| e.to_string());
    let (hi, lo) = (bt(0.1)?, bt(0.05)?);
    let (Some(hi), Some(lo)) = (hi, lo) else { return Err("loss t* unbounded".into()) };
    let t_ratio = lo as f64 / hi as f64;
    ensure((t_ratio / 4.0 - 1.0).abs() <= 0.15, || format!("loss t* ratio {t_ratio} vs 4 ({lo}/{hi})"))?;

    Ok(format!(
        "loss p* ratios {:.3} {:.3}; dephasing (1/2−p*) ratio {dep_ratio:.3}; qubit t·p_magic spread {spread:.3}; loss t* ratio {t_ratio:.3}",
        loss_ratios[0], loss_ratios[1]
    ))
}

/// 9. `sample` output is byte-identical with 1 and 8 worker threads.
fn determinism() -> Outcome {
    let dir = std::path::PathBuf::from(env!("CARGO_TARGET_TMPDIR"));
    let path = dir.join("acceptance_determinism.json");
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut gates: Vec<String> = (0..3).map(|a| format!(r#"{{"op":"H","wires":[{a}]}}"#)).collect();
    gates.extend((0..3).map(|a| format!(r#"{{"op":"T","wires":[{a}]}}"#)));
    gates.extend(random_clifford_gates(3, 10, &mut rng));
    std::fs::write(&path, format!(r#"{{"n":3,"gates":[{}],"final_measure":[0,1,2]}}"#, gates.join(","))).map_err(|e| e.to_string())?;
    let run = |threads: &str| {
        Command::new(env!("CARGO_BIN_EXE_magicsim"))
            .args(["--threads", threads, "sample", "--circuit"])
            .arg(&path)
            .args(["--p", "0.05", "--delta", "0.2", "--shots", "3000", "--seed", "1234", "--emit-traces"])
            .output()
            .map_err(|e| e.to_string())
    };
    let (a, b) = (run("1")?, run("8")?);
    ensure(a.status.success() && b.status.success(), || format!("exit {:?} / {:?}: {}", a.status, b.status, String::from_utf8_lossy(&a.stderr)))?;
    ensure(!a.stdout.is_empty() && a.stdout == b.stdout, || "outputs differ between 1 and 8 threads".into())?;
    Ok(format!("{} bytes identical", a.stdout.len()))
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() -> ExitCode {
    let criteria: [Criterion; 9] = [
        ("ensemble exactness", ensemble_exactness),
        ("qubit stabilizer-only window", stabilizer_window),
        ("Chernoff dominance and plan tails", chernoff_suite),
        ("random-subspace guarantee", subspace_guarantee),
        ("fermionic decomposition identities", fermion_identities),
        ("end-to-end TVD", end_to_end_tvd),
        ("terabyte crossings and plateau", terabyte_numerics),
        ("boundary scaling laws", scaling_laws),
        ("thread-count determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        match run() {
            Ok(detail) => println!("PASS {} {name}: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL {} {name}: {why}", i + 1);
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
