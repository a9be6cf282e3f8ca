//! Command-line front end.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::analysis::{self, DEFAULT_BUDGET};
use crate::circuit::{gadgetize, CircuitIR};
use crate::ensembles::NoiseCase;
use crate::pipeline::{ErrorSplit, Sampler, DEFAULT_SEED};
use crate::truncation::truncation_threshold;
use crate::validate;

/// Exit status for bad parameter values, malformed circuits and failed checks.
pub const EXIT_INVALID: i32 = 2;
/// Exit status for usage errors and I/O failures.
pub const EXIT_USAGE: i32 = 1;

#[derive(Parser, Debug)]
#[command(name = "magicsim", version, about = "Noisy magic-state circuit sampler and rank analysis")]
struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum CaseArg {
    QubitDephasing,
    FermionLoss,
    FermionDephasing,
}

impl From<CaseArg> for NoiseCase {
    fn from(c: CaseArg) -> Self {
        match c {
            CaseArg::QubitDephasing => NoiseCase::QubitDephasing,
            CaseArg::FermionLoss => NoiseCase::FermionLoss,
            CaseArg::FermionDephasing => NoiseCase::FermionDephasing,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
    Lines,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Print the pure-state ensemble of a noisy magic state.
    Ensemble {
        #[arg(long, value_enum)]
        case: CaseArg,
        #[arg(long)]
        p: f64,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
    },
    /// Truncation threshold k for t copies with magic probability p.
    Threshold {
        #[arg(long)]
        t: u64,
        #[arg(long)]
        p: f64,
        #[arg(long)]
        delta1: f64,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
    },
    /// Budgeted simulability boundary in p (given --t) or in t (given --p).
    Boundary {
        #[arg(long, value_enum)]
        case: CaseArg,
        #[arg(long, conflicts_with = "p", required_unless_present = "p")]
        t: Option<u64>,
        #[arg(long)]
        p: Option<f64>,
        #[arg(long, default_value_t = 0.01)]
        delta: f64,
        /// Rank budget (number of coefficients).
        #[arg(long, default_value_t = DEFAULT_BUDGET)]
        budget: f64,
    },
    /// Worst-case rank over a grid of p, as CSV.
    RankCurve {
        #[arg(long, value_enum)]
        case: CaseArg,
        #[arg(long)]
        t: u64,
        #[arg(long, default_value_t = 0.01)]
        delta: f64,
        #[arg(long, default_value_t = 0.0)]
        p_from: f64,
        #[arg(long, default_value_t = 1.0)]
        p_to: f64,
        #[arg(long, default_value_t = 0.01)]
        p_step: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sample measurement outcomes of a circuit fed with noisy magic states.
    Sample {
        #[arg(long)]
        circuit: PathBuf,
        #[arg(long, value_enum, default_value = "qubit-dephasing")]
        case: CaseArg,
        #[arg(long)]
        p: f64,
        #[arg(long, default_value_t = 0.1)]
        delta: f64,
        #[arg(long, default_value_t = 1000)]
        shots: u64,
        #[arg(long, env = "MAGICSIM_SEED", default_value_t = DEFAULT_SEED)]
        seed: u64,
        /// Override δ₁ (default δ/2).
        #[arg(long)]
        delta1: Option<f64>,
        /// Override δ₂ (default δ²/4).
        #[arg(long)]
        delta2: Option<f64>,
        /// Emit one JSON trace per shot instead of bare bitstrings.
        #[arg(long)]
        emit_traces: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Replace T/TDG gates by injection gadgets on fresh magic wires.
    Gadgetize {
        #[arg(long)]
        circuit: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run built-in consistency checks.
    Validate {
        #[arg(long, default_value = "all")]
        suite: String,
    },
}

enum Failure {
    Invalid(String),
    Usage(String),
}

fn invalid(e: impl ToString) -> Failure {
    Failure::Invalid(e.to_string())
}

fn io(e: impl ToString) -> Failure {
    Failure::Usage(e.to_string())
}

fn check_p(p: f64) -> Result<(), Failure> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(Failure::Invalid(format!("p = {p} outside [0, 1]")))
    }
}

fn check_delta(name: &str, d: f64) -> Result<(), Failure> {
    if d > 0.0 && d <= 1.0 {
        Ok(())
    } else {
        Err(Failure::Invalid(format!("{name} = {d} outside (0, 1]")))
    }
}

fn read_circuit(path: &PathBuf) -> Result<CircuitIR, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
    CircuitIR::from_json(&text).map_err(invalid)
}

fn emit(text: &str, out: &Option<PathBuf>, stdout: &mut (dyn Write + Send)) -> Result<(), Failure> {
    match out {
        Some(path) => fs::write(path, text).map_err(|e| Failure::Usage(format!("{}: {e}", path.display()))),
        None => stdout.write_all(text.as_bytes()).map_err(io),
    }
}

fn json<T: Serialize>(v: &T) -> String {
    serde_json::to_string(v).expect("serializable") + "\n"
}

#[derive(Serialize)]
struct ThresholdView {
    t: u64,
    p: f64,
    delta1: f64,
    k: u64,
    exact_tail: f64,
    chernoff_bound: f64,
}

#[derive(Serialize)]
struct BoundaryView {
    case: NoiseCase,
    delta: f64,
    budget: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    t: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    p: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    p_star: Option<f64>,
    /// `null` means unbounded.
    #[serde(skip_serializing_if = "Option::is_none")]
    t_star: Option<Option<u64>>,
}

fn dispatch(cmd: Command, stdout: &mut (dyn Write + Send), stderr: &mut (dyn Write + Send)) -> Result<i32, Failure> {
    match cmd {
        Command::Ensemble { case, p, format } => {
            check_p(p)?;
            let e = NoiseCase::from(case).ensemble(p).map_err(invalid)?;
            let text = match format {
                Format::Json => e.to_json() + "\n",
                Format::Csv | Format::Lines => {
                    let mut s = String::from("weight,kind,label,nu\n");
                    for en in &e.entries {
                        let nu = match &en.kind {
                            crate::ensembles::EntryKind::Magic(f) => f.nu.to_string(),
                            _ => String::new(),
                        };
                        let kind = if en.is_magic() { "magic" } else { "resourceless" };
                        s.push_str(&format!("{},{kind},{},{nu}\n", en.weight, en.label));
                    }
                    s
                }
            };
            emit(&text, &None, stdout)?;
        }
        Command::Threshold { t, p, delta1, format } => {
            let plan = truncation_threshold(t, p, delta1).map_err(invalid)?;
            let view = ThresholdView { t, p, delta1, k: plan.k, exact_tail: plan.exact_tail(), chernoff_bound: plan.chernoff_bound() };
            let text = match format {
                Format::Json => json(&view),
                _ => format!(
                    "t={}\np={}\ndelta1={}\nk={}\nexact_tail={}\nchernoff_bound={}\n",
                    view.t, view.p, view.delta1, view.k, view.exact_tail, view.chernoff_bound
                ),
            };
            emit(&text, &None, stdout)?;
        }
        Command::Boundary { case, t, p, delta, budget } => {
            let case = NoiseCase::from(case);
            check_delta("delta", delta)?;
            let mut view = BoundaryView { case, delta, budget, t, p, p_star: None, t_star: None };
            match (t, p) {
                (Some(t), _) => view.p_star = Some(analysis::boundary_p(case, t, delta, budget).map_err(invalid)?),
                (None, Some(p)) => {
                    check_p(p)?;
                    view.t_star = Some(analysis::boundary_t(case, p, delta, budget).map_err(invalid)?);
                }
                (None, None) => return Err(Failure::Usage("boundary needs --t or --p".into())),
            }
            emit(&json(&view), &None, stdout)?;
        }
        Command::RankCurve { case, t, delta, p_from, p_to, p_step, out } => {
            check_p(p_from)?;
            check_p(p_to)?;
            check_delta("delta", delta)?;
            let ps = analysis::grid(p_from, p_to, p_step).map_err(invalid)?;
            let rows = analysis::rank_curve(case.into(), t, delta, &ps).map_err(invalid)?;
            emit(&analysis::to_csv(&rows), &out, stdout)?;
        }
        Command::Sample { circuit, case, p, delta, shots, seed, delta1, delta2, emit_traces, out } => {
            check_p(p)?;
            check_delta("delta", delta)?;
            let mut split = ErrorSplit::from_delta(delta).map_err(invalid)?;
            if let Some(d) = delta1 {
                check_delta("delta1", d)?;
                split.delta1 = d;
            }
            if let Some(d) = delta2 {
                check_delta("delta2", d)?;
                split.delta2 = d;
            }
            let mut c = read_circuit(&circuit)?;
            if c.has_non_clifford() {
                c = gadgetize(&c).map_err(invalid)?;
            }
            let sampler = Sampler::new(c, case.into(), p, split).map_err(invalid)?;
            let traces = sampler.run(shots, seed).map_err(invalid)?;
            let mut text = String::new();
            for tr in &traces {
                if emit_traces {
                    text.push_str(&json(tr));
                } else {
                    text.push_str(&tr.outcome);
                    text.push('\n');
                }
            }
            emit(&text, &out, stdout)?;
        }
        Command::Gadgetize { circuit, out } => {
            let c = read_circuit(&circuit)?;
            let g = gadgetize(&c).map_err(invalid)?;
            emit(&(g.to_json() + "\n"), &out, stdout)?;
        }
        Command::Validate { suite } => {
            let results = validate::run_suite(&suite)
                .ok_or_else(|| Failure::Usage(format!("unknown suite `{suite}` (all, {})", validate::SUITES.join(", "))))?;
            let mut failed = 0;
            for (name, res) in results {
                let line = match res {
                    Ok(detail) => format!("PASS {name}: {detail}\n"),
                    Err(why) => {
                        failed += 1;
                        format!("FAIL {name}: {why}\n")
                    }
                };
                stdout.write_all(line.as_bytes()).map_err(io)?;
            }
            if failed > 0 {
                writeln!(stderr, "{failed} check(s) failed").map_err(io)?;
                return Ok(EXIT_INVALID);
            }
        }
    }
    Ok(0)
}

/// Parse `args` and run; returns the process exit status.
pub fn run<I, T>(args: I, stdout: &mut (dyn Write + Send), stderr: &mut (dyn Write + Send)) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let text = e.render().to_string();
            let _ = if e.use_stderr() { stderr.write_all(text.as_bytes()) } else { stdout.write_all(text.as_bytes()) };
            return code;
        }
    };
    let result = match cli.threads {
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build() {
            Ok(pool) => pool.install(|| dispatch(cli.command, stdout, stderr)),
            Err(e) => Err(io(e)),
        },
        None => dispatch(cli.command, stdout, stderr),
    };
    match result {
        Ok(code) => code,
        Err(Failure::Invalid(msg)) => {
            let _ = writeln!(stderr, "error: {msg}");
            EXIT_INVALID
        }
        Err(Failure::Usage(msg)) => {
            let _ = writeln!(stderr, "error: {msg}");
            EXIT_USAGE
        }
    }
}
