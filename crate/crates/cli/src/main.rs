use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use log::{info, warn};

use continuum_core::io::trace::TraceFormat;
use continuum_core::io::{fmt4, write_trace, ScenarioError, ScenarioFile};
use continuum_core::orchestrator::{run_events, rank, CandidateScore, StepReport};
use continuum_core::{load_scenario, Real};

const EXIT_USAGE: u8 = 2;
const EXIT_IO: u8 = 3;
const EXIT_INVALID: u8 = 4;
const EXIT_RUNTIME: u8 = 5;

#[derive(Parser)]
#[command(name = "continuum", version, about = "Edge/cloud placement simulator for multi-user XR services")]
struct Cli {
    /// Floating-point precision used for the computation.
    #[arg(long, value_enum, default_value_t = Precision::F64, global = true)]
    precision: Precision,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Precision {
    F32,
    F64,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Load and check a scenario without running it.
    Validate { scenario: PathBuf },
    /// Replay every event and write the trace.
    Run {
        scenario: PathBuf,
        #[arg(long, env = "CONTINUUM_OUT_DIR", default_value = "continuum-out")]
        out: PathBuf,
        /// Only write this format (default: all).
        #[arg(long, value_enum)]
        format: Option<Format>,
    },
    /// Print the candidate table of one step.
    Score {
        scenario: PathBuf,
        #[arg(long)]
        at_step: usize,
    },
    /// Break one candidate's objective down into its terms.
    Explain {
        scenario: PathBuf,
        #[arg(long)]
        at_step: usize,
        #[arg(long)]
        placement: String,
    },
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn new(code: u8, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
        }
    }
}

impl From<ScenarioError> for Failure {
    fn from(e: ScenarioError) -> Self {
        let code = match e {
            ScenarioError::Io { .. } => EXIT_IO,
            _ => EXIT_INVALID,
        };
        Failure::new(code, e.to_string())
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.precision {
        Precision::F64 => dispatch::<f64>(cli.command),
        Precision::F32 => dispatch::<f32>(cli.command),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn dispatch<T: Real>(command: Command) -> Result<(), Failure> {
    match command {
        Command::Validate { scenario } => {
            let s = load_scenario::<T>(&scenario)?;
            println!(
                "{}: ok ({} nodes, {} users, {} events)",
                scenario.display(),
                s.topology.nodes.len(),
                s.users.len(),
                s.events.len()
            );
            Ok(())
        }
        Command::Run { scenario, out, format } => run::<T>(&scenario, &out, format),
        Command::Score { scenario, at_step } => {
            let s = load_scenario::<T>(&scenario)?;
            let report = report_at(&s, at_step)?;
            print_score_table(&report).map_err(stdout_failure)
        }
        Command::Explain {
            scenario,
            at_step,
            placement,
        } => {
            let s = load_scenario::<T>(&scenario)?;
            let report = report_at(&s, at_step)?;
            let c = report
                .candidates
                .iter()
                .find(|c| c.placement_id == placement)
                .ok_or_else(|| {
                    let known: Vec<_> = report.candidates.iter().map(|c| c.placement_id.as_str()).collect();
                    Failure::new(
                        EXIT_USAGE,
                        format!("no placement `{placement}` at step {at_step} (known: {})", known.join(", ")),
                    )
                })?;
            print_explain(&report, c).map_err(stdout_failure)
        }
    }
}

fn stdout_failure(e: std::io::Error) -> Failure {
    Failure::new(EXIT_IO, format!("cannot write to standard output: {e}"))
}

fn run<T: Real>(scenario: &Path, out: &Path, format: Option<Format>) -> Result<(), Failure> {
    let s = load_scenario::<T>(scenario)?;
    let trace = continuum_core::run(&s).map_err(|e| Failure::new(EXIT_RUNTIME, e.to_string()))?;
    for r in &trace.reports {
        info!(
            "t{} {}: {} -> {} ({})",
            r.step,
            r.event,
            r.j_current.as_deref().unwrap_or("None"),
            r.j_best.as_deref().unwrap_or("None"),
            r.op.as_str()
        );
        if r.degraded {
            warn!("t{}: every candidate was discarded", r.step);
        }
    }
    let format = match format {
        None => TraceFormat::All,
        Some(Format::Csv) => TraceFormat::Csv,
        Some(Format::Json) => TraceFormat::Json,
    };
    let written = write_trace(&trace, out, format).map_err(|e| Failure::new(EXIT_IO, e.to_string()))?;
    for p in written {
        println!("{}", p.display());
    }
    Ok(())
}

/// Replays the first `k` events and returns the report of the last one.
fn report_at<T: Real>(s: &ScenarioFile<T>, k: usize) -> Result<StepReport<T>, Failure> {
    let events = s.context_events();
    if k == 0 || k > events.len() {
        return Err(Failure::new(
            EXIT_USAGE,
            format!("--at-step must be in 1..={} for this scenario", events.len()),
        ));
    }
    let mut trace = run_events(s.initial_state(), &events[..k]).map_err(|e| Failure::new(EXIT_RUNTIME, e.to_string()))?;
    Ok(trace.reports.pop().expect("k >= 1 steps ran"))
}

fn print_score_table<T: Real>(r: &StepReport<T>) -> std::io::Result<()> {
    let mut out = std::io::stdout().lock();
    writeln!(
        out,
        "t{} {}: j_current {} -> j_best {} ({})",
        r.step,
        r.event,
        r.j_current.as_deref().unwrap_or("None"),
        r.j_best.as_deref().unwrap_or("None"),
        r.op.as_str()
    )?;
    writeln!(
        out,
        "{:<6} {:<12} {:>8} {:>9} {:>8} {:>8} {:>8}  status",
        "id", "nodes", "qos_norm", "cost_norm", "ro_norm", "penalty", "f"
    )?;
    for c in rank(&r.candidates) {
        let chosen = r.j_best.as_deref() == Some(c.placement_id.as_str());
        let status = match c.verdict.discard_reason() {
            Some(reason) => format!("discarded ({reason})"),
            None if chosen => "chosen".to_string(),
            None => String::new(),
        };
        writeln!(
            out,
            "{:<6} {:<12} {:>8} {:>9} {:>8} {:>8} {:>8}  {}",
            c.placement_id,
            c.node_set.join("+"),
            fmt4(c.qos_norm),
            fmt4(c.cost_norm),
            fmt4(c.ro_norm),
            fmt4(c.penalty),
            c.f.map(fmt4).unwrap_or_else(|| "-".into()),
            status
        )?;
    }
    Ok(())
}

fn print_explain<T: Real>(r: &StepReport<T>, c: &CandidateScore<T>) -> std::io::Result<()> {
    let mut out = std::io::stdout().lock();
    let h = c.tradeoffs;
    writeln!(out, "t{} {}: placement {} on {}", r.step, r.event, c.placement_id, c.node_set.join("+"))?;
    writeln!(
        out,
        "{:<8} {:<6} {:>7} {:>7} {:>10} {:>7} {:>9}",
        "user", "node", "uel", "weight", "latency_ms", "qos", "weighted"
    )?;
    let mut qos_sum = T::zero();
    for u in &c.users {
        qos_sum += u.weight * u.qos;
        writeln!(
            out,
            "{:<8} {:<6} {:>7} {:>7} {:>10} {:>7} {:>9}",
            u.user,
            u.node,
            fmt4(u.uel),
            fmt4(u.weight),
            fmt4(u.latency.as_value()),
            fmt4(u.qos),
            fmt4(u.weight * u.qos)
        )?;
    }
    let qos_norm = qos_sum / T::from_count(c.users.len().max(1));
    let recombined = h.alpha * qos_norm - h.beta * c.cost_norm - h.lambda * c.ro_norm - c.penalty;
    writeln!(out, "qos_norm   {} (sum {} over {} users)", fmt4(qos_norm), fmt4(qos_sum), c.users.len())?;
    writeln!(out, "cost_norm  {} (cost {} / max {})", fmt4(c.cost_norm), fmt4(c.cost), fmt4(c.cost_max))?;
    writeln!(
        out,
        "ro_norm    {} (scaling {} + migration {})",
        fmt4(c.ro_norm),
        fmt4(c.overhead.scaling),
        fmt4(c.overhead.migration)
    )?;
    writeln!(out, "penalty    {}", fmt4(c.penalty))?;
    writeln!(
        out,
        "f = {}*{} - {}*{} - {}*{} - {} = {}",
        fmt4(h.alpha),
        fmt4(qos_norm),
        fmt4(h.beta),
        fmt4(c.cost_norm),
        fmt4(h.lambda),
        fmt4(c.ro_norm),
        fmt4(c.penalty),
        fmt4(recombined)
    )?;
    match (c.f, c.verdict.discard_reason()) {
        (Some(f), _) => writeln!(
            out,
            "reported f {} (residual {:.1e})",
            fmt4(f),
            (f - recombined).abs().as_f64()
        ),
        (None, reason) => writeln!(out, "discarded: {}", reason.unwrap_or_default()),
    }
}
