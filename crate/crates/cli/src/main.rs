mod commands;
mod parse;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use commands::{
    CavityArgs, ClassifyArgs, GlauberArgs, LdpArgs, OracleArgs, PhaseArgs, SimulateArgs, SolveArgs,
};

const EXIT_FAILURE: u8 = 2;
const EXIT_USAGE: u8 = 64;
const THREADS_ENV: &str = "GIBBS_CONSENSUS_THREADS";

#[derive(Parser, Debug)]
#[command(
    name = "gibbs-consensus",
    version,
    about = "Conditional limits of marked random regular graphs under atypical consensus"
)]
struct Cli {
    /// Write the artifact here instead of stdout.
    #[arg(long, global = true)]
    output: Option<PathBuf>,

    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,

    /// Seed for every random stream of the run.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// Worker threads (default: logical cores; overridden by GIBBS_CONSENSUS_THREADS).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Regime, tilt and limiting measures for the two-spin consensus problem.
    Classify(ClassifyArgs),
    /// Global minimizers of the edge rate problem and the limit set.
    Solve(SolveArgs),
    /// Fixed points of the Ising cavity map and of belief propagation.
    Cavity(CavityArgs),
    /// Regime classification over a grid of consensus levels.
    PhaseDiagram(PhaseArgs),
    /// Sample a random regular graph with i.i.d. marks.
    Simulate(SimulateArgs),
    /// Exact conditional statistics on sampled graphs against the limiting rate.
    VerifyLdp(LdpArgs),
    /// Brute-force grid minimization of the edge rate problem.
    Oracle(OracleArgs),
    /// Heat-bath dynamics for the Ising posterior on a regular graph.
    Glauber(GlauberArgs),
}

/// Failure of a run: usage problems exit 64, everything else exits 2.
#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Run(gibbs_consensus::Error),
    Io(String),
}

impl From<gibbs_consensus::Error> for Failure {
    fn from(e: gibbs_consensus::Error) -> Self {
        Failure::Run(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Io(e.to_string())
    }
}

impl Failure {
    fn kind(&self) -> &'static str {
        match self {
            Failure::Usage(_) => "usage",
            Failure::Run(e) => e.kind(),
            Failure::Io(_) => "io",
        }
    }

    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => EXIT_USAGE,
            _ => EXIT_FAILURE,
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Usage(m) | Failure::Io(m) => f.write_str(m),
            Failure::Run(e) => write!(f, "{e}"),
        }
    }
}

/// Shared run settings handed to every command.
pub struct Run {
    pub seed: u64,
    pub format: Format,
}

fn thread_count(flag: Option<usize>) -> Result<Option<usize>, Failure> {
    match std::env::var(THREADS_ENV) {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .ok()
            .filter(|&n| n > 0)
            .map(Some)
            .ok_or_else(|| Failure::Usage(format!("{THREADS_ENV} must be a positive integer, got {v:?}"))),
        Err(_) => match flag {
            Some(0) => Err(Failure::Usage("--threads must be positive".into())),
            other => Ok(other),
        },
    }
}

fn execute(cli: Cli) -> Result<(), Failure> {
    if let Some(n) = thread_count(cli.threads)? {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::Io(e.to_string()))?;
    }
    let run = Run {
        seed: cli.seed,
        format: cli.format,
    };
    let artifact = match &cli.command {
        Command::Classify(a) => commands::classify(a, &run)?,
        Command::Solve(a) => commands::solve(a, &run)?,
        Command::Cavity(a) => commands::cavity(a, &run)?,
        Command::PhaseDiagram(a) => commands::phase_diagram(a, &run)?,
        Command::Simulate(a) => commands::simulate(a, &run)?,
        Command::VerifyLdp(a) => commands::verify_ldp(a, &run)?,
        Command::Oracle(a) => commands::oracle(a, &run)?,
        Command::Glauber(a) => commands::glauber(a, &run)?,
    };
    match &cli.output {
        Some(path) => std::fs::write(path, artifact)
            .map_err(|e| Failure::Io(format!("cannot write {}: {e}", path.display()))),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(&artifact)?;
            out.flush()?;
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            let body = serde_json::json!({
                "error": { "kind": f.kind(), "message": f.to_string() }
            });
            eprintln!("{body}");
            ExitCode::from(f.code())
        }
    }
}
