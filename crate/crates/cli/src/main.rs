//! `ordmech`: generate instances, run mechanisms, verify truthfulness and
//! tabulate rank-approximation factors.

mod bench;
mod failure;
mod gen;
mod run;
mod verify;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use failure::{emit, Failure};

const EXIT_CODES: &str = "\
Exit codes:
  0  success (or the verified property holds)
  1  property violated (a witness is printed)
  2  usage error
  3  I/O error
  4  invalid instance or input
  5  exact maxrank oracle over its size limit (maxrank columns omitted)
  6  resource limit exceeded (enumeration too large)

Environment:
  ORDMECH_THREADS  cap on worker threads";

#[derive(Parser)]
#[command(name = "ordmech", version, about = "Ordinal mechanisms with rank-approximation guarantees", after_help = EXIT_CODES)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Write an instance file for a named family.
    Gen(gen::GenArgs),
    /// Run any algorithm on an instance file.
    Run(RunArgs),
    /// Run a matching-market algorithm.
    Match(FamilyArgs<MatchAlgo>),
    /// Run a scheduling algorithm.
    Sched(FamilyArgs<SchedAlgo>),
    /// Check a truthfulness property by exhaustive enumeration.
    Verify(verify::VerifyArgs),
    /// Tabulate factors over random instances.
    Bench(bench::BenchArgs),
    /// Birkhoff-von Neumann decomposition of a doubly stochastic matrix.
    Decompose(DecomposeArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Args, Clone, Debug)]
pub struct RunOpts {
    /// Input instance (JSON).
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Output path (stdout when omitted).
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    pub format: Format,
    /// Seed for sampling modes (ChaCha8).
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Sample count for sampled RSD beyond the exact limit.
    #[arg(long, default_value_t = 10_000)]
    pub samples: usize,
    /// ε for lex-truthful wrappers, as `p/q`.
    #[arg(long, default_value = "1/10")]
    pub eps: String,
    /// Agent for the dictatorship rule.
    #[arg(long, default_value_t = 0)]
    pub agent: usize,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    algo: run::Algo,
    #[command(flatten)]
    opts: RunOpts,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum MatchAlgo {
    Maxmatch,
    Rsd,
    Ttca,
    Ps,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum SchedAlgo {
    Det,
    Rand,
    RandLt,
    Unrelated,
}

#[derive(Args)]
struct FamilyArgs<A: ValueEnum + Clone + Send + Sync + 'static> {
    #[arg(long)]
    algo: A,
    #[command(flatten)]
    opts: RunOpts,
}

#[derive(Args)]
struct DecomposeArgs {
    /// JSON file holding a square matrix of rationals, or `{"x": [[…]]}`.
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn configure_threads() {
    if let Some(n) = std::env::var("ORDMECH_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        if n > 0 {
            // A second initialization can only fail if a pool already exists.
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
    }
}

fn decompose(args: &DecomposeArgs) -> Result<(), Failure> {
    let text = failure::read(&args.input)?;
    let v: serde_json::Value = serde_json::from_str(&text).map_err(|e| Failure::Invalid(e.to_string()))?;
    let rows = v.get("x").unwrap_or(&v);
    let x: Vec<Vec<ordmech::Rational>> = serde_json::from_value::<Vec<Vec<serde_json::Value>>>(rows.clone())
        .map_err(|e| Failure::Invalid(e.to_string()))?
        .iter()
        .map(|row| row.iter().map(failure::rational_value).collect::<Result<_, _>>())
        .collect::<Result<_, _>>()?;
    let lottery = ordmech::matching::bvn_decompose(&ordmech::matching::FractionalMatching { x })?;
    let out = serde_json::to_string_pretty(&ordmech::io::lottery_json(&lottery)).expect("json");
    emit(args.out.as_deref(), &out)
}

fn dispatch(cli: Cli) -> Result<(), Failure> {
    match cli.cmd {
        Cmd::Gen(args) => gen::cmd_gen(&args),
        Cmd::Run(args) => run::cmd_run(args.algo, &args.opts),
        Cmd::Match(args) => {
            let algo = match args.algo {
                MatchAlgo::Maxmatch => run::Algo::Maxmatch,
                MatchAlgo::Rsd => run::Algo::Rsd,
                MatchAlgo::Ttca => run::Algo::Ttca,
                MatchAlgo::Ps => run::Algo::Ps,
            };
            run::cmd_run(algo, &args.opts)
        }
        Cmd::Sched(args) => {
            let algo = match args.algo {
                SchedAlgo::Det => run::Algo::Det,
                SchedAlgo::Rand => run::Algo::Rand,
                SchedAlgo::RandLt => run::Algo::RandLt,
                SchedAlgo::Unrelated => run::Algo::Unrelated,
            };
            run::cmd_run(algo, &args.opts)
        }
        Cmd::Verify(args) => verify::cmd_verify(&args),
        Cmd::Bench(args) => bench::cmd_bench(&args),
        Cmd::Decompose(args) => decompose(&args),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    configure_threads();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            if let Some(msg) = f.message() {
                eprintln!("ordmech: {msg}");
            }
            ExitCode::from(f.code())
        }
    }
}
