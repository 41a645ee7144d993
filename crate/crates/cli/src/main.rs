//! `psatz`: lower bounds for polynomial optimization problems over compact
//! sets from certificates of global positivity.
//!
//! Every run prints (or writes to `--out`) one JSON document holding a run
//! manifest and the result. Exit codes: 0 success (accept, reject and
//! unknown are all results), 1 other failure, 2 unreadable input or bad
//! arguments, 3 `γ` below the admissible floor, 4 budget exceeded when
//! `--fatal-budget` is set.

mod commands;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use psatz::certifiers::CertKind;
use psatz::conic::Tolerances;
use psatz::rational::parse_rational;
use psatz::Rational;

use manifest::{Document, RunManifest, Timing};

/// Problems are JSON objects `{"objective": P, "constraints": [P, ...],
/// "radius_sq": "R"}`, where `P` is `{"nvars": n, "terms": [{"exp": [...],
/// "coef": "p/q"}]}`. The feasible set is `{x : g_i(x) ≥ 0, Σx_i² ≤ R}`:
/// `radius_sq` is the squared radius of the ball.
#[derive(Debug, Parser)]
#[command(name = "psatz", version, about, long_about = None)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Write the output document here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Build the reduced form f_γ of a problem (or h when --gamma is absent).
    Reduce(ReduceArgs),
    /// Test one form for membership in a certificate cone.
    Certify(CertifyArgs),
    /// Run a hierarchy of bisections over levels r.
    Solve(SolveArgs),
    /// Exponent bounds for Polyá's theorem.
    Bound(BoundArgs),
}

#[derive(Debug, Args)]
struct ReduceArgs {
    /// Problem JSON.
    pop: PathBuf,
    #[arg(long, value_parser = rational)]
    gamma: Option<Rational>,
}

#[derive(Debug, Args)]
struct CertifyArgs {
    /// Polynomial JSON, or a problem JSON with --pop.
    input: PathBuf,
    #[arg(long, value_parser = cone)]
    cone: CertKind,
    #[arg(long, short = 'r', default_value_t = 1)]
    level: u32,
    /// Read a problem and test h − (1/r)(Σz²)^D, which certifies that the
    /// objective is positive on the feasible set.
    #[arg(long)]
    pop: bool,
    #[command(flatten)]
    budget: BudgetArgs,
}

#[derive(Debug, Args)]
struct BudgetArgs {
    /// Polyá term budget (overrides PSATZ_BUDGET_TERMS).
    #[arg(long)]
    budget_terms: Option<u64>,
    /// Wall-clock limit per conic solve, in seconds.
    #[arg(long)]
    max_seconds: Option<f64>,
    /// Exit with code 4 when a budget is exceeded.
    #[arg(long)]
    fatal_budget: bool,
}

#[derive(Debug, Args)]
struct SolveArgs {
    /// Problem JSON.
    pop: PathBuf,
    #[arg(long, value_parser = cone, default_value = "reznick")]
    method: CertKind,
    #[arg(long, default_value_t = 1)]
    rmin: u32,
    #[arg(long, default_value_t = 2)]
    rmax: u32,
    #[arg(long, value_parser = rational, default_value = "1/100")]
    epsilon: Rational,
    /// Starting bracket `L,U`.
    #[arg(long, value_parser = bracket)]
    bracket: Option<(Rational, Rational)>,
    /// Feasible point `x1,...,xn` for the upper bracket.
    #[arg(long, value_parser = point)]
    point: Option<Vec<Rational>>,
    /// Attach a grid-oracle comparison.
    #[arg(long)]
    oracle: bool,
    /// Run levels one after another.
    #[arg(long)]
    sequential: bool,
    #[command(flatten)]
    budget: BudgetArgs,
}

#[derive(Debug, Args)]
struct BoundArgs {
    /// Form JSON, or a problem JSON with --pop.
    input: PathBuf,
    /// Minimum of the form on the simplex.
    #[arg(long, value_parser = rational, conflicts_with_all = ["even", "pop"])]
    lambda: Option<Rational>,
    /// Treat the input as an even form with sphere minimum at least --beta.
    #[arg(long)]
    even: bool,
    #[arg(long, value_parser = rational, requires = "even")]
    beta: Option<Rational>,
    /// Level threshold r̂ for a problem at --gamma.
    #[arg(long, requires = "gamma")]
    pop: bool,
    #[arg(long, value_parser = rational)]
    gamma: Option<Rational>,
    #[arg(long, default_value_t = 1)]
    r0: u32,
    /// Estimate the missing minimum by sampling (even forms) or attach a
    /// grid minimum (problems).
    #[arg(long)]
    oracle: bool,
    #[arg(long, default_value_t = 10_000)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

fn rational(s: &str) -> Result<Rational, String> {
    parse_rational(s.trim()).map_err(|e| e.to_string())
}

fn cone(s: &str) -> Result<CertKind, String> {
    CertKind::parse(s).ok_or_else(|| {
        let names: Vec<_> = CertKind::ALL.iter().map(|k| k.name()).collect();
        format!("unknown cone {s:?}; expected one of {}", names.join(", "))
    })
}

fn bracket(s: &str) -> Result<(Rational, Rational), String> {
    let (l, u) = s.split_once(',').ok_or("expected L,U")?;
    Ok((rational(l)?, rational(u)?))
}

fn point(s: &str) -> Result<Vec<Rational>, String> {
    s.split(',').map(rational).collect()
}

/// Failure of a subcommand together with its exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl From<psatz::Error> for Failure {
    fn from(e: psatz::Error) -> Self {
        use psatz::Error as E;
        let code = match e {
            E::InvalidInput(_) | E::ParseRational(_) => 2,
            E::GammaBelowFloor { .. } => 3,
            _ => 1,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

impl Failure {
    pub fn new(code: i32, message: impl Into<String>) -> Self {
        Failure {
            code,
            message: message.into(),
        }
    }
}

/// What a subcommand hands back to `main`.
pub struct Report {
    pub result: serde_json::Value,
    pub exit_code: i32,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let start = Instant::now();
    let (name, inputs, config, outcome) = match &cli.command {
        Command::Reduce(a) => (
            "reduce",
            vec![a.pop.clone()],
            commands::reduce_config(a),
            commands::reduce(a),
        ),
        Command::Certify(a) => (
            "certify",
            vec![a.input.clone()],
            commands::certify_config(a),
            commands::certify(a),
        ),
        Command::Solve(a) => (
            "solve",
            vec![a.pop.clone()],
            commands::solve_config(a),
            commands::solve(a),
        ),
        Command::Bound(a) => (
            "bound",
            vec![a.input.clone()],
            commands::bound_config(a),
            commands::bound(a),
        ),
    };
    let (result, error, code) = match outcome {
        Ok(r) => (Some(r.result), None, r.exit_code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            (None, Some(f.message), f.code)
        }
    };
    let doc = Document {
        manifest: RunManifest {
            subcommand: name,
            inputs: inputs.iter().map(|p| p.display().to_string()).collect(),
            config,
            version: env!("CARGO_PKG_VERSION"),
            tolerances: Tolerances::default(),
            timing: Timing {
                wall_seconds: start.elapsed().as_secs_f64(),
            },
            exit_code: code,
        },
        result,
        error,
    };
    let text = serde_json::to_string_pretty(&doc).expect("document serializes") + "\n";
    match &cli.out {
        Some(path) => {
            if let Err(e) = std::fs::write(path, text) {
                eprintln!("error: cannot write {}: {e}", path.display());
                return ExitCode::from(1);
            }
        }
        None => print!("{text}"),
    }
    ExitCode::from(code as u8)
}
