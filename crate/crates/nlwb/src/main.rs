//! `nlwb`: classical bounds, soundness certificates, qubit optimization and
//! NPA bounds for realigned Hardy paradoxes.
//!
//! Exit codes: 0 success, 1 the computation finished without meeting its
//! goal, 2 invalid input.

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use nlwb::commands::{self, Outcome, ParadoxSource, Target};

#[derive(Parser, Debug)]
#[command(name = "nlwb", version, about)]
struct Cli {
    /// Print the full run report as JSON.
    #[arg(long, global = true, conflicts_with = "csv")]
    json: bool,

    /// Print the tabular part of the result as CSV.
    #[arg(long, global = true)]
    csv: bool,

    /// Worker threads for enumeration and restarts (default: all cores).
    #[arg(long, global = true, env = "NONLOCALITY_WB_THREADS")]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct ParadoxArgs {
    /// Number of settings of the realigned paradox, or `original`.
    #[arg(required_unless_present = "paradox", conflicts_with = "paradox")]
    target: Option<Target>,

    /// Read the paradox from a schema v1 JSON file instead.
    #[arg(long, value_name = "PATH")]
    paradox: Option<PathBuf>,
}

impl ParadoxArgs {
    fn source(&self) -> ParadoxSource {
        match (&self.target, &self.paradox) {
            (_, Some(path)) => ParadoxSource::File(path.clone()),
            (Some(t), None) => ParadoxSource::Builtin(*t),
            (None, None) => unreachable!("clap requires one of them"),
        }
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Maximum of the AS expression over all deterministic strategies.
    ClassicalBound {
        /// Number of settings per party (even, at most 12).
        #[arg(required_unless_present = "expression", conflicts_with = "expression")]
        n: Option<u16>,

        /// Bound a schema v1 expression file instead.
        #[arg(long, value_name = "PATH")]
        expression: Option<PathBuf>,
    },

    /// Check that no local strategy meets the conditions with a nonzero
    /// Hardy term.
    Certify(ParadoxArgs),

    /// Maximize the Hardy value over two-qubit models.
    Optimize {
        #[command(flatten)]
        paradox: ParadoxArgs,

        /// Optimizer settings file; missing fields keep their defaults.
        #[arg(long, value_name = "PATH")]
        config: Option<PathBuf>,

        /// Base seed for the restarts [default: 42].
        #[arg(long)]
        seed: Option<u64>,
    },

    /// Upper-bound the Hardy value with a moment-matrix relaxation.
    Npa {
        #[command(flatten)]
        paradox: ParadoxArgs,

        #[arg(long, default_value_t = 2, value_parser = clap::value_parser!(u8).range(1..=3))]
        level: u8,

        /// Also write the moment program as JSON.
        #[arg(long, value_name = "PATH")]
        dump_program: Option<PathBuf>,
    },

    /// Evaluate the published optimized parameters.
    Table1 {
        /// Allowed deviation from the reported Hardy values.
        #[arg(long, default_value_t = 2e-3)]
        tol: f64,
    },

    /// Print a paradox's conditions and Hardy term.
    DumpParadox {
        #[command(flatten)]
        paradox: ParadoxArgs,

        /// Write the paradox as a schema v1 file.
        #[arg(long, value_name = "PATH")]
        output: Option<PathBuf>,
    },
}

fn configure_threads(threads: Option<usize>) -> Result<()> {
    match threads {
        None => Ok(()),
        Some(0) => bail!("--threads must be at least 1"),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring the thread pool"),
    }
}

fn run(cli: &Cli) -> Result<Outcome> {
    configure_threads(cli.threads)?;
    let outcome = match &cli.command {
        Command::ClassicalBound { n, expression } => {
            commands::classical_bound(*n, expression.as_deref())?
        }
        Command::Certify(p) => commands::certify(&p.source())?,
        Command::Optimize {
            paradox,
            config,
            seed,
        } => commands::optimize(&paradox.source(), config.as_deref(), *seed)?,
        Command::Npa {
            paradox,
            level,
            dump_program,
        } => commands::npa(&paradox.source(), *level, dump_program.as_deref())?,
        Command::Table1 { tol } => commands::table1(*tol)?,
        Command::DumpParadox { paradox, output } => {
            commands::dump_paradox(&paradox.source(), output.as_deref())?
        }
    };
    Ok(outcome)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let start = Instant::now();
    let outcome = match run(&cli) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(2);
        }
    };
    let success = outcome.success;
    let command = outcome.command;
    if cli.json {
        let ms = u64::try_from(start.elapsed().as_millis()).unwrap_or(u64::MAX);
        let report = outcome.into_report(ms);
        println!(
            "{}",
            serde_json::to_string_pretty(&report).expect("report serializes")
        );
    } else if cli.csv {
        print!("{}", outcome.csv);
    } else {
        print!("{}", outcome.text);
    }
    if success {
        ExitCode::SUCCESS
    } else {
        eprintln!("{command}: goal not met");
        ExitCode::from(1)
    }
}
