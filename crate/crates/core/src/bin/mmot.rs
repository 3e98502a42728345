use std::fs::File;
use std::io::{self, BufWriter, Write as _};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use mmot::driver::{
    oracle_check, radius_report, solve_mmot, sweep_knots, write_sweep_csv, ProblemConfig,
};
use mmot::error::Result;

#[derive(Parser)]
#[command(name = "mmot", about = "Bounds for multi-marginal optimal transport with piecewise-affine costs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one instance and write the bounds report as JSON.
    Solve {
        #[arg(long)]
        config: PathBuf,
        /// Defaults to stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve for each knot count and write one CSV row per count.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_delimiter = ',', required = true)]
        knots: Vec<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare branch-and-bound with grid search on a random instance.
    OracleCheck {
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 20_000_000)]
        max_points: u64,
    },
    /// Print per-marginal radii and the theoretical budget.
    Radius {
        #[arg(long)]
        config: PathBuf,
    },
}

fn load(path: &PathBuf) -> Result<ProblemConfig> {
    ProblemConfig::from_json(&std::fs::read_to_string(path)?)
}

fn output(path: &Option<PathBuf>) -> Result<Box<dyn io::Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(io::stdout().lock()),
    })
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Solve { config, out } => {
            let report = solve_mmot(&load(&config)?)?;
            let mut w = output(&out)?;
            report.write_json(&mut w)?;
            writeln!(w)?;
            Ok(report.converged())
        }
        Command::Sweep { config, knots, out } => {
            let reports = sweep_knots(&load(&config)?, &knots)?;
            write_sweep_csv(&reports, output(&out)?)?;
            Ok(reports.iter().all(|r| r.converged()))
        }
        Command::OracleCheck { seed, n, max_points } => {
            let check = oracle_check(n, seed, max_points)?;
            println!("{}", serde_json::to_string_pretty(&check)?);
            Ok(check.agrees)
        }
        Command::Radius { config } => {
            let r = radius_report(&load(&config)?)?;
            for (i, (k, radius)) in r.knots.iter().zip(&r.radii).enumerate() {
                println!("marginal {i}: {k} knots, 2eta = {radius:.6e}");
            }
            println!("lipschitz = {:.6e}", r.lipschitz);
            println!("eps_theo = {:.6e}", r.eps_theo);
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    env_logger::init();
    if let Some(threads) = std::env::var("MMOT_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global() {
            eprintln!("error: {e}");
            return ExitCode::FAILURE;
        }
    }
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
