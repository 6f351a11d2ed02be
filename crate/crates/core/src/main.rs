//! Command-line experiment runner.

use clap::{Parser, Subcommand};
use reservoir_ipc::error::Error;
use reservoir_ipc::oracle;
use reservoir_ipc::runner::{self, ExperimentKind};
use std::path::PathBuf;
use std::process::ExitCode;

const EXIT_CONFIG: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;

#[derive(Parser)]
#[command(name = "reservoir-ipc", version, about = "Information processing capacity of photonic reservoirs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a config file.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Output directory (env: RESERVOIR_IPC_OUT), default current dir.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Override the master seed from the config.
        #[arg(long)]
        seed: Option<u64>,
        /// Worker threads (env: RESERVOIR_IPC_JOBS), default all cores.
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Compare the Wick engine against the Fock-space oracle.
    OracleCheck,
    /// Compute only the Gaussian capacity bound for a config.
    Bound {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        jobs: Option<usize>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run { config, out, seed, jobs } => run(config, out, seed, jobs, false),
        Command::Bound { config, out, seed, jobs } => run(config, out, seed, jobs, true),
        Command::OracleCheck => oracle_check(),
    };
    match result {
        Ok(code) => code,
        Err(e @ Error::Config(_)) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_CONFIG)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_NUMERICAL)
        }
    }
}

fn env_or<T: std::str::FromStr>(cli: Option<T>, var: &str) -> Option<T> {
    cli.or_else(|| std::env::var(var).ok().and_then(|v| v.parse().ok()))
}

fn run(
    config_path: PathBuf,
    out: Option<PathBuf>,
    seed: Option<u64>,
    jobs: Option<usize>,
    bound_only: bool,
) -> Result<ExitCode, Error> {
    let text = std::fs::read_to_string(&config_path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", config_path.display())))?;
    let mut cfg = runner::parse_config(&text)?;
    if let Some(seed) = seed {
        cfg.master_seed = seed;
    }
    if bound_only {
        cfg.experiment = ExperimentKind::BoundOnly;
    }
    if cfg.experiment == ExperimentKind::OracleCheck {
        return oracle_check();
    }

    if let Some(jobs) = env_or(jobs, "RESERVOIR_IPC_JOBS") {
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .map_err(|e| Error::Config(format!("cannot configure {jobs} jobs: {e}")))?;
    }

    let out_dir = env_or(out, "RESERVOIR_IPC_OUT").unwrap_or_else(|| PathBuf::from("."));
    std::fs::create_dir_all(&out_dir)?;

    let (rows, summary) = runner::run_experiment(&cfg)?;
    let csv_path = out_dir.join("results.csv");
    let json_path = out_dir.join("summary.json");
    std::fs::write(&csv_path, runner::emit_csv(&rows))?;
    std::fs::write(&json_path, runner::emit_summary(&summary)?)?;

    println!("experiment {} ({} rows)", summary.experiment, rows.len());
    for g in &summary.grid {
        println!(
            "  N={} tau_max={} ops={} M={}: total {:.4} +- {:.4}, bound {:.4} +- {:.4}, dC {:.4} +- {:.4}",
            g.n_modes,
            g.tau_max,
            g.n_photon_ops,
            g.ensemble,
            g.mean_total,
            g.se_total,
            g.mean_bound,
            g.se_bound,
            g.mean_delta_c,
            g.se_delta_c,
        );
    }
    println!("wrote {} and {}", csv_path.display(), json_path.display());
    Ok(ExitCode::SUCCESS)
}

fn oracle_check() -> Result<ExitCode, Error> {
    let cases = oracle::oracle_check()?;
    let mut all_ok = true;
    println!("{:<55} {:>12} {:>10} {:>6}", "case", "gap", "tol", "state");
    for case in &cases {
        let ok = case.passed();
        all_ok &= ok;
        println!(
            "{:<55} {:>12.3e} {:>10.1e} {:>6}",
            case.name,
            case.gap,
            case.tol,
            if ok { "PASS" } else { "FAIL" }
        );
    }
    if all_ok {
        println!("all {} oracle cases pass", cases.len());
        Ok(ExitCode::SUCCESS)
    } else {
        Err(Error::Numerical("oracle disagreement".into()))
    }
}
