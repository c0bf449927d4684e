use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use logse::cli::{self, NormsOptions};
use logse::config::Config;
use logse::harness::{Fault, PropertyCounts};

/// Lie splitting for the logarithmic Schrödinger equation.
#[derive(Parser)]
#[command(name = "logse", version)]
struct Args {
    /// Worker threads for sweeps (defaults to the available cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one trajectory from a TOML config (or a manifest to replay).
    Run {
        config: PathBuf,
        #[arg(long, default_value = "logse-out")]
        out: PathBuf,
    },
    /// Step-size sweep with errors.csv and orders.csv.
    Converge {
        config: PathBuf,
        #[arg(long, default_value = "logse-out")]
        out: PathBuf,
    },
    /// Randomized inequality suite.
    Proptest {
        #[arg(long, default_value_t = 2024)]
        seed: u64,
        #[arg(long, default_value_t = 100_000)]
        scalar_pairs: usize,
        #[arg(long, default_value_t = 1000)]
        fields: usize,
        /// Plant a known defect to confirm the suite can fail.
        #[arg(long)]
        inject_fault: bool,
        #[arg(long, default_value = "logse-out")]
        out: PathBuf,
    },
    /// Norm report for a coefficient file.
    Norms {
        data: PathBuf,
        #[arg(long, value_delimiter = ',', default_values_t = [0.2, 0.5, 0.8, 1.0])]
        s: Vec<f64>,
        /// Check the Gagliardo energy against the closed-form bound for |x|^gamma.
        #[arg(long)]
        gamma: Option<f64>,
        #[arg(long, default_value_t = 1024)]
        gagliardo_modes: usize,
        /// Also write the table as CSV.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generate and persist initial data.
    GenData {
        config: PathBuf,
        #[arg(long, default_value = "logse-out")]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let args = Args::parse();
    if let Some(n) = args.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: thread pool: {e}");
            return ExitCode::from(2);
        }
    }
    match execute(args.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn execute(command: Command) -> logse::Result<()> {
    match command {
        Command::Run { config, out } => {
            let m = cli::cmd_run(&Config::load(&config)?, &out)?;
            println!("run {} wrote {} artifacts to {}", m.run_id, m.artifacts.len(), out.display());
        }
        Command::Converge { config, out } => {
            let (m, outcome) = cli::cmd_converge(&Config::load(&config)?, &out)?;
            for fit in &outcome.fits {
                println!("t={} slope={:.4} r2={:.4}", fit.t, fit.slope, fit.r2);
            }
            println!("run {} wrote {}", m.run_id, out.display());
        }
        Command::Proptest {
            seed,
            scalar_pairs,
            fields,
            inject_fault,
            out,
        } => {
            let fault = inject_fault.then_some(Fault::DoubledLogarithm);
            let counts = PropertyCounts { scalar_pairs, fields };
            let report = cli::cmd_proptest(seed, counts, fault, &out)?;
            for e in &report.entries {
                println!("{:<28} samples={:<7} worst_margin={:.3e}", e.inequality, e.samples, e.worst_margin);
            }
        }
        Command::Norms {
            data,
            s,
            gamma,
            gagliardo_modes,
            out,
        } => {
            let options = NormsOptions {
                orders: s,
                gamma,
                gagliardo_modes,
            };
            let (text, table) = cli::cmd_norms(&data, &options)?;
            print!("{text}");
            if let Some(path) = out {
                table.write(&path)?;
            }
        }
        Command::GenData { config, out } => {
            let m = cli::cmd_gen_data(&Config::load(&config)?, &out)?;
            println!("gen-data {} wrote {}", m.run_id, out.display());
        }
    }
    Ok(())
}
