use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use distauth::{cmd_run, run_selfcheck, threshold_table, CliError, SelfcheckOptions};

#[derive(Parser)]
#[command(
    name = "distauth",
    version,
    about = "Distributed physical-layer authentication simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario file and write its detection curves as CSV.
    Run {
        #[arg(long, value_name = "PATH")]
        config: PathBuf,
        #[arg(long, value_name = "PATH")]
        out: PathBuf,
        /// Replaces scenario.seed.
        #[arg(long, value_name = "U64")]
        seed: Option<u64>,
        /// Worker threads (default: available cores).
        #[arg(long, value_name = "N")]
        workers: Option<usize>,
        /// Override a config key; repeatable.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        set: Vec<String>,
    },
    /// Print chi-squared thresholds for false-alarm targets.
    Thresholds {
        #[arg(
            long,
            value_name = "ALPHA",
            value_delimiter = ',',
            required = true,
            allow_negative_numbers = true
        )]
        alpha: Vec<f64>,
        #[arg(long, value_name = "DOF")]
        dof: u32,
    },
    /// Run the fast invariant suite.
    Selfcheck {
        #[arg(long, hide = true, default_value_t = 0.0)]
        inject_quantile_perturbation: f64,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run {
            config,
            out,
            seed,
            workers,
            set,
        } => {
            let workers = workers
                .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
                .max(1);
            cmd_run(&config, &out, &set, seed, workers).map(|cfg| {
                eprintln!("wrote {} (config sha256:{})", out.display(), cfg.digest);
            })
        }
        Command::Thresholds { alpha, dof } => threshold_table(&alpha, dof).map(|rows| {
            println!("alpha\tdof\tdelta");
            for (a, d, delta) in rows {
                println!("{a}\t{d}\t{delta:.4}");
            }
        }),
        Command::Selfcheck {
            inject_quantile_perturbation,
        } => {
            let report = run_selfcheck(SelfcheckOptions {
                quantile_perturbation: inject_quantile_perturbation,
            });
            print!("{report}");
            if report.passed() {
                Ok(())
            } else {
                Err(CliError::Runtime(format!(
                    "failed checks: {}",
                    report.failed().join(", ")
                )))
            }
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
