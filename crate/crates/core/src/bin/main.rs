use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use subspace_rto::cli::{benchmark, benchmark_table, config_schema, run, RunConfig};

#[derive(Parser)]
#[command(name = "subspace-rto", version, about = "Gaussian posterior sampling by randomize-then-optimize")]
#[command(arg_required_else_help = true)]
struct Args {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample according to a configuration file
    Run { config: PathBuf },
    /// Time the normal-equation and adjoint samplers over benchmark.sizes
    Bench { config: PathBuf },
    /// Print every configuration key, preset and environment variable
    Schema,
}

fn load(path: &Path) -> subspace_rto::Result<RunConfig> {
    let mut cfg = RunConfig::from_file(path)?;
    cfg.apply_env()?;
    Ok(cfg)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let args = Args::parse();
    let result = match args.command {
        Command::Schema => {
            print!("{}", config_schema());
            Ok(())
        }
        Command::Run { config } => load(&config).and_then(|cfg| run(&cfg)).map(|report| {
            for line in &report.summary {
                println!("{line}");
            }
            for (label, t) in &report.timings {
                println!("{label}: {t:.3} s");
            }
            println!("wrote {} files to {}", report.files.len(), report.output_dir.display());
        }),
        Command::Bench { config } => load(&config).and_then(|cfg| benchmark(&cfg)).map(|rows| {
            print!("{}", benchmark_table(&rows));
        }),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
