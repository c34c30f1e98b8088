use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use bjorling::cli::{self, Exit, RunOptions};

#[derive(Parser)]
#[command(name = "bjorling", version, about = "Minimal surfaces through a curve with prescribed normal, in 3D Lie groups")]
struct Args {
    /// Worker threads (falls back to BJORLING_THREADS).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Directory for relative output paths.
    #[arg(long, global = true)]
    output_dir: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve, reconstruct, verify and export a job.
    Solve {
        config: PathBuf,
        /// Use the opposite orientation for the initial spinors.
        #[arg(long)]
        flip_normal: bool,
    },
    /// Re-verify a field dump without solving.
    Verify {
        dump: PathBuf,
        #[arg(long)]
        config: PathBuf,
    },
    /// Print the built-in models.
    ListModels,
    /// Compare a Euclidean job against the closed-form Schwarz solution.
    OracleCompare { config: PathBuf },
}

fn main() -> ExitCode {
    let args = Args::parse();
    if let Err(e) = cli::configure_threads(args.threads) {
        eprintln!("error: {e}");
        return ExitCode::from(Exit::Config.code() as u8);
    }
    let mut opts = RunOptions { output_dir: args.output_dir, flip_normal: false };
    let exit = match args.command {
        Command::Solve { config, flip_normal } => {
            opts.flip_normal = flip_normal;
            cli::cmd_solve(&config, &opts)
        }
        Command::Verify { dump, config } => cli::cmd_verify(&dump, &config, &opts),
        Command::ListModels => {
            print!("{}", cli::list_models());
            Exit::Pass
        }
        Command::OracleCompare { config } => cli::cmd_oracle_compare(&config, &opts),
    };
    ExitCode::from(exit.code() as u8)
}
