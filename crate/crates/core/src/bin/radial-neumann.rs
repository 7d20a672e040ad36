use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use radial_neumann::cli::{self, Command};

/// Radial Neumann solver, principal eigenvalue brackets and supersolution
/// certificates for fully nonlinear elliptic operators.
#[derive(Parser, Debug)]
#[command(version, about)]
struct Args {
    #[arg(value_enum)]
    command: Command,

    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,

    /// Directory for output files.
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,

    /// Overrides the sampling seed of the configuration.
    #[arg(long)]
    seed: Option<u64>,
}

fn main() -> ExitCode {
    let args = Args::parse();
    let code = cli::run(args.command, &args.config, &args.out_dir, args.seed);
    ExitCode::from(code as u8)
}
