use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use yzero::runner::{run_file, Clock, Family};
use yzero::Error;

#[derive(Clone, Copy, Debug, ValueEnum)]
enum FamilyArg {
    Bounds,
    Attack,
    Entropy,
    Keygen,
}

impl From<FamilyArg> for Family {
    fn from(f: FamilyArg) -> Self {
        match f {
            FamilyArg::Bounds => Family::Bounds,
            FamilyArg::Attack => Family::Attack,
            FamilyArg::Entropy => Family::Entropy,
            FamilyArg::Keygen => Family::Keygen,
        }
    }
}

/// Y-00 quantum stream cipher simulator.
#[derive(Debug, Parser)]
#[command(name = "yzero", version)]
struct Cli {
    family: FamilyArg,
    /// TOML scenario file.
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `[output] dir`.
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Master seed; overrides `scenario.master_seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long)]
    threads: Option<usize>,
}

fn clock() -> Clock {
    std::env::var("SOURCE_DATE_EPOCH")
        .ok()
        .and_then(|v| v.trim().parse().ok())
        .map_or(Clock::System, Clock::Fixed)
}

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Config { .. } => 2,
        Error::RegimeCap(_) => 3,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("error: --threads must be >= 1");
            return ExitCode::from(2);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
        {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    match run_file(
        cli.family.into(),
        &cli.config,
        cli.out_dir.as_deref(),
        cli.seed,
        clock(),
    ) {
        Ok(report) => {
            for f in &report.files {
                println!("{}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
