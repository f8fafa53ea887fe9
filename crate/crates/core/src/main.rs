use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};

use spde_euler::cli::{run, Command};
use spde_euler::config::RunConfig;

#[derive(Clone, Copy, ValueEnum)]
enum Sub {
    Simulate,
    WeakOrder,
    StrongOrder,
    Invariant,
    Regularity,
    GaussianDiag,
    Ap,
    Mcmc,
}

#[derive(Parser)]
#[command(
    version,
    about = "Euler schemes and diagnostics for the 1-D stochastic heat equation"
)]
struct Args {
    #[arg(value_enum)]
    command: Sub,
    /// Flat key = value configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Master seed (overrides the config file).
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads for replica parallelism (default: available cores).
    #[arg(long)]
    threads: Option<usize>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Extra key=value overrides, applied after the config file.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

fn main() -> ExitCode {
    let args = Args::parse();
    let command = match args.command {
        Sub::Simulate => Command::Simulate,
        Sub::WeakOrder => Command::WeakOrder,
        Sub::StrongOrder => Command::StrongOrder,
        Sub::Invariant => Command::Invariant,
        Sub::Regularity => Command::Regularity,
        Sub::GaussianDiag => Command::GaussianDiag,
        Sub::Ap => Command::Ap,
        Sub::Mcmc => Command::Mcmc,
    };
    if let Some(n) = args.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
        {
            eprintln!("error: {e}");
            return ExitCode::FAILURE;
        }
    }
    let result = (|| {
        let mut cfg = match &args.config {
            Some(path) => RunConfig::from_file(path)?,
            None => RunConfig::new(),
        };
        for pair in &args.overrides {
            cfg.set_pair(pair)?;
        }
        if let Some(seed) = args.seed {
            cfg.set("seed", &seed.to_string())?;
        }
        run(command, &cfg, &args.out)
    })();
    match result {
        Ok(report) => {
            for f in &report.files {
                println!("{}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
