use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use decaylab::cli::{parse_config, run_with_override, Task};

/// Spectral lab for damped wave and Schrödinger equations.
#[derive(Parser, Debug)]
#[command(name = "decaylab", version)]
struct Args {
    /// Task to run (overrides the task in the config file).
    #[arg(value_enum)]
    task: Task,
    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides `output_dir` in the config).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    verbose: bool,
}

fn main() -> ExitCode {
    let args = Args::parse();
    let level = if args.verbose { "info" } else { "warn" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    let outcome = parse_config(&args.config).and_then(|mut cfg| {
        cfg.task = args.task;
        run_with_override(&cfg, args.out.as_deref())
    });
    match outcome {
        Ok((dir, manifest)) => {
            println!("{}: wrote {} files to {}", args.task.name(), manifest.files.len() + 1, dir.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("decaylab: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
