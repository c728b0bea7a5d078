use std::path::PathBuf;
use std::process::ExitCode;

use breuer_major::experiment::{execute, ExperimentConfig, Verb};
use clap::{Parser, ValueEnum};

#[derive(Clone, Copy, ValueEnum)]
enum Cmd {
    Bounds,
    Simulate,
    Full,
    Gebelein,
    Sweep,
}

impl From<Cmd> for Verb {
    fn from(c: Cmd) -> Self {
        match c {
            Cmd::Bounds => Verb::Bounds,
            Cmd::Simulate => Verb::Simulate,
            Cmd::Full => Verb::Full,
            Cmd::Gebelein => Verb::Gebelein,
            Cmd::Sweep => Verb::Sweep,
        }
    }
}

/// Berry-Esseen bounds, simulation and Gebelein checks for subordinated
/// Gaussian sequences. Exits 0 when every check holds, 1 when one fails and
/// 2 on error.
#[derive(Parser)]
#[command(version)]
struct Args {
    verb: Cmd,
    /// Key-value config file; flags below override its entries.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    reps: Option<usize>,
    #[arg(long)]
    quad_order: Option<usize>,
}

fn run(args: &Args) -> breuer_major::Result<bool> {
    let mut cfg = match &args.config {
        Some(path) => ExperimentConfig::from_file(path)?,
        None => ExperimentConfig::default(),
    };
    let overrides = [
        ("seed", args.seed.map(|v| v.to_string())),
        ("out", args.out.as_ref().map(|p| p.display().to_string())),
        ("reps", args.reps.map(|v| v.to_string())),
        ("quad_order", args.quad_order.map(|v| v.to_string())),
    ];
    for (key, value) in overrides {
        if let Some(v) = value {
            cfg.override_key(key, &v, &format!("--{}", key.replace('_', "-")))?;
        }
    }
    let outcome = execute(args.verb.into(), &cfg)?;
    for line in &outcome.lines {
        println!("{line}");
    }
    for f in &outcome.failed {
        eprintln!("check failed: {f}");
    }
    println!("wrote {} files to {}", outcome.files.len(), cfg.out.display());
    Ok(outcome.all_hold)
}

fn main() -> ExitCode {
    let args = Args::parse();
    match run(&args) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
