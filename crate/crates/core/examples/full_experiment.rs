//! A complete run from a config file: bounds, Monte Carlo, report files and
//! the manifest, as the `full` command does.
//!
//! ```bash
//! cargo run --release --example full_experiment
//! ```

use breuer_major::experiment::{execute, ExperimentConfig, Verb};

fn main() -> breuer_major::Result<()> {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/examples/configs/h2_exp.cfg");
    let mut cfg = ExperimentConfig::from_file(path)?;
    let out = std::env::temp_dir().join("breuer-major-example");
    cfg.override_key("out", &out.display().to_string(), "example")?;
    cfg.override_key("reps", "2000", "example")?;

    let outcome = execute(Verb::Full, &cfg)?;
    for f in &outcome.files {
        println!("wrote {}", f.display());
    }
    println!("all checks hold: {}", outcome.all_hold);
    for failed in &outcome.failed {
        println!("  {failed}");
    }
    Ok(())
}
