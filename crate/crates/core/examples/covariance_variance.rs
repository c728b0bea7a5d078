//! Correlation models, the exact finite-n variance and its limit.
//!
//! ```bash
//! cargo run --release --example covariance_variance
//! ```

use breuer_major::covariance::{lb_sum, sigma_limit, sigma_n};
use breuer_major::{CovarianceModel, ExpansionConfig, SubordinatedFunction};

fn main() -> breuer_major::Result<()> {
    let f = SubordinatedFunction::from_catalog("hermite:2", &ExpansionConfig::default())?;
    for literal in ["white", "exp:0.5", "pow:0.8", "fgn:0.7"] {
        let m = CovarianceModel::parse(literal)?;
        print!("{literal:>8}  rho(1..4) =");
        for k in 1..=4 {
            print!(" {:.4}", m.rho(k));
        }
        println!();
        for n in [64, 1024, 16384] {
            println!(
                "          n = {n:>5}  sigma_n^2 = {:.6}  sum|rho|^2 = {:.4}",
                sigma_n(f.expansion(), &m, n)?,
                lb_sum(&m, n, 2.0)?
            );
        }
        match sigma_limit(f.expansion(), &m, 1_000_000) {
            Ok(s) => println!("          sigma^2 = {:.6} (lag tail <= {:.1e})", s.value, s.lag_tail_bound),
            Err(e) => println!("          sigma^2 undefined: {e}"),
        }
    }
    Ok(())
}
