//! Monte Carlo total-variation and Kolmogorov distances of `V_n` to the
//! standard normal, next to `2 sqrt(Var <DV_n, u_n>)`.
//!
//! ```bash
//! cargo run --release --example distance_estimates
//! ```

use breuer_major::simulate::sample_vn_and_inner;
use breuer_major::stats::{kolmogorov, tv_estimate, BinRule};
use breuer_major::{CovarianceModel, ExpansionConfig, SubordinatedFunction};

fn main() -> breuer_major::Result<()> {
    let f = SubordinatedFunction::from_catalog("hermite:2", &ExpansionConfig::default())?;
    let m = CovarianceModel::parse("exp:0.5")?;
    for n in [256, 1024, 4096] {
        let (vn, inner) = sample_vn_and_inner(&f, &m, n, 5000, 21)?;
        let tv = tv_estimate(&vn.samples, BinRule::FreedmanDiaconis, 200, 22)?;
        let ks = kolmogorov(&vn.samples)?;
        println!(
            "n = {n:>4}  tv {:.4} [{:.4}, {:.4}]  ks {:.4}  sqrt(n) ks {:.3}  2 sd(inner) {:.4}",
            tv.value,
            tv.ci_low,
            tv.ci_high,
            ks.value,
            ks.value * (n as f64).sqrt(),
            2.0 * inner.variance.sqrt()
        );
    }
    Ok(())
}
