//! Both total-variation bounds, the best exponent `b`, and the sharper bound
//! built from the exact quadruple sums.
//!
//! ```bash
//! cargo run --release --example berry_esseen_bounds
//! ```

use breuer_major::bounds::{best_b, bound_i, msg_bound, msg_sum_rank2, s4_lower_check, SumMode};
use breuer_major::covariance::sigma_n;
use breuer_major::hermite::c_phi;
use breuer_major::{CovarianceModel, ExpansionConfig, SubordinatedFunction};

fn main() -> breuer_major::Result<()> {
    let cfg = ExpansionConfig::default();
    let f = SubordinatedFunction::from_catalog("abs_centered", &cfg)?;
    let c = c_phi(&f, cfg.quad_order)?;
    let sparsity = f.expansion().sparsity();
    for literal in ["exp:0.5", "pow:0.8"] {
        let m = CovarianceModel::parse(literal)?;
        println!("{literal}");
        for n in [256, 4096, 65536] {
            let s = sigma_n(f.expansion(), &m, n)?;
            let (b, ii) = best_b(c, s, &m, n, 0.01, sparsity)?;
            let sharp = msg_bound(c, s, msg_sum_rank2(&m, n, SumMode::Fast)?)?;
            let s4 = s4_lower_check(&m, n)?;
            println!(
                "  n = {n:>5}  (i) {:.4}  (ii) {ii:.4} at b = {b:.2}  sharp {sharp:.4}  s4 {:.3} >= {:.3}",
                bound_i(c, s, &m, n)?,
                s4.lhs,
                s4.rhs
            );
        }
    }
    Ok(())
}
