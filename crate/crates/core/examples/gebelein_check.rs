//! The Gebelein inequality for a pair of Gaussian subspaces, and the
//! randomized suite that exercises it.
//!
//! ```bash
//! cargo run --release --example gebelein_check
//! ```

use breuer_major::gebelein::{check_gebelein, check_rigid, run_gebelein_suite, SubspacePair};
use breuer_major::hermite::hermite_eval;
use nalgebra::dmatrix;

fn main() -> breuer_major::Result<()> {
    // Two correlated planes; F has rank 2, G is arbitrary.
    let pair = SubspacePair::new(
        dmatrix![1.0, 0.2; 0.2, 1.0],
        dmatrix![1.0, 0.0; 0.0, 1.0],
        dmatrix![0.5, 0.1; 0.0, 0.3],
    )?;
    let f = |w: &[f64]| w[0] * w[1] - 0.2;
    let g = |w: &[f64]| w[0].powi(3) + w[1] * w[1] - 1.0;
    let r = check_gebelein(f, 2, g, &pair, 6)?;
    println!("theta {:.4}: {:.5} <= {:.5} ({})", r.theta, r.lhs, r.rhs, if r.holds { "holds" } else { "fails" });

    // Equality for Hermite polynomials.
    let h4 = |x: f64| hermite_eval(4, x).unwrap();
    let r = check_rigid(h4, h4, 0.6, 4, 5)?;
    println!("H4 at 0.6: lhs {:.8} rhs {:.8} tight {}", r.lhs, r.rhs, r.tight);

    let suite = run_gebelein_suite(200, 1, 3)?;
    println!(
        "suite: {}/{} pass, {} tight, min slack {:.2e}",
        suite.passed, suite.count, suite.tight, suite.min_slack
    );
    Ok(())
}
