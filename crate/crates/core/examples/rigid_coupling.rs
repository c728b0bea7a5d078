//! The rigid coupling of two subspaces: `tau1` reproduces the projection
//! scaled by `1 / theta` and `tau` is an isometry.
//!
//! ```bash
//! cargo run --release --example rigid_coupling
//! ```

use breuer_major::gebelein::{random_pair_in_range, rigid_coupling};
use breuer_major::simulate::replication_rng;

fn main() -> breuer_major::Result<()> {
    let mut rng = replication_rng(3, 0);
    for _ in 0..4 {
        let pair = random_pair_in_range(&mut rng, 2, 3, 0.05, 0.95)?;
        let c = rigid_coupling(&pair)?;
        println!(
            "theta {:.4}  ||U|| {:.4} <= {:.4}  residuals {:.1e} {:.1e}",
            c.theta,
            c.u_norm,
            c.theta * c.theta,
            c.residual_i,
            c.residual_ii
        );
    }
    println!("tau1 of the last pair:\n{}", rigid_coupling(&random_pair_in_range(&mut rng, 2, 2, 0.3, 0.7)?)?.tau1);
    Ok(())
}
