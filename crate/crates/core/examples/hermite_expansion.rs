//! Hermite coefficients, rank, sparsity and `C(phi)` for catalog functions.
//!
//! ```bash
//! cargo run --release --example hermite_expansion
//! ```

use breuer_major::hermite::c_phi;
use breuer_major::{ExpansionConfig, SubordinatedFunction};

fn main() -> breuer_major::Result<()> {
    let cfg = ExpansionConfig::default();
    for spec in ["hermite:2", "abs_centered", "cos_centered", "sign", "poly:-1,0,1,1"] {
        let f = SubordinatedFunction::from_catalog(spec, &cfg)?;
        let e = f.expansion();
        let first: Vec<String> = e.coeffs().iter().take(7).map(|a| format!("{a:+.5}")).collect();
        let c = match c_phi(&f, cfg.quad_order) {
            Ok(c) => format!("{c:.6}"),
            Err(err) => format!("n/a ({err})"),
        };
        println!("{spec:>14}  rank {:?}  sparsity {}  tail {:.2e}", e.rank(), e.sparsity(), e.tail_mass());
        println!("{:>14}  a_0..a_6 = [{}]", "", first.join(", "));
        println!("{:>14}  C(phi) = {c}", "");
    }
    Ok(())
}
