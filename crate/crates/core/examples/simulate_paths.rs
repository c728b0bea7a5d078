//! Stationary Gaussian paths by circulant embedding, checked against the
//! model's autocovariance.
//!
//! ```bash
//! cargo run --release --example simulate_paths
//! ```

use breuer_major::simulate::{sample_autocovariance, sample_path, PathSampler};
use breuer_major::CovarianceModel;

fn main() -> breuer_major::Result<()> {
    let m = CovarianceModel::parse("fgn:0.8")?;
    let n = 4096;
    let sampler = PathSampler::new(&m, n)?;
    println!("method {:?}, min embedding eigenvalue {:.3e}", sampler.method(), sampler.min_embedding_eigenvalue());

    let path = sample_path(&m, n, 7)?;
    println!("first values: {:?}", &path.values[..5]);

    for a in sample_autocovariance(&m, n, 5, 2000, 11)? {
        let rho = m.rho(a.lag as i64);
        println!("lag {}  rho {rho:.4}  estimate {:.4} +/- {:.4}", a.lag, a.mean, a.std_error);
    }
    Ok(())
}
