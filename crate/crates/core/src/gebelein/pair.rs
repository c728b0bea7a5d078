use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::error::{Error, Result};

/// Largest dimension accepted on either side.
pub const MAX_SUBSPACE_DIM: usize = 4;
pub const MAX_CONDITION: f64 = 1e12;
const SYMMETRY_TOL: f64 = 1e-12;
const FULL_PSD_TOL: f64 = 1e-10;

/// Two finite families spanning subspaces `H1`, `H2` of a Gaussian Hilbert
/// space, described by their Gram blocks.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SubspacePair {
    #[serde(serialize_with = "serialize_rows")]
    g1: DMatrix<f64>,
    #[serde(serialize_with = "serialize_rows")]
    g2: DMatrix<f64>,
    #[serde(serialize_with = "serialize_rows")]
    g12: DMatrix<f64>,
    theta: f64,
}

/// Matrices are written as lists of rows.
pub(crate) fn serialize_rows<S: serde::Serializer>(m: &DMatrix<f64>, s: S) -> std::result::Result<S::Ok, S::Error> {
    let rows: Vec<Vec<f64>> = m.row_iter().map(|r| r.iter().copied().collect()).collect();
    rows.serialize(s)
}

/// Inverse of the row layout used by [`serialize_rows`].
pub fn matrix_from_rows(rows: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    let ncols = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != ncols) {
        return Err(Error::InvalidArgument("ragged matrix rows".into()));
    }
    Ok(DMatrix::from_fn(rows.len(), ncols, |i, j| rows[i][j]))
}

fn check_symmetric(g: &DMatrix<f64>, name: &str) -> Result<()> {
    if !g.is_square() {
        return Err(Error::InvalidArgument(format!("{name} is not square")));
    }
    let scale = g.amax().max(1.0);
    if (g - g.transpose()).amax() > SYMMETRY_TOL * scale {
        return Err(Error::InvalidArgument(format!("{name} is not symmetric")));
    }
    Ok(())
}

fn check_spd(g: &DMatrix<f64>, name: &str) -> Result<()> {
    let eig = SymmetricEigen::new(g.clone()).eigenvalues;
    let max = eig.max();
    let min = eig.min();
    if !(min > 0.0) {
        return Err(Error::NotPositiveDefinite(format!("{name} has eigenvalue {min:e}")));
    }
    let cond = max / min;
    if cond > MAX_CONDITION {
        return Err(Error::IllConditioned(cond));
    }
    Ok(())
}

/// `G^{-1/2}` and `G^{1/2}` of a symmetric positive definite matrix.
pub(crate) fn inv_sqrt_and_sqrt(g: &DMatrix<f64>) -> (DMatrix<f64>, DMatrix<f64>) {
    let eig = SymmetricEigen::new(g.clone());
    let v = &eig.eigenvectors;
    let inv = DMatrix::from_diagonal(&eig.eigenvalues.map(|l| 1.0 / l.sqrt()));
    let sq = DMatrix::from_diagonal(&eig.eigenvalues.map(f64::sqrt));
    (v * inv * v.transpose(), v * sq * v.transpose())
}

/// Top singular value of `G1^{-1/2} G12 G2^{-1/2}`, read off the symmetric
/// eigendecomposition of `M^T M`.
fn whitened_theta(g1: &DMatrix<f64>, g2: &DMatrix<f64>, g12: &DMatrix<f64>) -> f64 {
    let (w1, _) = inv_sqrt_and_sqrt(g1);
    let (w2, _) = inv_sqrt_and_sqrt(g2);
    let m = w1 * g12 * w2;
    let top = SymmetricEigen::new(m.transpose() * &m).eigenvalues.max();
    top.max(0.0).sqrt()
}

impl SubspacePair {
    pub fn new(g1: DMatrix<f64>, g2: DMatrix<f64>, g12: DMatrix<f64>) -> Result<Self> {
        let (d1, d2) = (g1.nrows(), g2.nrows());
        if d1 == 0 || d2 == 0 || d1 > MAX_SUBSPACE_DIM || d2 > MAX_SUBSPACE_DIM {
            return Err(Error::InvalidArgument(format!(
                "subspace dimensions ({d1}, {d2}) must lie in 1..={MAX_SUBSPACE_DIM}"
            )));
        }
        if g12.shape() != (d1, d2) {
            return Err(Error::InvalidArgument(format!(
                "cross-Gram has shape {:?}, expected ({d1}, {d2})",
                g12.shape()
            )));
        }
        check_symmetric(&g1, "G1")?;
        check_symmetric(&g2, "G2")?;
        check_spd(&g1, "G1")?;
        check_spd(&g2, "G2")?;
        let full = full_gram(&g1, &g2, &g12);
        let eig = SymmetricEigen::new(full).eigenvalues;
        if eig.min() < -FULL_PSD_TOL * eig.max() {
            return Err(Error::NotPositiveDefinite(format!(
                "full Gram matrix has eigenvalue {:e}",
                eig.min()
            )));
        }
        let theta = whitened_theta(&g1, &g2, &g12);
        if theta > 1.0 + 1e-9 {
            return Err(Error::NotPositiveDefinite(format!("theta = {theta} exceeds 1")));
        }
        Ok(Self {
            g1,
            g2,
            g12,
            theta: theta.min(1.0),
        })
    }

    /// Pair spanned by explicit vectors of a common Euclidean space.
    pub fn from_vectors(basis1: &[DVector<f64>], basis2: &[DVector<f64>]) -> Result<Self> {
        let gram = |a: &[DVector<f64>], b: &[DVector<f64>]| {
            DMatrix::from_fn(a.len(), b.len(), |i, j| a[i].dot(&b[j]))
        };
        Self::new(gram(basis1, basis1), gram(basis2, basis2), gram(basis1, basis2))
    }

    /// One-dimensional subspaces spanned by unit vectors with inner product `rho`.
    pub fn scalar(rho: f64) -> Result<Self> {
        Self::new(
            DMatrix::from_element(1, 1, 1.0),
            DMatrix::from_element(1, 1, 1.0),
            DMatrix::from_element(1, 1, rho),
        )
    }

    pub fn g1(&self) -> &DMatrix<f64> {
        &self.g1
    }

    pub fn g2(&self) -> &DMatrix<f64> {
        &self.g2
    }

    pub fn g12(&self) -> &DMatrix<f64> {
        &self.g12
    }

    pub fn d1(&self) -> usize {
        self.g1.nrows()
    }

    pub fn d2(&self) -> usize {
        self.g2.nrows()
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    /// `[[G1, G12], [G12^T, G2]]`.
    pub fn full_gram(&self) -> DMatrix<f64> {
        full_gram(&self.g1, &self.g2, &self.g12)
    }
}

fn full_gram(g1: &DMatrix<f64>, g2: &DMatrix<f64>, g12: &DMatrix<f64>) -> DMatrix<f64> {
    let (d1, d2) = (g1.nrows(), g2.nrows());
    let mut full = DMatrix::zeros(d1 + d2, d1 + d2);
    full.view_mut((0, 0), (d1, d1)).copy_from(g1);
    full.view_mut((d1, d1), (d2, d2)).copy_from(g2);
    full.view_mut((0, d1), (d1, d2)).copy_from(g12);
    full.view_mut((d1, 0), (d2, d1)).copy_from(&g12.transpose());
    full
}

/// Maximal correlation of the pair.
pub fn theta(p: &SubspacePair) -> f64 {
    p.theta()
}

fn gaussian_vector<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> DVector<f64> {
    DVector::from_fn(dim, |_, _| rng.sample(StandardNormal))
}

/// Random admissible pair with unit-norm basis vectors. The second family mixes a component shared with
/// the whole space and one confined to its own coordinates, with a random
/// mixing weight, so that `theta` spreads over `(0, 1)`.
pub fn random_pair<R: Rng + ?Sized>(rng: &mut R, d1: usize, d2: usize) -> Result<SubspacePair> {
    let ambient = d1 + d2;
    for _ in 0..100 {
        let mix: f64 = rng.random();
        let basis1: Vec<DVector<f64>> = (0..d1)
            .map(|_| {
                let mut v = gaussian_vector(rng, ambient);
                v.rows_mut(d1, d2).fill(0.0);
                v.normalize()
            })
            .collect();
        let basis2: Vec<DVector<f64>> = (0..d2)
            .map(|_| {
                let shared = gaussian_vector(rng, ambient);
                let mut own = gaussian_vector(rng, ambient);
                own.rows_mut(0, d1).fill(0.0);
                (shared * mix + own * (1.0 - mix)).normalize()
            })
            .collect();
        if let Ok(p) = SubspacePair::from_vectors(&basis1, &basis2) {
            if condition(&p.g1) <= RANDOM_MAX_CONDITION && condition(&p.g2) <= RANDOM_MAX_CONDITION {
                return Ok(p);
            }
        }
    }
    Err(Error::InvalidArgument("could not draw an admissible pair".into()))
}

/// Gram condition numbers are squares of basis condition numbers and have a
/// heavy tail; random draws stay below this bound so that residuals near
/// machine precision are attainable.
pub const RANDOM_MAX_CONDITION: f64 = 1e4;

fn condition(g: &DMatrix<f64>) -> f64 {
    let e = SymmetricEigen::new(g.clone()).eigenvalues;
    e.max() / e.min()
}

/// Random pair with `G12 = 0`.
pub fn random_orthogonal_pair<R: Rng + ?Sized>(rng: &mut R, d1: usize, d2: usize) -> Result<SubspacePair> {
    let ambient = d1 + d2;
    let basis1: Vec<DVector<f64>> = (0..d1)
        .map(|_| {
            let mut v = gaussian_vector(rng, ambient);
            v.rows_mut(d1, d2).fill(0.0);
            v.normalize()
        })
        .collect();
    let basis2: Vec<DVector<f64>> = (0..d2)
        .map(|_| {
            let mut v = gaussian_vector(rng, ambient);
            v.rows_mut(0, d1).fill(0.0);
            v.normalize()
        })
        .collect();
    SubspacePair::from_vectors(&basis1, &basis2)
}

/// Rejection sampling of [`random_pair`] until `lo <= theta <= hi`.
pub fn random_pair_in_range<R: Rng + ?Sized>(
    rng: &mut R,
    d1: usize,
    d2: usize,
    lo: f64,
    hi: f64,
) -> Result<SubspacePair> {
    for _ in 0..10_000 {
        let p = random_pair(rng, d1, d2)?;
        if (lo..=hi).contains(&p.theta()) {
            return Ok(p);
        }
    }
    Err(Error::InvalidArgument(format!("no pair with theta in [{lo}, {hi}] after 10000 draws")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simulate::replication_rng;

    #[test]
    fn orthogonal_and_scalar_pairs() {
        let mut rng = replication_rng(1, 0);
        assert!(random_orthogonal_pair(&mut rng, 2, 3).unwrap().theta() < 1e-15);
        assert!((SubspacePair::scalar(0.7).unwrap().theta() - 0.7).abs() < 1e-15);
        assert!((SubspacePair::scalar(-0.7).unwrap().theta() - 0.7).abs() < 1e-15);
    }

    #[test]
    fn invalid_grams_are_rejected() {
        let one = DMatrix::from_element(1, 1, 1.0);
        assert!(SubspacePair::scalar(1.2).is_err());
        let singular = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        assert!(SubspacePair::new(singular, one.clone(), DMatrix::zeros(2, 1)).is_err());
        let nearly = DMatrix::from_row_slice(2, 2, &[1.0, 1.0 - 1e-14, 1.0 - 1e-14, 1.0]);
        assert!(matches!(
            SubspacePair::new(nearly, one.clone(), DMatrix::zeros(2, 1)),
            Err(Error::IllConditioned(_))
        ));
        let big = DMatrix::identity(5, 5);
        assert!(SubspacePair::new(big, one.clone(), DMatrix::zeros(5, 1)).is_err());
    }

    #[test]
    fn random_pairs_are_admissible() {
        let mut rng = replication_rng(2, 0);
        for _ in 0..20 {
            let p = random_pair_in_range(&mut rng, 2, 3, 0.05, 0.95).unwrap();
            assert!((0.05..=0.95).contains(&p.theta()));
        }
    }
}
