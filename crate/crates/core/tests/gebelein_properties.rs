use breuer_major::gebelein::{check_gebelein, random_pair, random_pair_in_range, rigid_coupling, SubspacePair};
use breuer_major::simulate::replication_rng;
use nalgebra::{dmatrix, DMatrix};
use proptest::prelude::*;

/// `max |a' G12 b| / sqrt(a' G1 a  b' G2 b)` over a grid of directions in
/// the plane, refined once around the best cell.
fn theta_by_search(g1: &DMatrix<f64>, g2: &DMatrix<f64>, g12: &DMatrix<f64>) -> f64 {
    let corr = |s: f64, t: f64| {
        let a = nalgebra::dvector![s.cos(), s.sin()];
        let b = nalgebra::dvector![t.cos(), t.sin()];
        (a.transpose() * g12 * &b)[0].abs() / ((a.transpose() * g1 * &a)[0] * (b.transpose() * g2 * &b)[0]).sqrt()
    };
    let grid = 800;
    let step = std::f64::consts::PI / grid as f64;
    let (mut best, mut at) = (0.0, (0.0, 0.0));
    for i in 0..grid {
        for j in 0..grid {
            let (s, t) = (i as f64 * step, j as f64 * step);
            let v = corr(s, t);
            if v > best {
                best = v;
                at = (s, t);
            }
        }
    }
    let fine = step / 200.0;
    for i in -200..=200 {
        for j in -200..=200 {
            best = f64::max(best, corr(at.0 + i as f64 * fine, at.1 + j as f64 * fine));
        }
    }
    best
}

#[test]
fn theta_agrees_with_direction_search() {
    let mut rng = replication_rng(404, 0);
    for _ in 0..6 {
        let p = random_pair(&mut rng, 2, 2).unwrap();
        let searched = theta_by_search(p.g1(), p.g2(), p.g12());
        assert!((p.theta() - searched).abs() < 1e-4, "{} vs {searched}", p.theta());
    }
}

#[test]
fn zero_cross_gram_gives_zero_lhs() {
    let p = SubspacePair::new(dmatrix![1.0, 0.3; 0.3, 1.0], dmatrix![2.0], dmatrix![0.0; 0.0]).unwrap();
    let c = check_gebelein(|w| w[0] * w[1] - 0.3, 2, |w| w[0].powi(3), &p, 4).unwrap();
    assert!(c.lhs.abs() < 1e-12);
    assert!(c.holds);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn theta_ignores_the_choice_of_basis(
        seed in any::<u64>(),
        a in prop::array::uniform4(-1.0f64..1.0),
        b in prop::array::uniform4(-1.0f64..1.0),
    ) {
        let mut rng = replication_rng(seed, 0);
        let p = random_pair(&mut rng, 2, 2).unwrap();
        let a = DMatrix::from_row_slice(2, 2, &a) + DMatrix::identity(2, 2) * 2.5;
        let b = DMatrix::from_row_slice(2, 2, &b) + DMatrix::identity(2, 2) * 2.5;
        let q = SubspacePair::new(
            a.transpose() * p.g1() * &a,
            b.transpose() * p.g2() * &b,
            a.transpose() * p.g12() * &b,
        ).unwrap();
        prop_assert!((p.theta() - q.theta()).abs() < 1e-10);
    }

    #[test]
    fn negating_a_functional_changes_nothing(seed in any::<u64>()) {
        let mut rng = replication_rng(seed, 1);
        let p = random_pair(&mut rng, 2, 1).unwrap();
        let m = p.g1()[(0, 1)];
        let f = move |w: &[f64]| w[0] * w[1] - m;
        let g = |w: &[f64]| w[0].powi(3) + w[0];
        let c = check_gebelein(f, 2, g, &p, 4).unwrap();
        let d = check_gebelein(move |w: &[f64]| -f(w), 2, g, &p, 4).unwrap();
        prop_assert!((c.lhs - d.lhs).abs() <= 1e-12 * (1.0 + c.lhs));
        prop_assert!(c.holds && d.holds);
    }

    #[test]
    fn coupling_is_an_isometry(seed in any::<u64>(), d1 in 1usize..=4, d2 in 1usize..=4) {
        let mut rng = replication_rng(seed, 2);
        let p = random_pair_in_range(&mut rng, d1, d2, 0.05, 0.95).unwrap();
        let c = rigid_coupling(&p).unwrap();
        prop_assert!(c.residual_i <= 1e-10 && c.residual_ii <= 1e-10);
        prop_assert!(c.u_norm <= c.theta * c.theta + 1e-10);
    }
}
