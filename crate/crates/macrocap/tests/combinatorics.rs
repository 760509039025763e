mod common;

use common::*;
use macrocap::combinatorics::*;
use macrocap::montecarlo::StreamRng;
use proptest::prelude::*;

#[test]
fn ryser_matches_definition_on_integers() {
    let mut rng = StreamRng::new(3, 0);
    for n in 1..=7 {
        for _ in 0..3 {
            let a = RealMatrix::from_fn(n, n, |_, _| (rng.uniform() * 7.0).floor() - 2.0);
            assert_eq!(perm_square(&a).unwrap(), perm_naive(&a), "n = {n}");
        }
    }
}

#[test]
fn row_and_column_subset_sums_agree() {
    let mut rng = StreamRng::new(4, 0);
    for _ in 0..50 {
        let a = random_real(&mut rng, 5, 3);
        for k in 0..=3 {
            let rows: f64 = subset_iter(5, k).map(|s| perm_any(&a.select_rows(s.indices())).unwrap()).sum();
            let cols: f64 = subset_iter(3, k).map(|s| perm_any(&a.select_cols(s.indices())).unwrap()).sum();
            assert!(rel(rows, cols) < 1e-12 || rows == cols, "k = {k}");
        }
    }
}

#[test]
fn empty_subset_sum_is_one() {
    let a = RealMatrix::from_fn(4, 3, |i, j| (i + j) as f64);
    let s: f64 = subset_iter(3, 0).map(|s| perm_any(&a.select_cols(s.indices())).unwrap()).sum();
    assert_eq!(s, 1.0);
}

#[test]
fn permanent_is_mean_squared_determinant() {
    let mut rng = StreamRng::new(5, 0);
    for n in 1..=3 {
        let a = random_real(&mut rng, n, n);
        let (m, se) = mc_mean(&a, 100_000, 9 + n as u64, det_re_abs2);
        let p = perm_square(&a).unwrap();
        assert!((m - p).abs() <= 3.0 * se, "n = {n}: {m} ± {se} vs {p}");
    }
}

fn det_re_abs2(h: &macrocap::linalg::ComplexMatrix) -> f64 {
    macrocap::linalg::lu_det(h).unwrap().norm_sqr()
}

#[test]
fn principal_minor_sums_are_esf_for_diagonal() {
    let d = [0.3, 1.2, 0.7, 2.0];
    let m = RealMatrix::from_fn(4, 4, |i, j| if i == j { d[i] } else { 0.0 });
    for k in 0..=4 {
        assert!((tr_k(&m, k).unwrap() - esf(&d, k)).abs() < 1e-14);
    }
}

proptest! {
    #[test]
    fn permanent_invariant_under_row_and_column_shuffles(
        vals in prop::collection::vec(0.0f64..2.0, 16),
        rot in 0usize..4,
    ) {
        let a = RealMatrix::from_vec(4, 4, vals).unwrap();
        let rows: Vec<usize> = (0..4).map(|i| (i + rot) % 4).collect();
        let cols = [2, 0, 3, 1];
        let b = a.select(&rows, &cols);
        let (pa, pb) = (perm_square(&a).unwrap(), perm_square(&b).unwrap());
        prop_assert!((pa - pb).abs() <= 1e-12 * pa.abs().max(1.0));
        prop_assert!((pa - perm_square(&a.transpose()).unwrap()).abs() <= 1e-12 * pa.abs().max(1.0));
    }

    #[test]
    fn subsets_are_counted_by_binomials(n in 0usize..10, k in 0usize..10) {
        prop_assume!(k <= n);
        prop_assert_eq!(subset_iter(n, k).count() as u128, binomial(n, k));
    }
}
