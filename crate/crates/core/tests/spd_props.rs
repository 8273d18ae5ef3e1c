mod common;

use common::{jacobi_eigen, matmul, random_spd, rel_err, sym_fn, transpose};
use ndarray::{array, Array2};
use orthonet_core::spd::{congruence, relative_frobenius_error};
use orthonet_core::{riemann_dist, spd_exp, spd_log, sym_eig, SpdMatrix};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn spd(a: Array2<f64>) -> SpdMatrix {
    SpdMatrix::new(a).unwrap()
}

#[test]
fn two_by_two_eigenpairs_match_characteristic_polynomial() {
    // λ² − 4λ + 3 = 0
    let e = sym_eig(array![[2.0, 1.0], [1.0, 2.0]].view()).unwrap();
    assert!((e.values[0] - 1.0).abs() < 1e-14);
    assert!((e.values[1] - 3.0).abs() < 1e-14);
    let s = 0.5f64.sqrt();
    assert!((e.vectors[[0, 0]].abs() - s).abs() < 1e-14);
    assert!((e.vectors[[0, 0]] + e.vectors[[1, 0]]).abs() < 1e-14);
    assert!((e.vectors[[0, 1]] - e.vectors[[1, 1]]).abs() < 1e-14);
}

#[test]
fn log_of_two_by_two() {
    let l = spd_log(&spd(array![[2.0, 1.0], [1.0, 2.0]])).unwrap();
    let h = 3f64.ln() / 2.0;
    for v in l.iter() {
        assert!((v - h).abs() < 1e-14);
    }
}

#[test]
fn distance_closed_forms() {
    let d = riemann_dist(&spd(array![[2.0]]), &spd(array![[8.0]])).unwrap();
    assert!((d - 4f64.ln().powi(2)).abs() < 1e-12);
    let d = riemann_dist(
        &spd(Array2::from_diag(&array![1.0, 4.0])),
        &spd(Array2::eye(2)),
    )
    .unwrap();
    assert!((d - 1.921812).abs() < 1e-6);
}

#[test]
fn eigenvalues_agree_with_jacobi_on_random_matrices() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for n in [3, 7, 20] {
        let a = random_spd(&mut rng, n);
        let (w, _) = jacobi_eigen(&a);
        let e = sym_eig(a.view()).unwrap();
        for (x, y) in e.values.iter().zip(&w) {
            assert!((x - y).abs() < 1e-10 * (1.0 + y.abs()));
        }
    }
}

fn spd_strategy(max_dim: usize) -> impl Strategy<Value = Array2<f64>> {
    (1..=max_dim, any::<u64>()).prop_map(|(n, seed)| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        random_spd(&mut rng, n)
    })
}

fn sym_strategy(max_dim: usize) -> impl Strategy<Value = Array2<f64>> {
    (1..=max_dim, any::<u64>()).prop_map(|(n, seed)| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = common::gaussian_matrix(&mut rng, n, n);
        (&g + &g.t()) * 0.5
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn exp_inverts_log(a in spd_strategy(12)) {
        let m = spd(a.clone());
        let back = spd_exp(spd_log(&m).unwrap().view()).unwrap();
        prop_assert!(relative_frobenius_error(back.view(), a.view()) < 1e-10);
    }

    #[test]
    fn log_inverts_exp(s in sym_strategy(12)) {
        let back = spd_log(&spd_exp(s.view()).unwrap()).unwrap();
        let diff = (&back - &s).iter().fold(0.0f64, |m, v| m.max(v.abs()));
        prop_assert!(diff < 1e-10);
    }

    #[test]
    fn eig_reconstructs_input(s in sym_strategy(16)) {
        let e = sym_eig(s.view()).unwrap();
        let back = e.reconstruct_with(|v| v);
        let diff = (&back - &s).iter().fold(0.0f64, |m, v| m.max(v.abs()));
        prop_assert!(diff < 1e-12 * (1.0 + s.iter().fold(0.0f64, |m, v| m.max(v.abs()))) * 16.0);
        prop_assert!(e.values.windows(2).into_iter().all(|w| w[0] <= w[1]));
        let vtv = matmul(&transpose(&e.vectors), &e.vectors);
        prop_assert!(rel_err(&vtv, &Array2::eye(s.nrows())) < 1e-12);
    }

    #[test]
    fn distance_is_symmetric_and_zero_on_diagonal(a in spd_strategy(8), seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let b = random_spd(&mut rng, a.nrows());
        let (ma, mb) = (spd(a), spd(b));
        let ab = riemann_dist(&ma, &mb).unwrap();
        let ba = riemann_dist(&mb, &ma).unwrap();
        prop_assert!((ab - ba).abs() < 1e-9 * (1.0 + ab));
        prop_assert!(riemann_dist(&ma, &ma).unwrap() < 1e-20);
    }

    #[test]
    fn distance_is_congruence_invariant(a in spd_strategy(6), seed in any::<u64>()) {
        let n = a.nrows();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let b = random_spd(&mut rng, n);
        let mut g = common::gaussian_matrix(&mut rng, n, n);
        for i in 0..n {
            g[[i, i]] += 3.0;
        }
        let move_by = |m: &Array2<f64>| spd(matmul(&matmul(&g, m), &transpose(&g)));
        let before = riemann_dist(&spd(a.clone()), &spd(b.clone())).unwrap();
        let after = riemann_dist(&move_by(&a), &move_by(&b)).unwrap();
        prop_assert!((before - after).abs() < 1e-7 * (1.0 + before));
    }

    #[test]
    fn square_root_matches_jacobi(a in spd_strategy(10)) {
        let m = spd(a.clone());
        let root = m.sqrt().unwrap();
        prop_assert!(rel_err(&root, &sym_fn(&a, f64::sqrt)) < 1e-10);
        let inv_root = m.inv_sqrt().unwrap();
        let id = congruence(&inv_root, &a);
        prop_assert!(rel_err(&id, &Array2::eye(a.nrows())) < 1e-10);
    }
}

#[test]
fn construction_rejects_indefinite_and_bad_input() {
    assert!(SpdMatrix::new(array![[1.0, 2.0], [2.0, 1.0]]).is_err());
    assert!(SpdMatrix::new(array![[1.0, f64::NAN], [0.0, 1.0]]).is_err());
    assert!(SpdMatrix::new(Array2::zeros((2, 3))).is_err());
    assert!(spd_exp(array![[800.0]].view()).is_err());
}
