mod common;

use common::*;
use extendicap::qlinalg::*;
use proptest::prelude::*;
use rand::Rng;

fn layout(parts: &[(&str, usize)]) -> SystemLayout {
    SystemLayout::new(parts.iter().map(|&(l, d)| (l, d))).unwrap()
}

#[test]
fn tensor_of_identities_is_identity() {
    let a = Operator::identity(SystemLayout::single("A", 2));
    let b = Operator::identity(SystemLayout::single("B", 3));
    let t = tensor(&a, &b).unwrap();
    assert_eq!(t.matrix(), &CMat::identity(6, 6));
    assert_eq!(t.layout().dims(), vec![2, 3]);
}

#[test]
fn tensor_of_diagonals_follows_leftmost_significant_order() {
    let mut p0 = CMat::zeros(2, 2);
    p0[(0, 0)] = c(1.0, 0.0);
    let mut p1 = CMat::zeros(2, 2);
    p1[(1, 1)] = c(1.0, 0.0);
    let t = tensor(&op("A", p0), &op("B", p1)).unwrap();
    let diag: Vec<f64> = (0..4).map(|i| t.matrix()[(i, i)].re).collect();
    assert_eq!(diag, vec![0.0, 1.0, 0.0, 0.0]);
}

#[test]
fn pauli_x_tensor_squares_to_identity() {
    let mut x = CMat::zeros(2, 2);
    x[(0, 1)] = c(1.0, 0.0);
    x[(1, 0)] = c(1.0, 0.0);
    let t = tensor(&op("A", x.clone()), &op("B", x)).unwrap();
    let sq = t.matrix() * t.matrix();
    assert!((sq - CMat::identity(4, 4)).norm() < 1e-15);
}

#[test]
fn tensor_rejects_duplicate_labels() {
    let a = Operator::identity(SystemLayout::single("A", 2));
    assert!(tensor(&a, &a).is_err());
}

#[test]
fn marginal_of_maximally_entangled_is_maximally_mixed() {
    let phi = max_entangled(2);
    let m = partial_trace(&phi, &["B"]).unwrap();
    assert!((m.matrix() - CMat::identity(2, 2) * c(0.5, 0.0)).norm() < 1e-15);
    assert_eq!(m.layout().dims(), vec![2]);
}

#[test]
fn partial_trace_of_product_factorizes() {
    let mut r = rng(1);
    let rho = random_state(&mut r, 3, 3);
    let sigma = random_hermitian(&mut r, 2);
    let t = tensor(&op("A", rho.clone()), &op("B", sigma.clone())).unwrap();
    let m = partial_trace(&t, &["B"]).unwrap();
    assert!((m.matrix() - &rho * sigma.trace()).norm() < 1e-12);
}

#[test]
fn partial_trace_is_adjoint_to_tensoring_identity() {
    let mut r = rng(2);
    let lay = layout(&[("A", 2), ("B", 2)]);
    let x = Operator::new(lay, random_hermitian(&mut r, 4)).unwrap();
    let xa = partial_trace(&x, &["B"]).unwrap();
    for _ in 0..100 {
        let m = random_hermitian(&mut r, 2);
        let lhs = (kron(&m, &CMat::identity(2, 2)) * x.matrix()).trace();
        let rhs = (&m * xa.matrix()).trace();
        assert!((lhs - rhs).norm() < 1e-12);
    }
}

#[test]
fn partial_trace_of_middle_system_matches_summation() {
    let mut r = rng(3);
    let lay = layout(&[("A", 2), ("B", 3), ("C", 2)]);
    let x = Operator::new(lay, ginibre(&mut r, 12, 12)).unwrap();
    let got = partial_trace(&x, &["B"]).unwrap();
    let want = CMat::from_fn(4, 4, |i, j| {
        let (a, cc) = (i / 2, i % 2);
        let (a2, c2) = (j / 2, j % 2);
        (0..3).map(|b| x.matrix()[(a * 6 + b * 2 + cc, a2 * 6 + b * 2 + c2)]).sum()
    });
    assert!((got.matrix() - want).norm() < 1e-12);
    assert!(partial_trace(&x, &["Z"]).is_err());
}

#[test]
fn partial_transpose_is_an_involution_preserving_trace() {
    let mut r = rng(4);
    let lay = layout(&[("A", 2), ("B", 3)]);
    let x = Operator::new(lay, ginibre(&mut r, 6, 6)).unwrap();
    let t = partial_transpose(&x, &["B"]).unwrap();
    assert_eq!(t.trace(), x.trace());
    assert!((t.matrix() - transpose_second(x.matrix(), 2, 3)).norm() < 1e-15);
    let back = partial_transpose(&t, &["B"]).unwrap();
    assert_eq!(back.matrix(), x.matrix());
    assert!(partial_transpose(&x, &["Q"]).is_err());
}

#[test]
fn partially_transposed_bell_state_has_negative_eigenvalue() {
    let t = partial_transpose(&max_entangled(2), &["B"]).unwrap();
    assert!((min_eig(t.matrix()) + 0.5).abs() < 1e-12);
    let s = spectrum(&t).unwrap();
    let oracle: f64 = eig(t.matrix()).0.iter().map(|v| v.abs()).sum();
    assert!((s.trace_norm - oracle).abs() < 1e-12);
    assert!((s.trace_norm - 2.0).abs() < 1e-12);
}

#[test]
fn partial_transpose_of_product_transposes_factor() {
    let mut r = rng(5);
    let a = random_state(&mut r, 2, 2);
    let b = ginibre(&mut r, 3, 3);
    let t = tensor(&op("A", a.clone()), &op("B", b.clone())).unwrap();
    let pt = partial_transpose(&t, &["B"]).unwrap();
    assert!((pt.matrix() - kron(&a, &b.transpose())).norm() < 1e-14);
}

#[test]
fn identity_permutation_and_qubit_swap() {
    let lay = layout(&[("B1", 2), ("B2", 2)]);
    let w = permutation_unitary(&lay, &["B1", "B2"], &[0, 1]).unwrap();
    assert_eq!(w.matrix(), &CMat::identity(4, 4));
    let s = permutation_unitary(&lay, &["B1", "B2"], &[1, 0]).unwrap();
    // |01> has index 1, |10> has index 2
    assert_eq!(s.matrix()[(2, 1)], c(1.0, 0.0));
    assert_eq!(s.matrix()[(1, 2)], c(1.0, 0.0));
}

#[test]
fn three_cycle_cubes_to_identity() {
    let lay = layout(&[("B1", 2), ("B2", 2), ("B3", 2)]);
    let w = permutation_unitary(&lay, &["B1", "B2", "B3"], &[1, 2, 0]).unwrap();
    let cube = w.matrix() * w.matrix() * w.matrix();
    assert!((cube - CMat::identity(8, 8)).norm() < 1e-15);
    assert!((w.matrix() * w.matrix().adjoint() - CMat::identity(8, 8)).norm() < 1e-15);
}

#[test]
fn permutation_unitaries_form_a_representation() {
    for k in 2..=4 {
        for d in 2..=3 {
            if d == 3 && k == 4 {
                continue;
            }
            let labels: Vec<String> = (0..k).map(|i| format!("B{i}")).collect();
            let lr: Vec<&str> = labels.iter().map(|s| s.as_str()).collect();
            let lay = SystemLayout::new(labels.iter().map(|l| (l.clone(), d))).unwrap();
            let perms = permutations(k);
            let ws: Vec<CMat> =
                perms.iter().map(|p| permutation_unitary(&lay, &lr, p).unwrap().into_matrix()).collect();
            for (i, p) in perms.iter().enumerate() {
                for (j, s) in perms.iter().enumerate() {
                    let comp: Vec<usize> = (0..k).map(|x| p[s[x]]).collect();
                    let idx = perms.iter().position(|q| *q == comp).unwrap();
                    assert_eq!(&ws[i] * &ws[j], ws[idx], "k={k} d={d}");
                }
            }
        }
    }
}

#[test]
fn permutation_with_unequal_blocks_fails() {
    let lay = layout(&[("B1", 2), ("B2", 3)]);
    assert!(permutation_unitary(&lay, &["B1", "B2"], &[1, 0]).is_err());
}

#[test]
fn maximally_entangled_states() {
    let one = max_entangled(1);
    assert_eq!(one.matrix()[(0, 0)], c(1.0, 0.0));
    let two = max_entangled(2);
    for (i, j) in [(0, 0), (0, 3), (3, 0), (3, 3)] {
        assert!((two.matrix()[(i, j)] - c(0.5, 0.0)).norm() < 1e-15);
    }
    let three = max_entangled(3);
    let purity = (three.matrix() * three.matrix()).trace();
    assert!((purity - c(1.0, 0.0)).norm() < 1e-14);
    let ma = trace_first(three.matrix(), 3, 3);
    assert!((ma - CMat::identity(3, 3) / c(3.0, 0.0)).norm() < 1e-15);
}

#[test]
fn spectra_and_norms() {
    let s = spectrum(&Operator::identity(SystemLayout::single("A", 3))).unwrap();
    assert_eq!((s.trace_norm, s.operator_norm), (3.0, 1.0));
    let mut d = CMat::zeros(2, 2);
    d[(0, 0)] = c(2.0, 0.0);
    d[(1, 1)] = c(-1.0, 0.0);
    let s = spectrum(&op("A", d)).unwrap();
    assert!((s.trace_norm - 3.0).abs() < 1e-15 && (s.operator_norm - 2.0).abs() < 1e-15);
    assert_eq!(s.min_eigenvalue, -1.0);
    assert!(s.eigenvalues.windows(2).all(|w| w[0] <= w[1]));
    let mut r = rng(6);
    assert!(spectrum(&op("A", ginibre(&mut r, 3, 3))).is_err());
}

#[test]
fn tensor_then_trace_returns_scaled_first_factor() {
    let mut r = rng(7);
    for _ in 0..20 {
        let (da, db) = (r.gen_range(1..4), r.gen_range(1..4));
        let a = random_hermitian(&mut r, da);
        let b = random_hermitian(&mut r, db);
        let t = tensor(&op("A", a.clone()), &op("B", b.clone())).unwrap();
        let m = partial_trace(&t, &["B"]).unwrap();
        assert!((m.matrix() - &a * b.trace()).norm() < 1e-12);
        assert!((m.matrix() - trace_second(t.matrix(), da, db)).norm() < 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]
    #[test]
    fn bipartite_maps_match_index_sums(seed in 0u64..100_000, da in 1usize..4, db in 1usize..4) {
        let mut r = rng(seed);
        let lay = layout(&[("A", da), ("B", db)]);
        let m = random_hermitian(&mut r, da * db);
        let x = Operator::new(lay, m.clone()).unwrap();
        prop_assert!((partial_trace(&x, &["B"]).unwrap().matrix() - trace_second(&m, da, db)).norm() < 1e-12);
        prop_assert!((partial_trace(&x, &["A"]).unwrap().matrix() - trace_first(&m, da, db)).norm() < 1e-12);
        prop_assert!((partial_transpose(&x, &["B"]).unwrap().matrix() - transpose_second(&m, da, db)).norm() < 1e-15);
        let s = spectrum(&x).unwrap();
        let e = eig(&m).0;
        prop_assert!((s.trace_norm - e.iter().map(|v| v.abs()).sum::<f64>()).abs() < 1e-10);
        prop_assert!((s.min_eigenvalue - e[0]).abs() < 1e-10);
    }
}
