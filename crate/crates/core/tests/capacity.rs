mod common;

use std::collections::BTreeMap;

use common::projections::bisect_lambda;
use common::*;
use extendicap::capacity::*;
use extendicap::channels::*;
use extendicap::labels::Covariance;
use extendicap::qlinalg::CMat;
use extendicap_sdp::{BlockKind, SolveStatus};

fn query(ch: &Channel, epsilon: f64, k: usize, ppt: bool) -> CapacityQuery {
    CapacityQuery { channel: ch.clone(), epsilon, k, ppt }
}

fn solve(ch: &Channel, epsilon: f64, k: usize, ppt: bool) -> BoundResult {
    let r = capacity_bound(&query(ch, epsilon, k, ppt), &CapacityOptions::default()).unwrap();
    assert_eq!(r.status, SolveStatus::Optimal);
    assert!(r.reliable(), "{:?}", r.residuals);
    r
}

fn family_counts(p: &CapacityProgram) -> BTreeMap<String, usize> {
    let mut m = BTreeMap::new();
    for e in &p.manifest {
        *m.entry(format!("{:?}", e.family)).or_default() += 1;
    }
    m
}

/// Violation of the k = 1 program at `(lambda, Q0, Q1)`, from raw matrices.
fn k1_violation(ch: &Channel, eps: f64, ppt: bool, lambda: f64, q0: &CMat, q1: &CMat, rho: &CMat) -> f64 {
    let (da, db) = (ch.dim_in(), ch.dim_out());
    let mut v: f64 = 0.0;
    v = v.max(-min_eig(q0)).max(-min_eig(q1));
    if ppt {
        v = v.max(-min_eig(&transpose_second(q0, da, db))).max(-min_eig(&transpose_second(q1, da, db)));
    }
    v = v.max(norm_op(&(q0 + q1 - kron(rho, &CMat::identity(db, db)))));
    v = v.max((rho.trace().re - 1.0).abs());
    v = v.max(-min_eig(&(CMat::identity(db, db) * c(lambda, 0.0) - trace_first(q0, da, db))));
    let succ = (q0 * ch.choi().matrix()).trace().re;
    v.max((1.0 - eps) - succ)
}

#[test]
fn single_extension_program_has_exactly_the_basic_constraints() {
    let ch = example_channel();
    for ppt in [true, false] {
        let p = build_capacity_sdp(&query(&ch, 0.1, 1, ppt), &CapacityOptions::default()).unwrap();
        let counts = family_counts(&p);
        let mut want = BTreeMap::new();
        for (f, n) in [
            ("StateTrace", 1),
            ("Completeness", 1),
            ("Positivity", 2),
            ("EigenvalueCap", 1),
            ("TypeOne", 1),
            ("PartialTranspose", if ppt { 2 } else { 0 }),
        ] {
            if n > 0 {
                want.insert(f.to_string(), n);
            }
        }
        assert_eq!(counts, want);
        assert_eq!(p.count(ConstraintFamily::Covariance), 0);
        assert_eq!(p.count(ConstraintFamily::NonSignaling), 0);
        assert!(p
            .manifest
            .iter()
            .filter(|e| e.family == ConstraintFamily::PartialTranspose)
            .all(|e| e.detail == vec![1]));
        // rho plus Q^0, Q^1
        assert_eq!(p.num_matrix_variables, 3);
        let psd_entries = p.manifest.iter().filter(|e| e.kind == ConstraintKind::Psd).count();
        let psd_blocks = p.program.problem.blocks.iter().filter(|b| b.kind == BlockKind::Psd).count();
        assert_eq!(psd_entries, psd_blocks);
    }
}

#[test]
fn two_extension_program_matches_hand_count() {
    let ch = example_channel();
    let p = build_capacity_sdp(&query(&ch, 0.1, 2, true), &CapacityOptions::default()).unwrap();
    let pos: Vec<&ManifestEntry> =
        p.manifest.iter().filter(|e| e.family == ConstraintFamily::Positivity).collect();
    assert_eq!(pos.len(), 4);
    assert!(pos.iter().all(|e| e.dim == 27));
    // 4 labels x 1 non-trivial swap; 4 labels x 2 prefixes; 2 values of y_1
    let counts = family_counts(&p);
    let want: BTreeMap<String, usize> = [
        ("StateTrace", 1),
        ("Completeness", 1),
        ("Positivity", 4),
        ("Covariance", 4),
        ("PartialTranspose", 8),
        ("EigenvalueCap", 1),
        ("NonSignaling", 2),
        ("TypeOne", 1),
    ]
    .into_iter()
    .map(|(f, n)| (f.to_string(), n))
    .collect();
    assert_eq!(counts, want);
    assert_eq!(p.manifest.len(), 22);
}

#[test]
fn replacer_bound_is_minus_log_of_acceptance() {
    for d in [2, 3] {
        let ch = completely_depolarizing(d);
        let g = ch.choi().matrix().map(|v| v.re);
        for eps in [0.25, 0.5, 0.75] {
            let r = solve(&ch, eps, 1, true);
            assert!((r.bound_bits + (1.0 - eps).log2()).abs() < 1e-5, "d {d} eps {eps}: {}", r.bound_bits);
            // Q^0 = (1 - eps) rho (x) I reaches lambda = 1 - eps for any state rho.
            let rho = CMat::identity(d, d) / c(d as f64, 0.0);
            let q0 = kron(&rho, &CMat::identity(d, d)) * c(1.0 - eps, 0.0);
            let q1 = kron(&rho, &CMat::identity(d, d)) * c(eps, 0.0);
            assert!(k1_violation(&ch, eps, true, 1.0 - eps, &q0, &q1, &rho) < 1e-14);
            let oracle = bisect_lambda(d, d, &g, eps, true, 1e-7);
            assert!((oracle - r.lambda_star).abs() < 1e-6, "oracle {oracle} vs {}", r.lambda_star);
        }
    }
}

#[test]
fn single_extension_values_match_projection_oracle() {
    for (name, eps) in [("depolarizing:2:0.3", 0.1), ("depolarizing:2:0.3", 0.5), ("identity:2", 0.1), ("example29", 0.1)] {
        let ch = builtin_channel(name).unwrap();
        let g = ch.choi().matrix().map(|v| v.re);
        for ppt in [true, false] {
            let r = solve(&ch, eps, 1, ppt);
            let oracle = bisect_lambda(ch.dim_in(), ch.dim_out(), &g, eps, ppt, 1e-7);
            assert!((oracle - r.lambda_star).abs() < 1e-6, "{name} {eps} {ppt}: {oracle} vs {}", r.lambda_star);
            let w = &r.witness;
            let v = k1_violation(&ch, eps, ppt, w.lambda, w.q[0].1.matrix(), w.q[1].1.matrix(), w.rho.matrix());
            assert!(v < 1e-6, "{name}: {v}");
        }
    }
}

#[test]
fn identity_qubit_admits_one_bit() {
    let r = solve(&identity_channel(2), 0.01, 1, true);
    assert!(r.bound_bits >= 1.0, "{}", r.bound_bits);
}

#[test]
fn orderings_in_epsilon_ppt_and_k() {
    for name in ["depolarizing:2:0.3", "example29"] {
        let ch = builtin_channel(name).unwrap();
        let mut prev = [f64::NEG_INFINITY; 2];
        for eps in [0.05, 0.1, 0.2] {
            let k1 = solve(&ch, eps, 1, true);
            let k1_plain = solve(&ch, eps, 1, false);
            let k2 = solve(&ch, eps, 2, true);
            let k2_plain = solve(&ch, eps, 2, false);
            assert!(k2.bound_bits <= k1.bound_bits + 1e-6, "{name} {eps}");
            assert!(k2_plain.bound_bits <= k1_plain.bound_bits + 1e-6, "{name} {eps}");
            assert!(k1.bound_bits <= k1_plain.bound_bits + 1e-6, "{name} {eps}");
            assert!(k2.bound_bits <= k2_plain.bound_bits + 1e-6, "{name} {eps}");
            assert!(k1.bound_bits >= prev[0] - 1e-6 && k2.bound_bits >= prev[1] - 1e-6, "{name} {eps}");
            prev = [k1.bound_bits, k2.bound_bits];
            for (r, k, ppt) in [(&k1, 1, true), (&k1_plain, 1, false), (&k2, 2, true), (&k2_plain, 2, false)] {
                assert!(r.lambda_star <= 1.0 + 1e-8 && r.lambda_star > 0.0);
                let again = recheck_capacity_witness(&query(&ch, eps, k, ppt), &r.witness).unwrap();
                assert_eq!(again, r.residuals);
            }
        }
    }
}

#[test]
fn orbit_labels_give_the_same_bound() {
    let ch = builtin_channel("depolarizing:2:0.3").unwrap();
    for eps in [0.1, 0.3] {
        let ex = solve(&ch, eps, 2, true);
        let orb = capacity_bound(
            &query(&ch, eps, 2, true),
            &CapacityOptions { covariance: Covariance::Orbit, ..Default::default() },
        )
        .unwrap();
        assert!((ex.lambda_star - orb.lambda_star).abs() < 1e-7);
        let p = build_capacity_sdp(&query(&ch, eps, 2, true), &CapacityOptions { covariance: Covariance::Orbit, ..Default::default() }).unwrap();
        assert_eq!(p.count(ConstraintFamily::Positivity), 3);
    }
}

#[test]
fn epsilon_range_is_enforced() {
    let ch = identity_channel(2);
    for eps in [-0.1, 1.0, 1.0 - 1e-10, f64::NAN] {
        assert!(build_capacity_sdp(&query(&ch, eps, 1, true), &CapacityOptions::default()).is_err(), "{eps}");
    }
    assert!(build_capacity_sdp(&query(&ch, 0.0, 1, true), &CapacityOptions::default()).is_ok());
    assert!(build_capacity_sdp(&query(&ch, 0.1, 0, true), &CapacityOptions::default()).is_err());
    let tiny = CapacityOptions { dim_cap: 4, ..Default::default() };
    assert!(build_capacity_sdp(&query(&ch, 0.1, 2, true), &tiny).is_err());
}

#[test]
fn curve_rows_are_ordered_and_formatted() {
    let ch = builtin_channel("depolarizing:2:0.3").unwrap();
    let rows = bound_curve(&ch, &[0.1, 0.2], &[(1, true), (2, true)], &CapacityOptions::default());
    let keys: Vec<(f64, usize)> = rows.iter().map(|r| (r.epsilon, r.k)).collect();
    assert_eq!(keys, vec![(0.1, 1), (0.1, 2), (0.2, 1), (0.2, 2)]);
    for pair in rows.chunks(2) {
        let (a, b) = (pair[0].result.as_ref().unwrap(), pair[1].result.as_ref().unwrap());
        assert!(b.bound_bits <= a.bound_bits + 1e-6);
    }
    let one = bound_curve(&ch, &[0.3], &[(1, false)], &CapacityOptions::default());
    assert_eq!(one.len(), 1);
    let fields = one[0].csv_fields(false);
    assert_eq!(fields.len(), CSV_HEADER.split(',').count());
    assert_eq!(fields[0], "0.3");
    assert_eq!(fields[5], "optimal");
    assert_eq!(fields[8], "0");
    let bad = bound_curve(&ch, &[0.1, 1.5], &[(1, true)], &CapacityOptions::default());
    assert!(bad[0].result.is_ok() && bad[1].result.is_err());
}
