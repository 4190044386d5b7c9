#![allow(dead_code)]

pub mod projections;

use extendicap::extendibility::Povm;
use extendicap::qlinalg::{CMat, Operator, SystemLayout, C64};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn ginibre(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> CMat {
    CMat::from_fn(rows, cols, |_, _| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
}

pub fn random_hermitian(rng: &mut ChaCha8Rng, d: usize) -> CMat {
    let g = ginibre(rng, d, d);
    (&g + g.adjoint()) * c(0.5, 0.0)
}

/// `G G^dagger / Tr`, rank `r`.
pub fn random_state(rng: &mut ChaCha8Rng, d: usize, r: usize) -> CMat {
    let g = ginibre(rng, d, r);
    let m = &g * g.adjoint();
    let t = m.trace();
    m / t
}

/// Hermitian eigen-decomposition done here, so that tests do not lean on the
/// library's own spectral helper. Ascending.
pub fn eig(m: &CMat) -> (Vec<f64>, CMat) {
    let e = m.clone().symmetric_eigen();
    let mut order: Vec<usize> = (0..e.eigenvalues.len()).collect();
    order.sort_by(|&i, &j| e.eigenvalues[i].total_cmp(&e.eigenvalues[j]));
    let vecs = CMat::from_fn(m.nrows(), order.len(), |r, k| e.eigenvectors[(r, order[k])]);
    (order.iter().map(|&i| e.eigenvalues[i]).collect(), vecs)
}

pub fn min_eig(m: &CMat) -> f64 {
    eig(&((m + m.adjoint()) * c(0.5, 0.0))).0.into_iter().fold(f64::INFINITY, f64::min)
}

pub fn max_eig(m: &CMat) -> f64 {
    eig(&((m + m.adjoint()) * c(0.5, 0.0))).0.into_iter().fold(f64::NEG_INFINITY, f64::max)
}

pub fn mat_fn(m: &CMat, f: impl Fn(f64) -> f64) -> CMat {
    let (vals, vecs) = eig(m);
    let d = CMat::from_diagonal(&nalgebra::DVector::from_iterator(vals.len(), vals.iter().map(|&v| c(f(v), 0.0))));
    &vecs * d * vecs.adjoint()
}

/// Random POVM with `n` outcomes: `S^{-1/2} G_i G_i^dagger S^{-1/2}`.
pub fn random_povm_elements(rng: &mut ChaCha8Rng, d: usize, n: usize) -> Vec<CMat> {
    let parts: Vec<CMat> = (0..n)
        .map(|_| {
            let g = ginibre(rng, d, d);
            &g * g.adjoint()
        })
        .collect();
    let s = parts.iter().fold(CMat::zeros(d, d), |a, p| a + p);
    let is = mat_fn(&s, |v| 1.0 / v.sqrt());
    parts.iter().map(|p| {
        let e = &is * p * &is;
        (&e + e.adjoint()) * c(0.5, 0.0)
    }).collect()
}

pub fn random_povm(rng: &mut ChaCha8Rng, label: &str, d: usize, n: usize) -> Povm {
    let layout = SystemLayout::single(label, d);
    let outcomes = random_povm_elements(rng, d, n)
        .into_iter()
        .enumerate()
        .map(|(i, e)| (vec![i], Operator::new(layout.clone(), e).unwrap()))
        .collect();
    Povm::new(layout, outcomes).unwrap()
}

pub fn kron(a: &CMat, b: &CMat) -> CMat {
    let (p, q) = (b.nrows(), b.ncols());
    CMat::from_fn(a.nrows() * p, a.ncols() * q, |i, j| a[(i / p, j / q)] * b[(i % p, j % q)])
}

/// `Tr_B` of an operator on `A (x) B` by explicit summation.
pub fn trace_second(m: &CMat, da: usize, db: usize) -> CMat {
    CMat::from_fn(da, da, |i, j| (0..db).map(|b| m[(i * db + b, j * db + b)]).sum())
}

/// `Tr_A` of an operator on `A (x) B` by explicit summation.
pub fn trace_first(m: &CMat, da: usize, db: usize) -> CMat {
    CMat::from_fn(db, db, |i, j| (0..da).map(|a| m[(a * db + i, a * db + j)]).sum())
}

/// Transpose of the `B` factor of an operator on `A (x) B`.
pub fn transpose_second(m: &CMat, da: usize, db: usize) -> CMat {
    CMat::from_fn(da * db, da * db, |r, s| {
        let (a, b) = (r / db, r % db);
        let (a2, b2) = (s / db, s % db);
        m[(a * db + b2, a2 * db + b)]
    })
}

pub fn op(label: &str, m: CMat) -> Operator {
    Operator::new(SystemLayout::single(label, m.nrows()), m).unwrap()
}

pub fn real(m: &DMatrix<f64>) -> CMat {
    m.map(|v| c(v, 0.0))
}

pub fn norm_op(m: &CMat) -> f64 {
    m.singular_values().max()
}
