//! First-order reference solver used only to cross-check the interior-point code.

#![allow(dead_code)]

use extendicap_sdp::{BlockKind, BlockSpec, Constraint, SdpProblem, SparseSym};
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Euclidean projection of `v` onto `{x >= 0, sum x = 1}` by bisection on the shift.
pub fn project_simplex(v: &DVector<f64>) -> DVector<f64> {
    let mut lo = v.min() - 1.0;
    let mut hi = v.max();
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let s: f64 = v.iter().map(|x| (x - mid).max(0.0)).sum();
        if s > 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let t = 0.5 * (lo + hi);
    v.map(|x| (x - t).max(0.0))
}

/// Projection onto unit-trace PSD matrices.
pub fn project_spectraplex(x: &DMatrix<f64>) -> DMatrix<f64> {
    let s = (x + x.transpose()) * 0.5;
    let eig = s.symmetric_eigen();
    let lam = project_simplex(&eig.eigenvalues);
    &eig.eigenvectors * DMatrix::from_diagonal(&lam) * eig.eigenvectors.transpose()
}

/// `min <C, X>` over unit-trace PSD `X` with `<A_i, X> = b_i`, by an augmented
/// Lagrangian whose subproblems run accelerated projected gradient.
pub fn spectraplex_al(c: &DMatrix<f64>, a: &[DMatrix<f64>], b: &[f64]) -> (f64, DMatrix<f64>) {
    let n = c.nrows();
    let rho = 20.0;
    let lip = rho * a.iter().map(|m| m.norm_squared()).sum::<f64>() + 1e-12;
    let step = 1.0 / lip;
    let mut y = vec![0.0; a.len()];
    let mut x = DMatrix::identity(n, n) / n as f64;
    for _ in 0..200 {
        let mut z = x.clone();
        let mut t = 1.0f64;
        for _ in 0..3000 {
            let mut g = c.clone();
            for (i, ai) in a.iter().enumerate() {
                let r = ai.dot(&z) - b[i];
                g -= ai * (y[i] - rho * r);
            }
            let xn = project_spectraplex(&(&z - g * step));
            let tn = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
            z = &xn + (&xn - &x) * ((t - 1.0) / tn);
            x = xn;
            t = tn;
        }
        let mut res = 0.0f64;
        for (i, ai) in a.iter().enumerate() {
            let r = ai.dot(&x) - b[i];
            y[i] -= rho * r;
            res = res.max(r.abs());
        }
        if res < 1e-9 {
            break;
        }
    }
    (c.dot(&x), x)
}

pub fn random_symmetric(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<f64> {
    let m = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
    (&m + m.transpose()) * 0.5
}

pub fn to_sparse(m: &DMatrix<f64>) -> SparseSym {
    let mut s = SparseSym::new();
    for r in 0..m.nrows() {
        for c in r..m.ncols() {
            s.push(r, c, m[(r, c)]);
        }
    }
    s
}

/// A strictly feasible random program on the spectraplex, returned both as
/// standard-form data and as dense matrices for the reference solver.
pub struct RandomSpectraplexSdp {
    pub problem: SdpProblem,
    pub c: DMatrix<f64>,
    pub a: Vec<DMatrix<f64>>,
    pub b: Vec<f64>,
}

pub fn random_spectraplex_sdp(rng: &mut ChaCha8Rng, n: usize, m: usize) -> RandomSpectraplexSdp {
    let c = random_symmetric(rng, n);
    let g = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
    let mut x0 = &g * g.transpose() + DMatrix::identity(n, n) * 0.5;
    x0 /= x0.trace();
    let a: Vec<DMatrix<f64>> = (0..m).map(|_| random_symmetric(rng, n)).collect();
    let b: Vec<f64> = a.iter().map(|ai| ai.dot(&x0)).collect();

    let mut p = SdpProblem::new(vec![BlockSpec { name: "X".into(), kind: BlockKind::Psd, dim: n }]);
    p.cost[0] = to_sparse(&c);
    p.constraints.push(Constraint { coeffs: vec![(0, to_sparse(&DMatrix::identity(n, n)))], rhs: 1.0 });
    for (ai, bi) in a.iter().zip(&b) {
        p.constraints.push(Constraint { coeffs: vec![(0, to_sparse(ai))], rhs: *bi });
    }
    RandomSpectraplexSdp { problem: p, c, a, b }
}
