//! Infeasible-start primal-dual path following with the HKM search direction
//! and a Mehrotra predictor-corrector step.

use nalgebra::{Cholesky, DMatrix, DVector};

use crate::error::SdpError;
use crate::problem::{BlockKind, SdpProblem, SparseSym};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Relative duality gap target `|p - d| / (1 + |p| + |d|)`.
    pub gap_tol: f64,
    /// Relative primal and dual infeasibility target.
    pub feas_tol: f64,
    pub max_iter: usize,
    /// Fraction-to-boundary factor applied to the maximal step.
    pub step_fraction: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            gap_tol: 1e-8,
            feas_tol: 1e-8,
            max_iter: 200,
            step_fraction: 0.98,
        }
    }
}

/// Outcome classification, stated for the primal problem (P).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Optimal,
    /// (P) is infeasible; the dual iterate is an improving ray.
    Infeasible,
    /// (P) is unbounded, i.e. (D) is infeasible.
    Unbounded,
    /// Iteration limit reached or numerical breakdown; the best iterate is returned.
    MaxIter,
}

impl SolveStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            SolveStatus::Optimal => "optimal",
            SolveStatus::Infeasible => "infeasible",
            SolveStatus::Unbounded => "unbounded",
            SolveStatus::MaxIter => "max_iter",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum BlockValue {
    Dense(DMatrix<f64>),
    Diagonal(DVector<f64>),
}

impl BlockValue {
    pub fn dim(&self) -> usize {
        match self {
            BlockValue::Dense(m) => m.nrows(),
            BlockValue::Diagonal(v) => v.len(),
        }
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        match self {
            BlockValue::Dense(m) => m.clone(),
            BlockValue::Diagonal(v) => DMatrix::from_diagonal(v),
        }
    }

    fn identity(kind: BlockKind, dim: usize, scale: f64) -> Self {
        match kind {
            BlockKind::Psd => BlockValue::Dense(DMatrix::identity(dim, dim) * scale),
            BlockKind::Diagonal => BlockValue::Diagonal(DVector::from_element(dim, scale)),
        }
    }

    fn dot(&self, other: &BlockValue) -> f64 {
        match (self, other) {
            (BlockValue::Dense(a), BlockValue::Dense(b)) => a.dot(b),
            (BlockValue::Diagonal(a), BlockValue::Diagonal(b)) => a.dot(b),
            _ => unreachable!("block kinds always agree"),
        }
    }

    fn norm_sq(&self) -> f64 {
        self.dot(self)
    }

    fn axpy(&mut self, alpha: f64, other: &BlockValue) {
        match (self, other) {
            (BlockValue::Dense(a), BlockValue::Dense(b)) => a.zip_apply(b, |u, v| *u += alpha * v),
            (BlockValue::Diagonal(a), BlockValue::Diagonal(b)) => a.axpy(alpha, b, 1.0),
            _ => unreachable!("block kinds always agree"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SdpSolution {
    pub x: Vec<BlockValue>,
    pub y: DVector<f64>,
    pub z: Vec<BlockValue>,
    pub status: SolveStatus,
    pub primal_objective: f64,
    pub dual_objective: f64,
    pub relative_gap: f64,
    pub primal_infeasibility: f64,
    pub dual_infeasibility: f64,
    pub iterations: usize,
    pub message: Option<String>,
}

impl SdpSolution {
    /// `primal_objective - dual_objective`.
    pub fn gap(&self) -> f64 {
        self.primal_objective - self.dual_objective
    }
}

pub(crate) fn apply_cost(p: &SdpProblem, x: &[BlockValue]) -> f64 {
    p.cost
        .iter()
        .zip(x)
        .map(|(c, xj)| sym_dot(c, xj))
        .sum()
}

pub(crate) fn sym_dot(a: &SparseSym, x: &BlockValue) -> f64 {
    match x {
        BlockValue::Dense(m) => a.dot_dense(m),
        BlockValue::Diagonal(v) => a.dot_diag(v),
    }
}

pub(crate) fn sym_axpy(a: &SparseSym, alpha: f64, out: &mut BlockValue) {
    match out {
        BlockValue::Dense(m) => a.axpy_dense(alpha, m),
        BlockValue::Diagonal(v) => a.axpy_diag(alpha, v),
    }
}

/// `A(X)_i = sum_j <A_ij, X_j>`.
pub(crate) fn apply_a(p: &SdpProblem, x: &[BlockValue]) -> DVector<f64> {
    DVector::from_iterator(
        p.constraints.len(),
        p.constraints
            .iter()
            .map(|c| c.coeffs.iter().map(|(j, a)| sym_dot(a, &x[*j])).sum::<f64>()),
    )
}

/// `A*(y)_j = sum_i y_i A_ij`.
pub(crate) fn apply_at(p: &SdpProblem, y: &DVector<f64>) -> Vec<BlockValue> {
    let mut out: Vec<BlockValue> = p
        .blocks
        .iter()
        .map(|b| BlockValue::identity(b.kind, b.dim, 0.0))
        .collect();
    for (i, c) in p.constraints.iter().enumerate() {
        if y[i] == 0.0 {
            continue;
        }
        for (j, a) in &c.coeffs {
            sym_axpy(a, y[i], &mut out[*j]);
        }
    }
    out
}

pub(crate) fn cost_blocks(p: &SdpProblem) -> Vec<BlockValue> {
    p.blocks
        .iter()
        .zip(&p.cost)
        .map(|(b, c)| {
            let mut v = BlockValue::identity(b.kind, b.dim, 0.0);
            sym_axpy(c, 1.0, &mut v);
            v
        })
        .collect()
}

/// `<A, Y>` for symmetric sparse `A` and an arbitrary (non-symmetric) dense `Y`.
fn dot_nonsym(a: &SparseSym, y: &DMatrix<f64>) -> f64 {
    a.entries
        .iter()
        .map(|&(r, c, v)| if r == c { v * y[(r, c)] } else { v * (y[(r, c)] + y[(c, r)]) })
        .sum()
}

fn apply_a_nonsym(p: &SdpProblem, t: &[BlockValue]) -> DVector<f64> {
    DVector::from_iterator(
        p.constraints.len(),
        p.constraints.iter().map(|c| {
            c.coeffs
                .iter()
                .map(|(j, a)| match &t[*j] {
                    BlockValue::Dense(m) => dot_nonsym(a, m),
                    BlockValue::Diagonal(v) => a.dot_diag(v),
                })
                .sum::<f64>()
        }),
    )
}

fn symmetrize(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for r in 0..n {
        for c in (r + 1)..n {
            let v = 0.5 * (m[(r, c)] + m[(c, r)]);
            m[(r, c)] = v;
            m[(c, r)] = v;
        }
    }
}

fn inverse_spd(m: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let mut inv = Cholesky::new(m.clone())?.inverse();
    symmetrize(&mut inv);
    Some(inv)
}

/// Largest `alpha` with `x + alpha * dx` PSD (infinity when unbounded).
fn max_step(x: &BlockValue, dx: &BlockValue) -> f64 {
    match (x, dx) {
        (BlockValue::Diagonal(x), BlockValue::Diagonal(dx)) => x
            .iter()
            .zip(dx.iter())
            .filter(|(_, d)| **d < 0.0)
            .map(|(v, d)| -v / d)
            .fold(f64::INFINITY, f64::min),
        (BlockValue::Dense(x), BlockValue::Dense(dx)) => {
            let Some(chol) = Cholesky::new(x.clone()) else {
                return 0.0;
            };
            let l = chol.l();
            let Some(t) = l.solve_lower_triangular(dx) else {
                return 0.0;
            };
            let Some(w) = l.solve_lower_triangular(&t.transpose()) else {
                return 0.0;
            };
            let mut w = w;
            symmetrize(&mut w);
            let lmin = w.symmetric_eigenvalues().min();
            if lmin < 0.0 {
                -1.0 / lmin
            } else {
                f64::INFINITY
            }
        }
        _ => unreachable!("block kinds always agree"),
    }
}

/// Per-block lists of the constraints touching that block.
struct BlockIncidence<'a> {
    lists: Vec<Vec<(usize, &'a SparseSym)>>,
}

impl<'a> BlockIncidence<'a> {
    fn new(p: &'a SdpProblem) -> Self {
        let mut lists = vec![Vec::new(); p.blocks.len()];
        for (i, c) in p.constraints.iter().enumerate() {
            for (j, a) in &c.coeffs {
                if !a.is_empty() {
                    lists[*j].push((i, a));
                }
            }
        }
        Self { lists }
    }
}

/// Dense `X A G` for sparse symmetric `A`.
fn sandwich(x: &DMatrix<f64>, a: &SparseSym, g: &DMatrix<f64>) -> DMatrix<f64> {
    let n = x.nrows();
    let full_nnz: usize = a.entries.iter().map(|e| if e.0 == e.1 { 1 } else { 2 }).sum();
    if full_nnz > 2 * n {
        let ad = a.to_dense(n);
        return (x * ad) * g;
    }
    let mut b = DMatrix::zeros(n, n);
    for &(r, c, v) in &a.entries {
        b.ger(v, &x.column(r), &g.column(c), 1.0);
        if r != c {
            b.ger(v, &x.column(c), &g.column(r), 1.0);
        }
    }
    b
}

/// Schur complement `M_ik = sum_j tr(A_ij X_j A_kj G_j)` with `G = Z^{-1}`.
fn schur_complement(
    m: usize,
    inc: &BlockIncidence,
    x: &[BlockValue],
    g: &[BlockValue],
) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(m, m);
    for (j, list) in inc.lists.iter().enumerate() {
        if list.is_empty() {
            continue;
        }
        match (&x[j], &g[j]) {
            (BlockValue::Diagonal(xv), BlockValue::Diagonal(gv)) => {
                let mut by_entry: std::collections::BTreeMap<usize, Vec<(usize, f64)>> =
                    Default::default();
                for &(i, a) in list {
                    for &(r, c, v) in &a.entries {
                        if r == c {
                            by_entry.entry(r).or_default().push((i, v));
                        }
                    }
                }
                for (pidx, row) in by_entry {
                    let w = xv[pidx] * gv[pidx];
                    for &(i, vi) in &row {
                        for &(k, vk) in &row {
                            out[(i, k)] += w * vi * vk;
                        }
                    }
                }
            }
            (BlockValue::Dense(xm), BlockValue::Dense(gm)) => {
                let n = xm.nrows();
                let total_nnz: usize = list.iter().map(|(_, a)| a.nnz()).sum();
                let dense_path = total_nnz * 4 > list.len() * n * n;
                if dense_path {
                    let cols = list.len();
                    let mut avec = DMatrix::<f64>::zeros(n * n, cols);
                    let mut bvec = DMatrix::<f64>::zeros(n * n, cols);
                    for (col, &(_, a)) in list.iter().enumerate() {
                        for &(r, c, v) in &a.entries {
                            avec[(r * n + c, col)] += v;
                            if r != c {
                                avec[(c * n + r, col)] += v;
                            }
                        }
                        let b = sandwich(xm, a, gm);
                        for r in 0..n {
                            for c in 0..n {
                                bvec[(r * n + c, col)] = b[(r, c)];
                            }
                        }
                    }
                    let sub: DMatrix<f64> = avec.transpose() * bvec;
                    for (a_idx, &(i, _)) in list.iter().enumerate() {
                        for (b_idx, &(k, _)) in list.iter().enumerate() {
                            out[(k, i)] += sub[(b_idx, a_idx)];
                        }
                    }
                } else {
                    for &(i, ai) in list {
                        let b = sandwich(xm, ai, gm);
                        for &(k, ak) in list {
                            let val: f64 = ak
                                .entries
                                .iter()
                                .map(|&(r, c, v)| {
                                    if r == c {
                                        v * b[(r, r)]
                                    } else {
                                        v * (b[(r, c)] + b[(c, r)])
                                    }
                                })
                                .sum();
                            out[(k, i)] += val;
                        }
                    }
                }
            }
            _ => unreachable!("block kinds always agree"),
        }
    }
    symmetrize(&mut out);
    out
}

struct Iterate {
    x: Vec<BlockValue>,
    y: DVector<f64>,
    z: Vec<BlockValue>,
}

struct Measures {
    pobj: f64,
    dobj: f64,
    relgap: f64,
    pinf: f64,
    dinf: f64,
    mu: f64,
}

fn measure(
    p: &SdpProblem,
    it: &Iterate,
    b: &DVector<f64>,
    c: &[BlockValue],
    bnorm: f64,
    cnorm: f64,
    total_dim: f64,
) -> (Measures, DVector<f64>, Vec<BlockValue>) {
    let ax = apply_a(p, &it.x);
    let rp = b - ax;
    let aty = apply_at(p, &it.y);
    let rd: Vec<BlockValue> = c
        .iter()
        .zip(&it.z)
        .zip(&aty)
        .map(|((cj, zj), aj)| {
            let mut r = cj.clone();
            r.axpy(-1.0, zj);
            r.axpy(-1.0, aj);
            r
        })
        .collect();
    let pobj: f64 = c.iter().zip(&it.x).map(|(cj, xj)| cj.dot(xj)).sum();
    let dobj = b.dot(&it.y);
    let xz: f64 = it.x.iter().zip(&it.z).map(|(a, b)| a.dot(b)).sum();
    let rd_norm = rd.iter().map(|r| r.norm_sq()).sum::<f64>().sqrt();
    let m = Measures {
        pobj,
        dobj,
        relgap: (pobj - dobj).abs() / (1.0 + pobj.abs() + dobj.abs()),
        pinf: rp.norm() / (1.0 + bnorm),
        dinf: rd_norm / (1.0 + cnorm),
        mu: xz / total_dim,
    };
    (m, rp, rd)
}

/// Solves the standard-form pair described in [`crate::problem`].
pub fn solve(p: &SdpProblem, opts: &SolverOptions) -> Result<SdpSolution, SdpError> {
    p.validate()?;
    let m = p.constraints.len();
    let total_dim = p.total_dim() as f64;
    let b = DVector::from_iterator(m, p.constraints.iter().map(|c| c.rhs));
    let c = cost_blocks(p);
    let bnorm = b.norm();
    let cnorm = c.iter().map(|v| v.norm_sq()).sum::<f64>().sqrt();
    let inc = BlockIncidence::new(p);

    // Starting point scaled to the data, as in common infeasible-start codes.
    let mut it = Iterate {
        x: Vec::with_capacity(p.blocks.len()),
        y: DVector::zeros(m),
        z: Vec::with_capacity(p.blocks.len()),
    };
    for (j, blk) in p.blocks.iter().enumerate() {
        let n = blk.dim as f64;
        let mut xi = 10f64.max(n.sqrt());
        let mut eta = 10f64.max(n.sqrt()).max(p.cost[j].frobenius_norm());
        for &(i, a) in &inc.lists[j] {
            let an = a.frobenius_norm();
            xi = xi.max(n * (1.0 + b[i].abs()) / (1.0 + an));
            eta = eta.max(an);
        }
        it.x.push(BlockValue::identity(blk.kind, blk.dim, xi));
        it.z.push(BlockValue::identity(blk.kind, blk.dim, eta));
    }

    let mut best: Option<(f64, Iterate, Measures)> = None;
    let mut status = SolveStatus::MaxIter;
    let mut message = None;
    let mut iterations = 0;
    let mut stalls = 0;

    for iter in 0..=opts.max_iter {
        iterations = iter;
        let (meas, _rp, rd) = measure(p, &it, &b, &c, bnorm, cnorm, total_dim);
        let merit = meas.relgap.max(meas.pinf).max(meas.dinf);
        if best.as_ref().is_none_or(|(bm, _, _)| merit < *bm) {
            best = Some((
                merit,
                Iterate { x: it.x.clone(), y: it.y.clone(), z: it.z.clone() },
                Measures { ..meas },
            ));
        }
        if meas.relgap <= opts.gap_tol && meas.pinf <= opts.feas_tol && meas.dinf <= opts.feas_tol {
            status = SolveStatus::Optimal;
            best = Some((merit, it, meas));
            break;
        }
        // Infeasibility rays.
        if meas.dobj > 0.0 {
            let rd_norm = rd.iter().map(|r| r.norm_sq()).sum::<f64>().sqrt();
            if (cnorm + rd_norm) / meas.dobj < opts.feas_tol && meas.dobj > 1e6 {
                status = SolveStatus::Infeasible;
                best = Some((merit, it, meas));
                break;
            }
        }
        if meas.pobj < 0.0 {
            let ax = apply_a(p, &it.x);
            if ax.norm() / meas.pobj.abs() < opts.feas_tol && -meas.pobj > 1e6 {
                status = SolveStatus::Unbounded;
                best = Some((merit, it, meas));
                break;
            }
        }
        if iter == opts.max_iter {
            break;
        }

        let mut g = Vec::with_capacity(it.z.len());
        let mut ok = true;
        for zj in &it.z {
            match zj {
                BlockValue::Dense(zm) => match inverse_spd(zm) {
                    Some(inv) => g.push(BlockValue::Dense(inv)),
                    None => {
                        ok = false;
                        break;
                    }
                },
                BlockValue::Diagonal(zv) => {
                    g.push(BlockValue::Diagonal(zv.map(|v| 1.0 / v)));
                }
            }
        }
        if !ok {
            message = Some(format!("dual slack lost definiteness at iteration {iter}"));
            break;
        }

        let schur = schur_complement(m, &inc, &it.x, &g);
        let Some(factor) = factor_schur(&schur) else {
            message = Some(format!("Schur complement factorization failed at iteration {iter}"));
            break;
        };

        // X Rd G, shared by predictor and corrector.
        let x_rd_g: Vec<BlockValue> = it
            .x
            .iter()
            .zip(&rd)
            .zip(&g)
            .map(|((xj, rj), gj)| triple(xj, rj, gj))
            .collect();
        let base_rhs = &b + apply_a_nonsym(p, &x_rd_g);

        // Predictor.
        let dy_a = factor.solve(&base_rhs);
        let (dx_a, dz_a) = directions(p, &it, &rd, &g, &dy_a, 0.0, None);
        let ap = step_all(&it.x, &dx_a);
        let ad = step_all(&it.z, &dz_a);
        let ap_s = (1.0f64).min(ap);
        let ad_s = (1.0f64).min(ad);
        let mut mu_aff = 0.0;
        for j in 0..it.x.len() {
            let mut xa = it.x[j].clone();
            xa.axpy(ap_s, &dx_a[j]);
            let mut za = it.z[j].clone();
            za.axpy(ad_s, &dz_a[j]);
            mu_aff += xa.dot(&za);
        }
        mu_aff /= total_dim;
        let expon = (3.0 * ap_s.min(ad_s).powi(2)).max(1.0);
        let sigma = if meas.mu > 0.0 {
            (mu_aff / meas.mu).max(0.0).powf(expon).min(1.0)
        } else {
            0.0
        };

        // Corrector.
        let sig_mu = sigma * meas.mu;
        let second: Vec<BlockValue> = dx_a
            .iter()
            .zip(&dz_a)
            .zip(&g)
            .map(|((a, bz), gj)| product3(a, bz, gj))
            .collect();
        let g_term = apply_a(p, &g);
        let rhs = &base_rhs - g_term * sig_mu + apply_a_nonsym(p, &second);
        let dy = factor.solve(&rhs);
        let (dx, dz) = directions(p, &it, &rd, &g, &dy, sig_mu, Some(&second));
        let ap = (opts.step_fraction * step_all(&it.x, &dx)).min(1.0);
        let ad = (opts.step_fraction * step_all(&it.z, &dz)).min(1.0);
        if ap < 1e-10 && ad < 1e-10 {
            stalls += 1;
            if stalls >= 3 {
                message = Some(format!("step length stalled at iteration {iter}"));
                break;
            }
        } else {
            stalls = 0;
        }
        for j in 0..it.x.len() {
            it.x[j].axpy(ap, &dx[j]);
            it.z[j].axpy(ad, &dz[j]);
            if let BlockValue::Dense(m) = &mut it.x[j] {
                symmetrize(m);
            }
            if let BlockValue::Dense(m) = &mut it.z[j] {
                symmetrize(m);
            }
        }
        it.y.axpy(ad, &dy, 1.0);
    }

    let (_, fin, meas) = best.expect("at least one iterate is measured");
    Ok(SdpSolution {
        x: fin.x,
        y: fin.y,
        z: fin.z,
        status,
        primal_objective: meas.pobj,
        dual_objective: meas.dobj,
        relative_gap: meas.relgap,
        primal_infeasibility: meas.pinf,
        dual_infeasibility: meas.dinf,
        iterations,
        message,
    })
}

struct SchurFactor {
    chol: Cholesky<f64, nalgebra::Dyn>,
    matrix: DMatrix<f64>,
}

impl SchurFactor {
    fn solve(&self, rhs: &DVector<f64>) -> DVector<f64> {
        let mut x = self.chol.solve(rhs);
        // One step of iterative refinement against the unregularized matrix.
        let r = rhs - &self.matrix * &x;
        x += self.chol.solve(&r);
        x
    }
}

fn factor_schur(m: &DMatrix<f64>) -> Option<SchurFactor> {
    if m.nrows() == 0 {
        return Cholesky::new(m.clone()).map(|chol| SchurFactor { chol, matrix: m.clone() });
    }
    if let Some(chol) = Cholesky::new(m.clone()) {
        return Some(SchurFactor { chol, matrix: m.clone() });
    }
    let scale = m.diagonal().iter().fold(0.0f64, |a, v| a.max(v.abs())).max(1e-300);
    for shift in [1e-14, 1e-12, 1e-10] {
        let mut reg = m.clone();
        for i in 0..reg.nrows() {
            reg[(i, i)] += shift * scale;
        }
        if let Some(chol) = Cholesky::new(reg) {
            return Some(SchurFactor { chol, matrix: m.clone() });
        }
    }
    None
}

fn triple(x: &BlockValue, r: &BlockValue, g: &BlockValue) -> BlockValue {
    match (x, r, g) {
        (BlockValue::Dense(x), BlockValue::Dense(r), BlockValue::Dense(g)) => {
            BlockValue::Dense((x * r) * g)
        }
        (BlockValue::Diagonal(x), BlockValue::Diagonal(r), BlockValue::Diagonal(g)) => {
            BlockValue::Diagonal(x.component_mul(r).component_mul(g))
        }
        _ => unreachable!("block kinds always agree"),
    }
}

fn product3(a: &BlockValue, b: &BlockValue, g: &BlockValue) -> BlockValue {
    triple(a, b, g)
}

/// Given `dy`, recovers `dZ = Rd - A*(dy)` and the HKM primal direction
/// `dX = sigma_mu G - X - sym(X dZ G) - sym(second)`.
fn directions(
    p: &SdpProblem,
    it: &Iterate,
    rd: &[BlockValue],
    g: &[BlockValue],
    dy: &DVector<f64>,
    sig_mu: f64,
    second: Option<&Vec<BlockValue>>,
) -> (Vec<BlockValue>, Vec<BlockValue>) {
    let at = apply_at(p, dy);
    let mut dz = Vec::with_capacity(rd.len());
    let mut dx = Vec::with_capacity(rd.len());
    for j in 0..rd.len() {
        let mut dzj = rd[j].clone();
        dzj.axpy(-1.0, &at[j]);
        let mut dxj = match triple(&it.x[j], &dzj, &g[j]) {
            BlockValue::Dense(mut t) => {
                symmetrize(&mut t);
                BlockValue::Dense(-t)
            }
            BlockValue::Diagonal(t) => BlockValue::Diagonal(-t),
        };
        dxj.axpy(-1.0, &it.x[j]);
        if sig_mu != 0.0 {
            dxj.axpy(sig_mu, &g[j]);
        }
        if let Some(sec) = second {
            let s = match &sec[j] {
                BlockValue::Dense(t) => {
                    let mut t = t.clone();
                    symmetrize(&mut t);
                    BlockValue::Dense(t)
                }
                d => d.clone(),
            };
            dxj.axpy(-1.0, &s);
        }
        dz.push(dzj);
        dx.push(dxj);
    }
    (dx, dz)
}

fn step_all(x: &[BlockValue], dx: &[BlockValue]) -> f64 {
    x.iter()
        .zip(dx)
        .map(|(a, d)| max_step(a, d))
        .fold(f64::INFINITY, f64::min)
}
