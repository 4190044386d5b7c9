//! Linear matrix inequalities over real scalar variables with Hermitian data.
//!
//! A program `min c.x + c0` subject to `F_j(x) = F_j0 + sum_v x_v F_jv >= 0`,
//! scalar inequalities and linear equalities is lowered onto the dual side of
//! the standard form. Equalities are removed by substitution, so the remaining
//! free parameters become the dual multipliers `y`. Blocks whose data are all
//! real stay real symmetric; complex Hermitian blocks of size `d` use the
//! embedding `A + iB -> [[A, -B], [B, A]]` of size `2d`.

use std::collections::{BTreeMap, BTreeSet};

use nalgebra::{Complex, DMatrix};

use crate::error::SdpError;
use crate::problem::{BlockKind, BlockSpec, Constraint, SdpProblem, SparseSym};
use crate::solver::{solve, BlockValue, SdpSolution, SolveStatus, SolverOptions};

pub type C64 = Complex<f64>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VarId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LmiId(pub usize);

/// Upper-triangular Hermitian data keyed by `(row, col)` with `row <= col`.
type HermEntries = BTreeMap<(usize, usize), C64>;

#[derive(Debug, Clone)]
struct LmiBlock {
    name: String,
    dim: usize,
    constant: HermEntries,
    terms: BTreeMap<usize, HermEntries>,
}

#[derive(Debug, Clone)]
struct ScalarIneq {
    constant: f64,
    terms: Vec<(usize, f64)>,
}

#[derive(Debug, Clone, Default)]
pub struct LmiBuilder {
    var_names: Vec<String>,
    objective: BTreeMap<usize, f64>,
    objective_constant: f64,
    blocks: Vec<LmiBlock>,
    scalars: Vec<ScalarIneq>,
    equalities: Vec<(Vec<(usize, f64)>, f64)>,
}

fn add_entry(map: &mut HermEntries, row: usize, col: usize, v: C64) {
    let (r, c, v) = if row <= col { (row, col, v) } else { (col, row, v.conj()) };
    let slot = map.entry((r, c)).or_insert(C64::new(0.0, 0.0));
    *slot += if r == c { C64::new(v.re, 0.0) } else { v };
}

impl LmiBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_var(&mut self, name: impl Into<String>) -> VarId {
        self.var_names.push(name.into());
        VarId(self.var_names.len() - 1)
    }

    pub fn num_vars(&self) -> usize {
        self.var_names.len()
    }

    pub fn var_name(&self, v: VarId) -> &str {
        &self.var_names[v.0]
    }

    /// Adds `coef * x_v` to the minimized objective.
    pub fn objective(&mut self, v: VarId, coef: f64) {
        *self.objective.entry(v.0).or_insert(0.0) += coef;
    }

    pub fn objective_constant(&mut self, c: f64) {
        self.objective_constant += c;
    }

    pub fn add_lmi(&mut self, name: impl Into<String>, dim: usize) -> LmiId {
        self.blocks.push(LmiBlock {
            name: name.into(),
            dim,
            constant: BTreeMap::new(),
            terms: BTreeMap::new(),
        });
        LmiId(self.blocks.len() - 1)
    }

    pub fn lmi_name(&self, id: LmiId) -> &str {
        &self.blocks[id.0].name
    }

    pub fn lmi_dim(&self, id: LmiId) -> usize {
        self.blocks[id.0].dim
    }

    pub fn num_lmis(&self) -> usize {
        self.blocks.len()
    }

    /// Adds `v` at `(row, col)` of the constant term and `conj(v)` at the
    /// mirrored position. Diagonal entries keep only the real part.
    pub fn lmi_constant(&mut self, id: LmiId, row: usize, col: usize, v: C64) {
        add_entry(&mut self.blocks[id.0].constant, row, col, v);
    }

    /// Adds `v` at `(row, col)` (and its Hermitian mirror) of the coefficient of `x_var`.
    pub fn lmi_coef(&mut self, id: LmiId, var: VarId, row: usize, col: usize, v: C64) {
        let map = self.blocks[id.0].terms.entry(var.0).or_default();
        add_entry(map, row, col, v);
    }

    /// `constant + sum a_v x_v >= 0`.
    pub fn add_scalar_ge(&mut self, terms: &[(VarId, f64)], constant: f64) {
        self.scalars.push(ScalarIneq {
            constant,
            terms: terms.iter().map(|(v, a)| (v.0, *a)).collect(),
        });
    }

    /// `sum a_v x_v = rhs`.
    pub fn add_equality(&mut self, terms: &[(VarId, f64)], rhs: f64) {
        self.equalities
            .push((terms.iter().map(|(v, a)| (v.0, *a)).collect(), rhs));
    }

    pub fn num_equalities(&self) -> usize {
        self.equalities.len()
    }

    /// Evaluates `F_j(x)` as a dense Hermitian matrix.
    pub fn evaluate_lmi(&self, id: LmiId, x: &[f64]) -> DMatrix<C64> {
        let blk = &self.blocks[id.0];
        let mut m = DMatrix::from_element(blk.dim, blk.dim, C64::new(0.0, 0.0));
        let mut put = |map: &HermEntries, s: f64| {
            for (&(r, c), &v) in map {
                m[(r, c)] += v * s;
                if r != c {
                    m[(c, r)] += v.conj() * s;
                }
            }
        };
        put(&blk.constant, 1.0);
        for (&var, map) in &blk.terms {
            if x[var] != 0.0 {
                put(map, x[var]);
            }
        }
        m
    }

    /// Independent feasibility check of a point: smallest eigenvalue over all
    /// LMIs and scalar inequalities, and the largest equality violation.
    pub fn check_point(&self, x: &[f64]) -> PointCheck {
        let mut min_eig = f64::INFINITY;
        let mut worst = None;
        for j in 0..self.blocks.len() {
            let m = self.evaluate_lmi(LmiId(j), x);
            let e = hermitian_min_eig(&m);
            if e < min_eig {
                min_eig = e;
                worst = Some(self.blocks[j].name.clone());
            }
        }
        for s in &self.scalars {
            let v = s.constant + s.terms.iter().map(|(i, a)| a * x[*i]).sum::<f64>();
            if v < min_eig {
                min_eig = v;
                worst = Some("scalar".to_string());
            }
        }
        let eq = self
            .equalities
            .iter()
            .map(|(t, rhs)| (t.iter().map(|(i, a)| a * x[*i]).sum::<f64>() - rhs).abs())
            .fold(0.0, f64::max);
        let objective = self.objective_constant
            + self.objective.iter().map(|(i, c)| c * x[*i]).sum::<f64>();
        PointCheck { min_eig, worst_constraint: worst, equality_residual: eq, objective }
    }

    pub fn build(&self) -> Result<LmiProgram, SdpError> {
        let n = self.var_names.len();
        let sub = eliminate(n, &self.equalities)?;

        let complex_block: Vec<bool> = self
            .blocks
            .iter()
            .map(|b| {
                b.constant.values().any(|v| v.im != 0.0)
                    || b.terms.values().any(|m| m.values().any(|v| v.im != 0.0))
            })
            .collect();

        let mut specs = Vec::new();
        for (b, &cx) in self.blocks.iter().zip(&complex_block) {
            specs.push(BlockSpec {
                name: b.name.clone(),
                kind: BlockKind::Psd,
                dim: if cx { 2 * b.dim } else { b.dim },
            });
        }
        let scalar_block = if self.scalars.is_empty() {
            None
        } else {
            specs.push(BlockSpec {
                name: "scalar".into(),
                kind: BlockKind::Diagonal,
                dim: self.scalars.len(),
            });
            Some(specs.len() - 1)
        };
        let mut problem = SdpProblem::new(specs);

        // Cost matrices are F_j(x_base).
        for (j, b) in self.blocks.iter().enumerate() {
            let mut acc = b.constant.clone();
            for (&var, map) in &b.terms {
                let s = sub.base[var];
                if s != 0.0 {
                    for (&k, &v) in map {
                        *acc.entry(k).or_insert(C64::new(0.0, 0.0)) += v * s;
                    }
                }
            }
            problem.cost[j] = embed(&acc, b.dim, complex_block[j]);
        }
        if let Some(sb) = scalar_block {
            for (k, s) in self.scalars.iter().enumerate() {
                let v = s.constant + s.terms.iter().map(|(i, a)| a * sub.base[*i]).sum::<f64>();
                problem.cost[sb].push(k, k, v);
            }
        }

        // var -> scalar rows it appears in.
        let mut scalar_rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        for (k, s) in self.scalars.iter().enumerate() {
            for &(i, a) in &s.terms {
                scalar_rows[i].push((k, a));
            }
        }

        let mut kept = Vec::new();
        for (w, col) in sub.columns.iter().enumerate() {
            let mut coeffs = Vec::new();
            for (j, b) in self.blocks.iter().enumerate() {
                let mut acc: HermEntries = BTreeMap::new();
                for &(var, kv) in col {
                    if let Some(map) = b.terms.get(&var) {
                        for (&key, &v) in map {
                            *acc.entry(key).or_insert(C64::new(0.0, 0.0)) += v * kv;
                        }
                    }
                }
                let mut a = embed(&acc, b.dim, complex_block[j]);
                if !a.is_empty() {
                    // A_i = -F(K e_i)
                    for e in a.entries.iter_mut() {
                        e.2 = -e.2;
                    }
                    coeffs.push((j, a));
                }
            }
            if let Some(sb) = scalar_block {
                let mut diag: BTreeMap<usize, f64> = BTreeMap::new();
                for &(var, kv) in col {
                    for &(k, a) in &scalar_rows[var] {
                        *diag.entry(k).or_insert(0.0) += a * kv;
                    }
                }
                let mut a = SparseSym::new();
                for (k, v) in diag {
                    a.push(k, k, -v);
                }
                if !a.is_empty() {
                    coeffs.push((sb, a));
                }
            }
            let cdot: f64 = col
                .iter()
                .map(|(var, kv)| self.objective.get(var).copied().unwrap_or(0.0) * kv)
                .sum();
            if coeffs.is_empty() {
                if cdot.abs() > 1e-12 {
                    let names: Vec<&str> =
                        col.iter().map(|(v, _)| self.var_names[*v].as_str()).collect();
                    return Err(SdpError::UnusedVariable(names.join(",")));
                }
                continue;
            }
            problem.constraints.push(Constraint { coeffs, rhs: -cdot });
            kept.push(w);
        }

        let base_objective = self.objective_constant
            + self.objective.iter().map(|(i, c)| c * sub.base[*i]).sum::<f64>();
        Ok(LmiProgram {
            problem,
            base: sub.base,
            columns: kept.iter().map(|&w| sub.columns[w].clone()).collect(),
            complex_block,
            block_dims: self.blocks.iter().map(|b| b.dim).collect(),
            base_objective,
            num_vars: n,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PointCheck {
    pub min_eig: f64,
    pub worst_constraint: Option<String>,
    pub equality_residual: f64,
    pub objective: f64,
}

/// Smallest eigenvalue of a Hermitian matrix, via its real embedding.
pub fn hermitian_min_eig(m: &DMatrix<C64>) -> f64 {
    let n = m.nrows();
    if n == 0 {
        return f64::INFINITY;
    }
    if m.iter().all(|v| v.im == 0.0) {
        let r = DMatrix::from_fn(n, n, |i, j| 0.5 * (m[(i, j)].re + m[(j, i)].re));
        return r.symmetric_eigenvalues().min();
    }
    let mut e = DMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        for j in 0..n {
            let h = 0.5 * (m[(i, j)] + m[(j, i)].conj());
            e[(i, j)] = h.re;
            e[(i + n, j + n)] = h.re;
            e[(i + n, j)] = h.im;
            e[(i, j + n)] = -h.im;
        }
    }
    e.symmetric_eigenvalues().min()
}

fn embed(map: &HermEntries, dim: usize, complex: bool) -> SparseSym {
    let mut s = SparseSym::new();
    for (&(r, c), &v) in map {
        if complex {
            s.push(r, c, v.re);
            s.push(r + dim, c + dim, v.re);
            if r != c {
                s.push(r, c + dim, -v.im);
                s.push(c, r + dim, v.im);
            }
        } else {
            s.push(r, c, v.re);
        }
    }
    s.compress();
    s
}

/// Inverse of the real embedding: `(X11 + X22)/2 + i (X21 - X12)/2`.
pub fn lift_embedded(x: &DMatrix<f64>) -> DMatrix<C64> {
    let d = x.nrows() / 2;
    DMatrix::from_fn(d, d, |r, c| {
        C64::new(
            0.5 * (x[(r, c)] + x[(r + d, c + d)]),
            0.5 * (x[(r + d, c)] - x[(r, c + d)]),
        )
    })
}

/// Affine parameterization `x = base + sum_w w * column_w` of the equality set.
struct Substitution {
    base: Vec<f64>,
    columns: Vec<Vec<(usize, f64)>>,
}

fn eliminate(n: usize, eqs: &[(Vec<(usize, f64)>, f64)]) -> Result<Substitution, SdpError> {
    // Sparse Gauss-Jordan: every pivot variable is kept expressed through
    // free variables only, `x_p = rhs_p - sum_w c_pw x_w`.
    let mut pivots: BTreeMap<usize, (BTreeMap<usize, f64>, f64)> = BTreeMap::new();
    // free variable -> pivots whose expression mentions it
    let mut occ: BTreeMap<usize, BTreeSet<usize>> = BTreeMap::new();
    let rhs_scale = eqs.iter().fold(0.0f64, |m, (_, r)| m.max(r.abs()));

    for (terms, rhs) in eqs {
        let mut row: BTreeMap<usize, f64> = BTreeMap::new();
        for &(v, c) in terms {
            *row.entry(v).or_insert(0.0) += c;
        }
        let scale = row.values().fold(0.0f64, |m, v| m.max(v.abs()));
        let mut r = *rhs;
        let hit: Vec<(usize, f64)> = row
            .iter()
            .filter(|(v, _)| pivots.contains_key(v))
            .map(|(&v, &c)| (v, c))
            .collect();
        for (v, a) in hit {
            row.remove(&v);
            let (expr, prhs) = &pivots[&v];
            r -= a * prhs;
            for (&w, &c) in expr {
                *row.entry(w).or_insert(0.0) -= a * c;
            }
        }
        row.retain(|_, c| c.abs() > 1e-12 * scale);
        if row.is_empty() {
            if r.abs() > 1e-8 * (1.0 + rhs_scale) {
                return Err(SdpError::InconsistentEqualities { residual: r.abs() });
            }
            continue;
        }
        let mut best: Option<(usize, f64)> = None;
        for (&v, &c) in &row {
            let better = match best {
                None => true,
                Some((bv, bc)) => {
                    c.abs() > bc.abs() * (1.0 + 1e-9)
                        || (c.abs() >= bc.abs() * (1.0 - 1e-9)
                            && occ.get(&v).map_or(0, |s| s.len()) < occ.get(&bv).map_or(0, |s| s.len()))
                }
            };
            if better {
                best = Some((v, c));
            }
        }
        let (p, ap) = best.expect("row is nonempty");
        row.remove(&p);
        let expr: BTreeMap<usize, f64> = row.into_iter().map(|(w, c)| (w, c / ap)).collect();
        let prhs = r / ap;

        if let Some(users) = occ.remove(&p) {
            for q in users {
                let (qexpr, qrhs) = pivots.get_mut(&q).expect("occurrence index is consistent");
                let cqp = qexpr.remove(&p).unwrap_or(0.0);
                *qrhs -= cqp * prhs;
                for (&w, &e) in &expr {
                    let slot = qexpr.entry(w).or_insert(0.0);
                    *slot -= cqp * e;
                    occ.entry(w).or_default().insert(q);
                }
                let dropped: Vec<usize> =
                    qexpr.iter().filter(|(_, c)| c.abs() <= 1e-14).map(|(&w, _)| w).collect();
                for w in dropped {
                    qexpr.remove(&w);
                    if let Some(s) = occ.get_mut(&w) {
                        s.remove(&q);
                    }
                }
            }
        }
        for &w in expr.keys() {
            occ.entry(w).or_default().insert(p);
        }
        pivots.insert(p, (expr, prhs));
    }

    let mut base = vec![0.0; n];
    for (&p, (_, prhs)) in &pivots {
        base[p] = *prhs;
    }
    let residual = eqs
        .iter()
        .map(|(t, rhs)| (t.iter().map(|(v, c)| c * base[*v]).sum::<f64>() - rhs).abs())
        .fold(0.0, f64::max);
    if residual > 1e-8 * (1.0 + rhs_scale) {
        return Err(SdpError::InconsistentEqualities { residual });
    }

    let mut columns = Vec::new();
    for v in 0..n {
        if pivots.contains_key(&v) {
            continue;
        }
        let mut col = vec![(v, 1.0)];
        if let Some(users) = occ.get(&v) {
            for &q in users {
                if let Some(&c) = pivots[&q].0.get(&v) {
                    col.push((q, -c));
                }
            }
        }
        columns.push(col);
    }
    Ok(Substitution { base, columns })
}

/// A lowered program ready for the interior-point solver.
#[derive(Debug, Clone)]
pub struct LmiProgram {
    pub problem: SdpProblem,
    base: Vec<f64>,
    columns: Vec<Vec<(usize, f64)>>,
    complex_block: Vec<bool>,
    block_dims: Vec<usize>,
    base_objective: f64,
    num_vars: usize,
}

#[derive(Debug, Clone)]
pub struct LmiSolution {
    pub status: SolveStatus,
    /// Values of the original variables.
    pub x: Vec<f64>,
    /// `c.x + c0` at the returned point.
    pub objective: f64,
    /// Objective value implied by the standard-form primal iterate; a lower
    /// bound on the optimum whenever that iterate is feasible.
    pub dual_bound: f64,
    pub sdp: SdpSolution,
}

impl LmiProgram {
    pub fn num_free_parameters(&self) -> usize {
        self.columns.len()
    }

    pub fn solve(&self, opts: &SolverOptions) -> Result<LmiSolution, SdpError> {
        let sdp = solve(&self.problem, opts)?;
        let mut x = self.base.clone();
        for (w, col) in self.columns.iter().enumerate() {
            for &(v, k) in col {
                x[v] += sdp.y[w] * k;
            }
        }
        debug_assert_eq!(x.len(), self.num_vars);
        Ok(LmiSolution {
            status: sdp.status,
            objective: self.base_objective - sdp.dual_objective,
            dual_bound: self.base_objective - sdp.primal_objective,
            x,
            sdp,
        })
    }

    /// The standard-form primal block attached to LMI `id`, lifted back to a
    /// Hermitian matrix when the block was embedded.
    pub fn multiplier(&self, sol: &LmiSolution, id: LmiId) -> DMatrix<C64> {
        let BlockValue::Dense(m) = &sol.sdp.x[id.0] else {
            unreachable!("LMI blocks are dense")
        };
        if self.complex_block[id.0] {
            lift_embedded(m)
        } else {
            let d = self.block_dims[id.0];
            DMatrix::from_fn(d, d, |r, c| C64::new(m[(r, c)], 0.0))
        }
    }

    pub fn is_complex(&self, id: LmiId) -> bool {
        self.complex_block[id.0]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn embedding_of_hermitian_has_doubled_spectrum() {
        let mut map = HermEntries::new();
        map.insert((0, 0), c(1.0, 0.0));
        map.insert((0, 1), c(0.0, 1.0));
        map.insert((1, 1), c(1.0, 0.0));
        let e = embed(&map, 2, true).to_dense(4);
        let mut ev: Vec<f64> = e.symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        let expect = [0.0, 0.0, 2.0, 2.0];
        for (a, b) in ev.iter().zip(expect) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn elimination_parameterizes_solution_set() {
        // x0 + x1 = 1, x1 - x2 = 0 (x3 untouched)
        let eqs = vec![(vec![(0, 1.0), (1, 1.0)], 1.0), (vec![(1, 1.0), (2, -1.0)], 0.0)];
        let s = eliminate(4, &eqs).unwrap();
        assert_eq!(s.columns.len(), 2);
        for col in &s.columns {
            let mut d = [0.0; 4];
            for &(v, k) in col {
                d[v] += k;
            }
            assert!((d[0] + d[1]).abs() < 1e-14);
            assert!((d[1] - d[2]).abs() < 1e-14);
        }
        assert!((s.base[0] + s.base[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn inconsistent_equalities_are_reported() {
        let eqs = vec![(vec![(0, 1.0)], 1.0), (vec![(0, 2.0)], 3.0)];
        assert!(matches!(eliminate(1, &eqs), Err(SdpError::InconsistentEqualities { .. })));
    }
}
