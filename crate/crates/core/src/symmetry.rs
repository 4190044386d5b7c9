//! Operators on `X^{(x) n}` that commute with every permutation of the
//! copies: the orbit basis of matrix units, maps between coefficient vectors,
//! a numerical block decomposition of the invariant algebra, and the reduced
//! n-shot capacity program built on top of them.
//!
//! Basis elements are orbit indicators `C^r = sum_{(i,j) in orbit r} |i><j|`,
//! so the coefficient of an invariant operator on `C^r` is simply its entry
//! at any pair of the orbit, and `Tr[C^r^dagger C^r]` is the orbit size.

use std::collections::BTreeMap;
use std::time::Instant;

use extendicap_sdp::{LmiBuilder, SolveStatus, SolverOptions, VarId};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::affine::{HermExpr, LinExpr};
use crate::channels::{Channel, DEFAULT_DIM_CAP};
use crate::error::{Error, Result};
use crate::labels::tuples;
use crate::qlinalg::{permutation_unitary, permutations, CMat, Operator, SystemLayout, C64, ZERO};

#[derive(Debug, Clone, PartialEq)]
pub struct OrbitBasis {
    n: usize,
    local_dim: usize,
    reps: Vec<(usize, usize)>,
    orbit_size: Vec<usize>,
    index: Vec<u32>,
    adjoint: Vec<usize>,
}

fn digits(mut i: usize, d: usize, n: usize) -> Vec<usize> {
    let mut out = vec![0; n];
    for slot in out.iter_mut().rev() {
        *slot = i % d;
        i /= d;
    }
    out
}

fn join(dg: &[usize], d: usize) -> usize {
    dg.iter().fold(0, |acc, v| acc * d + v)
}

/// Orbits of basis pairs `(i, j)` of `(C^d)^{(x) n}` under simultaneous
/// permutation of the copies. The representative of an orbit is its
/// lexicographically smallest pair.
pub fn orbit_basis(n: usize, d: usize, dim_cap: usize) -> Result<OrbitBasis> {
    if n == 0 || d == 0 {
        return Err(Error::InvalidArgument("orbit basis needs n >= 1 and d >= 1".into()));
    }
    if n > 4 {
        return Err(Error::InvalidArgument(format!("n = {n} exceeds the supported range n <= 4")));
    }
    let total = d.checked_pow(n as u32).unwrap_or(usize::MAX);
    if total > dim_cap {
        return Err(Error::DimensionCap { dim: total, cap: dim_cap });
    }
    let perms = permutations(n);
    let unset = u32::MAX;
    let mut index = vec![unset; total * total];
    let mut reps = Vec::new();
    let mut orbit_size = Vec::new();
    for i in 0..total {
        let di = digits(i, d, n);
        for j in 0..total {
            if index[i * total + j] != unset {
                continue;
            }
            // Scanning in increasing (i, j) order meets each orbit first at its minimum.
            let r = reps.len() as u32;
            let dj = digits(j, d, n);
            let mut size = 0;
            for pi in &perms {
                let mut pi_i = vec![0; n];
                let mut pi_j = vec![0; n];
                for s in 0..n {
                    pi_i[pi[s]] = di[s];
                    pi_j[pi[s]] = dj[s];
                }
                let k = join(&pi_i, d) * total + join(&pi_j, d);
                if index[k] == unset {
                    index[k] = r;
                    size += 1;
                }
            }
            reps.push((i, j));
            orbit_size.push(size);
        }
    }
    let adjoint = reps.iter().map(|&(i, j)| index[j * total + i] as usize).collect();
    Ok(OrbitBasis { n, local_dim: d, reps, orbit_size, index, adjoint })
}

impl OrbitBasis {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn local_dim(&self) -> usize {
        self.local_dim
    }

    /// Dimension `d^n` of the space the basis acts on.
    pub fn space_dim(&self) -> usize {
        self.local_dim.pow(self.n as u32)
    }

    /// Number of basis elements `m`.
    pub fn len(&self) -> usize {
        self.reps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.reps.is_empty()
    }

    pub fn representatives(&self) -> &[(usize, usize)] {
        &self.reps
    }

    pub fn orbit_size(&self, r: usize) -> usize {
        self.orbit_size[r]
    }

    /// `Tr[C^r^dagger C^r]`.
    pub fn frobenius_norm_sq(&self, r: usize) -> f64 {
        self.orbit_size[r] as f64
    }

    /// Orbit containing the pair `(i, j)`.
    pub fn index(&self, i: usize, j: usize) -> usize {
        self.index[i * self.space_dim() + j] as usize
    }

    /// Orbit of the transposed pairs, so that `C^{r dagger} = (C^r)^dagger`.
    pub fn adjoint(&self, r: usize) -> usize {
        self.adjoint[r]
    }

    pub fn is_diagonal(&self, r: usize) -> bool {
        self.reps[r].0 == self.reps[r].1
    }

    /// Every pair of orbit `r`.
    pub fn orbit_pairs(&self, r: usize) -> Vec<(usize, usize)> {
        let dim = self.space_dim();
        let (i, j) = self.reps[r];
        let (di, dj) = (digits(i, self.local_dim, self.n), digits(j, self.local_dim, self.n));
        let mut out: Vec<(usize, usize)> = permutations(self.n)
            .iter()
            .map(|pi| {
                let mut a = vec![0; self.n];
                let mut b = vec![0; self.n];
                for s in 0..self.n {
                    a[pi[s]] = di[s];
                    b[pi[s]] = dj[s];
                }
                (join(&a, self.local_dim), join(&b, self.local_dim))
            })
            .collect();
        out.sort_unstable();
        out.dedup();
        debug_assert!(out.iter().all(|&(a, b)| a < dim && b < dim));
        out
    }

    pub fn element(&self, r: usize) -> CMat {
        let dim = self.space_dim();
        let mut m = CMat::zeros(dim, dim);
        for (i, j) in self.orbit_pairs(r) {
            m[(i, j)] = C64::new(1.0, 0.0);
        }
        m
    }

    /// `sum_r coeffs[r] C^r`.
    pub fn reconstruct(&self, coeffs: &[C64]) -> CMat {
        let dim = self.space_dim();
        CMat::from_fn(dim, dim, |i, j| coeffs[self.index(i, j)])
    }

    fn layout(&self) -> SystemLayout {
        SystemLayout::new((0..self.n).map(|c| (format!("X{c}"), self.local_dim))).expect("distinct labels")
    }

    /// Largest commutator norm `||[W^pi, G]||_F` over `pi in S_n`.
    pub fn invariance_residual(&self, g: &CMat) -> Result<f64> {
        let layout = self.layout();
        let labels: Vec<String> = (0..self.n).map(|c| format!("X{c}")).collect();
        let lr: Vec<&str> = labels.iter().map(|s| s.as_str()).collect();
        let mut worst: f64 = 0.0;
        for pi in permutations(self.n).iter().skip(1) {
            let w = permutation_unitary(&layout, &lr, pi)?;
            worst = worst.max((w.matrix() * g - g * w.matrix()).norm());
        }
        Ok(worst)
    }
}

/// Coefficients `alpha_r = Tr[C^r^dagger G] / Tr[C^r^dagger C^r]` of a
/// permutation-invariant operator.
pub fn expand(g: &CMat, basis: &OrbitBasis) -> Result<Vec<C64>> {
    let dim = basis.space_dim();
    if g.nrows() != dim || g.ncols() != dim {
        return Err(Error::Dimension(format!("operator is {}x{}, basis acts on {dim}", g.nrows(), g.ncols())));
    }
    let resid = basis.invariance_residual(g)?;
    if resid > 1e-9 * g.norm().max(1.0) {
        return Err(Error::Validation { what: "operator is not permutation invariant".into(), residual: resid });
    }
    let mut acc = vec![ZERO; basis.len()];
    for i in 0..dim {
        for j in 0..dim {
            acc[basis.index(i, j)] += g[(i, j)];
        }
    }
    Ok(acc.iter().enumerate().map(|(r, v)| v / basis.frobenius_norm_sq(r)).collect())
}

/// `(1/n!) sum_pi W^pi G W^pi^dagger` over permutations of the listed subsystems.
pub fn twirl(g: &Operator, block_labels: &[&str]) -> Result<Operator> {
    let perms = permutations(block_labels.len());
    let mut acc = CMat::zeros(g.dim(), g.dim());
    for pi in &perms {
        acc += crate::qlinalg::conjugate_by_permutation(g, block_labels, pi)?.matrix();
    }
    Operator::new(g.layout().clone(), acc * C64::new(1.0 / perms.len() as f64, 0.0))
}

/// Image of each orbit under a partial trace of local tensor factors:
/// `Tr_traced[C^r] = omega_r C^{t_r}`, or zero.
#[derive(Debug, Clone, PartialEq)]
pub struct MarginalMap {
    pub target: OrbitBasis,
    /// `(t, omega)` per source orbit; `None` when the traced indices of the
    /// orbit differ, so the partial trace vanishes.
    pub images: Vec<Option<(usize, f64)>>,
}

/// Splits a local index into factor digits, keeps some of them, and reports
/// whether the discarded digits agree between row and column.
struct LocalSplit {
    dims: Vec<usize>,
    keep: Vec<usize>,
    traced: Vec<usize>,
}

impl LocalSplit {
    fn new(local_dims: &[usize], traced: &[usize]) -> Result<Self> {
        if traced.iter().any(|&t| t >= local_dims.len()) {
            return Err(Error::InvalidArgument("traced factor out of range".into()));
        }
        let keep = (0..local_dims.len()).filter(|p| !traced.contains(p)).collect();
        Ok(Self { dims: local_dims.to_vec(), keep, traced: traced.to_vec() })
    }

    fn split(&self, x: usize) -> Vec<usize> {
        let mut out = vec![0; self.dims.len()];
        let mut x = x;
        for (slot, &d) in out.iter_mut().zip(&self.dims).rev() {
            *slot = x % d;
            x /= d;
        }
        out
    }

    fn kept_dim(&self) -> usize {
        self.keep.iter().map(|&p| self.dims[p]).product()
    }

    fn kept(&self, dg: &[usize]) -> usize {
        self.keep.iter().fold(0, |acc, &p| acc * self.dims[p] + dg[p])
    }
}

/// Partial trace over local factors `traced` of each copy, where the local
/// system factorizes as `local_dims`.
pub fn marginal_map(big: &OrbitBasis, local_dims: &[usize], traced: &[usize]) -> Result<MarginalMap> {
    if local_dims.iter().product::<usize>() != big.local_dim {
        return Err(Error::Layout("local factor dimensions do not multiply to the local dimension".into()));
    }
    let split = LocalSplit::new(local_dims, traced)?;
    let kd = split.kept_dim();
    let target = orbit_basis(big.n, kd, usize::MAX)?;
    let images = (0..big.len())
        .map(|r| {
            let (i, j) = big.reps[r];
            let (di, dj) = (digits(i, big.local_dim, big.n), digits(j, big.local_dim, big.n));
            let mut ki = Vec::with_capacity(big.n);
            let mut kj = Vec::with_capacity(big.n);
            for c in 0..big.n {
                let (a, b) = (split.split(di[c]), split.split(dj[c]));
                if split.traced.iter().any(|&p| a[p] != b[p]) {
                    return None;
                }
                ki.push(split.kept(&a));
                kj.push(split.kept(&b));
            }
            let t = target.index(join(&ki, kd), join(&kj, kd));
            Some((t, big.orbit_size[r] as f64 / target.orbit_size[t] as f64))
        })
        .collect();
    Ok(MarginalMap { target, images })
}

/// Orbit-to-orbit map induced by a bijection acting on the local digits of
/// row and column in every copy (partial transposes, permutations of local
/// factors). `f(row_digits, col_digits)` edits the factor digits in place.
pub fn local_orbit_map(
    basis: &OrbitBasis,
    local_dims: &[usize],
    f: impl Fn(&mut Vec<usize>, &mut Vec<usize>),
) -> Result<Vec<usize>> {
    if local_dims.iter().product::<usize>() != basis.local_dim {
        return Err(Error::Layout("local factor dimensions do not multiply to the local dimension".into()));
    }
    let split = LocalSplit::new(local_dims, &[])?;
    let join_local = |dg: &[usize]| dg.iter().zip(local_dims).fold(0, |acc, (v, d)| acc * d + v);
    Ok((0..basis.len())
        .map(|r| {
            let (i, j) = basis.reps[r];
            let (di, dj) = (digits(i, basis.local_dim, basis.n), digits(j, basis.local_dim, basis.n));
            let mut ni = Vec::with_capacity(basis.n);
            let mut nj = Vec::with_capacity(basis.n);
            for c in 0..basis.n {
                let (mut a, mut b) = (split.split(di[c]), split.split(dj[c]));
                f(&mut a, &mut b);
                ni.push(join_local(&a));
                nj.push(join_local(&b));
            }
            basis.index(join(&ni, basis.local_dim), join(&nj, basis.local_dim))
        })
        .collect())
}

/// A unital map `phi` sending invariant operators to a direct sum of small
/// blocks, with `phi(G) >= 0` exactly when `G >= 0`.
#[derive(Debug, Clone)]
pub struct BlockMap {
    n: usize,
    local_dim: usize,
    /// Orthonormal columns spanning one copy of each irreducible block.
    isometries: Vec<CMat>,
    multiplicities: Vec<usize>,
}

impl BlockMap {
    pub fn block_dims(&self) -> Vec<usize> {
        self.isometries.iter().map(|v| v.ncols()).collect()
    }

    /// How many times each block repeats in the full space.
    pub fn multiplicities(&self) -> &[usize] {
        &self.multiplicities
    }

    /// Dimension of the isotypic component behind each block.
    pub fn isotypic_dims(&self) -> Vec<usize> {
        self.block_dims().iter().zip(&self.multiplicities).map(|(p, m)| p * m).collect()
    }

    pub fn apply(&self, g: &CMat) -> Vec<CMat> {
        self.isometries.iter().map(|v| v.adjoint() * g * v).collect()
    }

    /// `phi(C^r)` for every basis element, computed from the orbit pairs.
    pub fn basis_images(&self, basis: &OrbitBasis) -> Result<Vec<Vec<CMat>>> {
        if basis.n != self.n || basis.local_dim != self.local_dim {
            return Err(Error::Layout("basis and block map disagree on n or d".into()));
        }
        Ok((0..basis.len())
            .map(|r| {
                let pairs = basis.orbit_pairs(r);
                self.isometries
                    .iter()
                    .map(|v| {
                        let p = v.ncols();
                        let mut m = CMat::zeros(p, p);
                        for &(i, j) in &pairs {
                            for a in 0..p {
                                let via = v[(i, a)].conj();
                                if via == ZERO {
                                    continue;
                                }
                                for b in 0..p {
                                    m[(a, b)] += via * v[(j, b)];
                                }
                            }
                        }
                        m
                    })
                    .collect()
            })
            .collect())
    }
}

fn cluster_eigen(vals: &[f64], tol: f64) -> Vec<std::ops::Range<usize>> {
    let mut out = Vec::new();
    let mut start = 0;
    for i in 1..=vals.len() {
        if i == vals.len() || vals[i] - vals[i - 1] > tol {
            out.push(start..i);
            start = i;
        }
    }
    out
}

fn sym_eigen(m: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let e = m.clone().symmetric_eigen();
    let mut order: Vec<usize> = (0..m.nrows()).collect();
    order.sort_by(|&a, &b| e.eigenvalues[a].total_cmp(&e.eigenvalues[b]));
    let vals = order.iter().map(|&i| e.eigenvalues[i]).collect();
    let vecs = DMatrix::from_fn(m.nrows(), m.ncols(), |r, c| e.eigenvectors[(r, order[c])]);
    (vals, vecs)
}

/// Numerically block-diagonalizes the algebra of invariant operators on
/// `(C^d)^{(x) n}`. The sum of all transpositions separates the isotypic
/// components; inside each, a generic seeded element of the permutation
/// algebra picks out one copy of the irreducible block.
pub fn block_decompose(n: usize, d: usize, dim_cap: usize) -> Result<BlockMap> {
    if n == 0 || n > 3 {
        return Err(Error::InvalidArgument(format!("block decomposition supports 1 <= n <= 3, got {n}")));
    }
    let dim = d.checked_pow(n as u32).unwrap_or(usize::MAX);
    if dim > dim_cap {
        return Err(Error::DimensionCap { dim, cap: dim_cap });
    }
    let layout = SystemLayout::new((0..n).map(|c| (format!("X{c}"), d)))?;
    let labels: Vec<String> = (0..n).map(|c| format!("X{c}")).collect();
    let lr: Vec<&str> = labels.iter().map(|s| s.as_str()).collect();
    let real = |pi: &[usize]| -> Result<DMatrix<f64>> {
        Ok(permutation_unitary(&layout, &lr, pi)?.matrix().map(|v| v.re))
    };

    let mut class_sum = DMatrix::<f64>::zeros(dim, dim);
    for a in 0..n {
        for b in a + 1..n {
            let mut pi: Vec<usize> = (0..n).collect();
            pi.swap(a, b);
            class_sum += real(&pi)?;
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut generic = DMatrix::<f64>::zeros(dim, dim);
    for pi in permutations(n) {
        let w = real(&pi)?;
        generic += (&w + w.transpose()) * rng.gen_range(0.5..1.5);
    }

    let (tvals, tvecs) = sym_eigen(&class_sum);
    let mut isometries = Vec::new();
    let mut multiplicities = Vec::new();
    for range in cluster_eigen(&tvals, 1e-6) {
        let q = tvecs.columns(range.start, range.len()).into_owned();
        let k = q.transpose() * &generic * &q;
        let (kvals, kvecs) = sym_eigen(&k);
        let scale = kvals.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        let first = cluster_eigen(&kvals, 1e-8 * scale)[0].clone();
        let p = first.len();
        if range.len() % p != 0 {
            return Err(Error::Validation {
                what: "block-structure detection failed: isotypic dimension not divisible by block size".into(),
                residual: p as f64,
            });
        }
        let v = &q * kvecs.columns(0, p);
        isometries.push(v.map(|x| C64::new(x, 0.0)));
        multiplicities.push(range.len() / p);
    }
    let map = BlockMap { n, local_dim: d, isometries, multiplicities };

    // phi must be a *-isomorphism onto its image: traces and Frobenius norms of
    // invariant operators are recovered with the multiplicities.
    let basis = orbit_basis(n, d, dim_cap)?;
    let coeffs: Vec<C64> = (0..basis.len()).map(|_| C64::new(rng.gen_range(-1.0..1.0), 0.0)).collect();
    let g = basis.reconstruct(&coeffs);
    let g = (&g + g.adjoint()) * C64::new(0.5, 0.0);
    let blocks = map.apply(&g);
    let norm_sq: f64 = blocks.iter().zip(&map.multiplicities).map(|(b, &m)| m as f64 * b.norm_squared()).sum();
    let resid = (norm_sq - g.norm_squared()).abs() / g.norm_squared().max(1.0);
    if resid > 1e-8 {
        return Err(Error::Validation { what: "block-structure detection failed: off-block mass".into(), residual: resid });
    }
    Ok(map)
}

/// Hermitian coefficient vector over `basis` in fresh real variables:
/// self-adjoint orbits get one real parameter, adjoint pairs share a complex
/// one (a real one when `real`).
fn hermitian_coefficients(b: &mut LmiBuilder, basis: &OrbitBasis, real: bool, name: &str) -> Vec<LinExpr> {
    let mut out = vec![LinExpr::default(); basis.len()];
    for r in 0..basis.len() {
        let s = basis.adjoint(r);
        if s < r {
            continue;
        }
        let re = b.add_var(format!("{name}[{r}].re"));
        out[r].terms.insert(re.0, C64::new(1.0, 0.0));
        if s != r {
            out[s].terms.insert(re.0, C64::new(1.0, 0.0));
            if !real {
                let im = b.add_var(format!("{name}[{r}].im"));
                out[r].terms.insert(im.0, C64::new(0.0, 1.0));
                out[s].terms.insert(im.0, C64::new(0.0, -1.0));
            }
        }
    }
    out
}

fn apply_marginal(map: &MarginalMap, c: &[LinExpr]) -> Vec<LinExpr> {
    let mut out = vec![LinExpr::default(); map.target.len()];
    for (r, img) in map.images.iter().enumerate() {
        if let Some((t, w)) = img {
            out[*t].add_scaled(&c[r], C64::new(*w, 0.0));
        }
    }
    out
}

fn apply_orbit_map(map: &[usize], c: &[LinExpr]) -> Vec<LinExpr> {
    let mut out = vec![LinExpr::default(); c.len()];
    for (r, &t) in map.iter().enumerate() {
        out[t].add_scaled(&c[r], C64::new(1.0, 0.0));
    }
    out
}

/// Coefficients of `G (x) I_traced` on the big basis, given those of `G` on
/// the marginal target: the entry is copied where the traced digits agree.
fn embed_identity(map: &MarginalMap, c: &[LinExpr]) -> Vec<LinExpr> {
    map.images
        .iter()
        .map(|img| match img {
            Some((t, _)) => c[*t].clone(),
            None => LinExpr::default(),
        })
        .collect()
}

fn add_zero_rows(b: &mut LmiBuilder, c: &[LinExpr]) -> usize {
    let mut rows = 0;
    for e in c {
        if e.is_zero() {
            continue;
        }
        let re = e.real_terms();
        if !re.is_empty() || e.constant.re != 0.0 {
            b.add_equality(&re, -e.constant.re);
            rows += 1;
        }
        let im = e.imag_terms();
        if !im.is_empty() || e.constant.im != 0.0 {
            b.add_equality(&im, -e.constant.im);
            rows += 1;
        }
    }
    rows
}

fn sub_scaled(a: &[LinExpr], bv: &[LinExpr], s: f64) -> Vec<LinExpr> {
    a.iter()
        .zip(bv)
        .map(|(x, y)| {
            let mut e = x.clone();
            e.add_scaled(y, C64::new(-s, 0.0));
            e
        })
        .collect()
}

/// `sum_r c_r phi(C^r)_block (+ shift * I) >= 0` for every block.
fn add_block_psd(
    b: &mut LmiBuilder,
    images: &[Vec<CMat>],
    c: &[LinExpr],
    negate: bool,
    shift: Option<VarId>,
    name: &str,
) {
    let nblocks = images.first().map_or(0, |v| v.len());
    for blk in 0..nblocks {
        let p = images[0][blk].nrows();
        let mut entries: BTreeMap<(usize, usize), LinExpr> = BTreeMap::new();
        let sign = if negate { -1.0 } else { 1.0 };
        for (r, coef) in c.iter().enumerate() {
            if coef.is_zero() {
                continue;
            }
            let m = &images[r][blk];
            for i in 0..p {
                for j in i..p {
                    let v = m[(i, j)];
                    if v != ZERO {
                        entries.entry((i, j)).or_default().add_scaled(coef, v * sign);
                    }
                }
            }
        }
        if let Some(var) = shift {
            for i in 0..p {
                entries.entry((i, i)).or_default().terms.entry(var.0).or_insert(ZERO).re += 1.0;
            }
        }
        HermExpr::from_entries(SystemLayout::single("phi", p), entries).add_psd(b, &format!("{name}[{blk}]"));
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReducedQuery {
    pub channel: Channel,
    pub n: usize,
    pub epsilon: f64,
    pub k: usize,
    pub ppt: bool,
}

pub struct ReducedProgram {
    pub program: extendicap_sdp::LmiProgram,
    pub num_scalar_variables: usize,
    pub orbit_count: usize,
    pub block_dims: Vec<usize>,
    lambda: VarId,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReducedResult {
    pub lambda_star: f64,
    /// `-log2 lambda_star`, a bound on `C^eps(N^{(x) n})`.
    pub bound_bits: f64,
    pub status: SolveStatus,
    pub gap: f64,
    pub iterations: usize,
    pub num_scalar_variables: usize,
    pub wall_ms: u128,
}

/// The capacity program for `N^{(x) n}` restricted to permutation-invariant
/// variables, written in orbit coefficients with positivity through `phi`.
pub fn build_reduced_capacity_sdp(q: &ReducedQuery, dim_cap: usize) -> Result<ReducedProgram> {
    let (da, db, k, n) = (q.channel.dim_in(), q.channel.dim_out(), q.k, q.n);
    if n == 0 || n > 3 {
        return Err(Error::InvalidArgument("reduced program supports 1 <= n <= 3".into()));
    }
    if k == 0 || k > 2 {
        return Err(Error::InvalidArgument("reduced program supports 1 <= k <= 2".into()));
    }
    if !(q.epsilon.is_finite() && q.epsilon >= 0.0 && q.epsilon < crate::capacity::MAX_EPSILON) {
        return Err(Error::InvalidArgument(format!("epsilon {} outside [0, 1 - 1e-9)", q.epsilon)));
    }
    let dbk = db.pow(k as u32);
    let dx = da * dbk;
    let total = dx.checked_pow(n as u32).unwrap_or(usize::MAX);
    if total > dim_cap {
        return Err(Error::DimensionCap { dim: total, cap: dim_cap });
    }
    let real = q.channel.is_real();
    // Local factors of X: A, B_1, ..., B_k.
    let mut xdims = vec![da];
    xdims.extend(std::iter::repeat(db).take(k));
    let bfactors: Vec<usize> = (1..=k).collect();

    let bx = orbit_basis(n, dx, dim_cap)?;
    let phi_x = block_decompose(n, dx, dim_cap)?;
    let img_x = phi_x.basis_images(&bx)?;
    let to_a = marginal_map(&bx, &xdims, &bfactors)?;
    let to_b = marginal_map(&bx, &xdims, &[0])?;
    let phi_b = block_decompose(n, dbk, dim_cap)?;
    let img_b = phi_b.basis_images(&to_b.target)?;

    let mut b = LmiBuilder::new();
    let lambda = b.add_var("lambda");
    b.objective(lambda, 1.0);
    let ba = &to_a.target;
    let alpha = hermitian_coefficients(&mut b, ba, real, "alpha");
    let mut tr = LinExpr::default();
    for r in 0..ba.len() {
        if ba.is_diagonal(r) {
            tr.add_scaled(&alpha[r], C64::new(ba.orbit_size(r) as f64, 0.0));
        }
    }
    b.add_equality(&tr.real_terms(), 1.0);

    let labels = tuples(2, k);
    let beta: Vec<Vec<LinExpr>> = labels
        .iter()
        .map(|y| {
            let tag: String = y.iter().map(|v| v.to_string()).collect();
            hermitian_coefficients(&mut b, &bx, real, &format!("beta^{tag}"))
        })
        .collect();

    // Completeness: sum_y beta^y = alpha (x) I_B.
    let mut sum = vec![LinExpr::default(); bx.len()];
    for c in &beta {
        for (s, e) in sum.iter_mut().zip(c) {
            s.add_scaled(e, C64::new(1.0, 0.0));
        }
    }
    add_zero_rows(&mut b, &sub_scaled(&sum, &embed_identity(&to_a, &alpha), 1.0));

    for (y, c) in labels.iter().zip(&beta) {
        let tag: String = y.iter().map(|v| v.to_string()).collect();
        add_block_psd(&mut b, &img_x, c, false, None, &format!("Q^{tag}"));
    }

    if k == 2 {
        // Swapping B_1 and B_2 in every copy: beta^{y o pi}_r = beta^y_{f(r)}.
        let swap = local_orbit_map(&bx, &xdims, |a, c| {
            a.swap(1, 2);
            c.swap(1, 2);
        })?;
        for (yi, y) in labels.iter().enumerate() {
            let src = crate::labels::tuple_index(&[y[1], y[0]], 2);
            let moved = apply_orbit_map(&swap, &beta[src]);
            add_zero_rows(&mut b, &sub_scaled(&moved, &beta[yi], 1.0));
        }
    }

    if q.ppt {
        for l in 1..=k {
            let tmap = local_orbit_map(&bx, &xdims, |a, c| {
                for p in 1..=l {
                    std::mem::swap(&mut a[p], &mut c[p]);
                }
            })?;
            for (y, c) in labels.iter().zip(&beta) {
                let tag: String = y.iter().map(|v| v.to_string()).collect();
                add_block_psd(&mut b, &img_x, &apply_orbit_map(&tmap, c), false, None, &format!("T_{l}(Q^{tag})"));
            }
        }
    }

    // lambda I - sum_{y_2..} Tr_A Q^{(0,..)} >= 0 through phi_B, which is unital.
    let mut head = vec![LinExpr::default(); bx.len()];
    for (y, c) in labels.iter().zip(&beta) {
        if y[0] == 0 {
            for (h, e) in head.iter_mut().zip(c) {
                h.add_scaled(e, C64::new(1.0, 0.0));
            }
        }
    }
    let head_b = apply_marginal(&to_b, &head);
    add_block_psd(&mut b, &img_b, &head_b, true, Some(lambda), "cap");

    if k == 2 {
        let bdims = vec![db; k];
        let drop_last = marginal_map(&to_b.target, &bdims, &[k - 1])?;
        for h in tuples(2, k - 1) {
            let mut acc = vec![LinExpr::default(); bx.len()];
            for yk in 0..2 {
                let mut y = h.clone();
                y.push(yk);
                let c = &beta[crate::labels::tuple_index(&y, 2)];
                for (s, e) in acc.iter_mut().zip(c) {
                    s.add_scaled(e, C64::new(1.0, 0.0));
                }
            }
            let lhs = apply_marginal(&to_b, &acc);
            let reduced = apply_marginal(&drop_last, &lhs);
            let rhs = embed_identity(&drop_last, &reduced);
            add_zero_rows(&mut b, &sub_scaled(&lhs, &rhs, 1.0 / (db as f64).powi(n as i32)));
        }
    }

    // Success probability: Tr[Tr_{B_2..}(Q^{(0,..)}) Gamma^{(x) n}] / |B|^{n(k-1)}.
    let to_ab = marginal_map(&bx, &xdims, &bfactors[1..])?;
    let head_ab = apply_marginal(&to_ab, &head);
    let bab = &to_ab.target;
    let gamma = q.channel.choi().matrix();
    let mut succ = LinExpr::default();
    let norm = (db as f64).powi((n * (k - 1)) as i32);
    for (t, coef) in head_ab.iter().enumerate() {
        if coef.is_zero() {
            continue;
        }
        let (i, j) = bab.representatives()[t];
        let (di, dj) = (digits(i, da * db, n), digits(j, da * db, n));
        let eta = (0..n).fold(C64::new(1.0, 0.0), |acc, c| acc * gamma[(dj[c], di[c])]);
        succ.add_scaled(coef, eta * C64::new(bab.orbit_size(t) as f64 / norm, 0.0));
    }
    b.add_scalar_ge(&succ.real_terms(), succ.constant.re - (1.0 - q.epsilon));

    let program = b.build()?;
    Ok(ReducedProgram {
        program,
        num_scalar_variables: b.num_vars(),
        orbit_count: bx.len(),
        block_dims: phi_x.block_dims(),
        lambda,
    })
}

pub fn reduced_capacity_bound(q: &ReducedQuery, solver: &SolverOptions) -> Result<ReducedResult> {
    let start = Instant::now();
    let prog = build_reduced_capacity_sdp(q, DEFAULT_DIM_CAP)?;
    let sol = prog.program.solve(solver)?;
    let lambda = sol.x[prog.lambda.0];
    Ok(ReducedResult {
        lambda_star: lambda,
        bound_bits: -lambda.log2(),
        status: sol.status,
        gap: sol.sdp.relative_gap,
        iterations: sol.sdp.iterations,
        num_scalar_variables: prog.num_scalar_variables,
        wall_ms: start.elapsed().as_millis(),
    })
}
