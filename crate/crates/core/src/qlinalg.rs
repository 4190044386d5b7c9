//! Dense complex operators on labelled multipartite systems.
//!
//! Composite indices are row-major with the leftmost subsystem most
//! significant: for dims `(d_1, ..., d_n)` the basis state `|i_1 ... i_n>` has
//! index `((i_1 d_2 + i_2) d_3 + ...) d_n + i_n`.

use nalgebra::{Complex, DMatrix, DVector};

use crate::error::{Error, Result};

pub type C64 = Complex<f64>;
pub type CMat = DMatrix<C64>;

pub(crate) const ZERO: C64 = C64::new(0.0, 0.0);
pub(crate) const ONE: C64 = C64::new(1.0, 0.0);

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SystemLayout {
    subsystems: Vec<(String, usize)>,
}

impl SystemLayout {
    pub fn new<S: Into<String>>(subsystems: impl IntoIterator<Item = (S, usize)>) -> Result<Self> {
        let subsystems: Vec<(String, usize)> =
            subsystems.into_iter().map(|(l, d)| (l.into(), d)).collect();
        for (i, (label, dim)) in subsystems.iter().enumerate() {
            if *dim == 0 {
                return Err(Error::Layout(format!("subsystem {label} has dimension 0")));
            }
            if subsystems[..i].iter().any(|(l, _)| l == label) {
                return Err(Error::Layout(format!("duplicate label {label}")));
            }
        }
        Ok(Self { subsystems })
    }

    pub fn single(label: &str, dim: usize) -> Self {
        Self::new([(label, dim)]).expect("a single labelled system is always valid")
    }

    /// The trivial layout of a scalar.
    pub fn scalar() -> Self {
        Self { subsystems: Vec::new() }
    }

    pub fn subsystems(&self) -> &[(String, usize)] {
        &self.subsystems
    }

    pub fn labels(&self) -> impl Iterator<Item = &str> {
        self.subsystems.iter().map(|(l, _)| l.as_str())
    }

    pub fn dims(&self) -> Vec<usize> {
        self.subsystems.iter().map(|(_, d)| *d).collect()
    }

    pub fn len(&self) -> usize {
        self.subsystems.len()
    }

    pub fn is_empty(&self) -> bool {
        self.subsystems.is_empty()
    }

    pub fn total_dim(&self) -> usize {
        self.subsystems.iter().map(|(_, d)| *d).product()
    }

    pub fn position(&self, label: &str) -> Result<usize> {
        self.subsystems
            .iter()
            .position(|(l, _)| l == label)
            .ok_or_else(|| Error::Layout(format!("unknown subsystem {label}")))
    }

    pub fn dim_of(&self, label: &str) -> Result<usize> {
        Ok(self.subsystems[self.position(label)?].1)
    }

    pub fn concat(&self, other: &SystemLayout) -> Result<Self> {
        Self::new(self.subsystems.iter().chain(&other.subsystems).cloned())
    }

    fn positions(&self, labels: &[&str]) -> Result<Vec<usize>> {
        let mut out = Vec::with_capacity(labels.len());
        for l in labels {
            let p = self.position(l)?;
            if out.contains(&p) {
                return Err(Error::Layout(format!("label {l} listed twice")));
            }
            out.push(p);
        }
        Ok(out)
    }

    /// Digits of a composite index.
    pub fn split_index(&self, mut index: usize) -> Vec<usize> {
        let mut digits = vec![0; self.subsystems.len()];
        for (k, (_, d)) in self.subsystems.iter().enumerate().rev() {
            digits[k] = index % d;
            index /= d;
        }
        digits
    }

    pub fn join_index(&self, digits: &[usize]) -> usize {
        digits
            .iter()
            .zip(&self.subsystems)
            .fold(0, |acc, (i, (_, d))| acc * d + i)
    }

    fn sub_layout(&self, keep: &[usize]) -> Self {
        Self { subsystems: keep.iter().map(|&p| self.subsystems[p].clone()).collect() }
    }
}

/// Splits every composite index into the index of a subset of subsystems and
/// the index of the complement.
pub(crate) struct IndexSplit {
    pub inner: Vec<usize>,
    pub outer: Vec<usize>,
    pub outer_layout: SystemLayout,
}

impl IndexSplit {
    pub fn new(layout: &SystemLayout, selected: &[usize]) -> Self {
        let rest: Vec<usize> = (0..layout.len()).filter(|p| !selected.contains(p)).collect();
        let inner_layout = layout.sub_layout(selected);
        let outer_layout = layout.sub_layout(&rest);
        let n = layout.total_dim();
        let mut inner = Vec::with_capacity(n);
        let mut outer = Vec::with_capacity(n);
        for i in 0..n {
            let d = layout.split_index(i);
            let a: Vec<usize> = selected.iter().map(|&p| d[p]).collect();
            let b: Vec<usize> = rest.iter().map(|&p| d[p]).collect();
            inner.push(inner_layout.join_index(&a));
            outer.push(outer_layout.join_index(&b));
        }
        Self { inner, outer, outer_layout }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Operator {
    layout: SystemLayout,
    mat: CMat,
}

impl Operator {
    pub fn new(layout: SystemLayout, mat: CMat) -> Result<Self> {
        let n = layout.total_dim();
        if mat.nrows() != n || mat.ncols() != n {
            return Err(Error::Dimension(format!(
                "matrix is {}x{}, layout needs {n}x{n}",
                mat.nrows(),
                mat.ncols()
            )));
        }
        Ok(Self { layout, mat })
    }

    pub fn from_real(layout: SystemLayout, mat: &DMatrix<f64>) -> Result<Self> {
        Self::new(layout, mat.map(|v| C64::new(v, 0.0)))
    }

    pub fn identity(layout: SystemLayout) -> Self {
        let n = layout.total_dim();
        Self { layout, mat: CMat::identity(n, n) }
    }

    pub fn zeros(layout: SystemLayout) -> Self {
        let n = layout.total_dim();
        Self { layout, mat: CMat::zeros(n, n) }
    }

    /// `|v><v|`.
    pub fn projector(layout: SystemLayout, v: &DVector<C64>) -> Result<Self> {
        Self::new(layout, v * v.adjoint())
    }

    pub fn layout(&self) -> &SystemLayout {
        &self.layout
    }

    pub fn matrix(&self) -> &CMat {
        &self.mat
    }

    pub fn into_matrix(self) -> CMat {
        self.mat
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn trace(&self) -> C64 {
        self.mat.trace()
    }

    pub fn adjoint(&self) -> Self {
        Self { layout: self.layout.clone(), mat: self.mat.adjoint() }
    }

    pub fn scale(&self, s: f64) -> Self {
        Self { layout: self.layout.clone(), mat: &self.mat * C64::new(s, 0.0) }
    }

    pub fn add(&self, other: &Operator) -> Result<Self> {
        self.same_layout(other)?;
        Ok(Self { layout: self.layout.clone(), mat: &self.mat + &other.mat })
    }

    pub fn sub(&self, other: &Operator) -> Result<Self> {
        self.same_layout(other)?;
        Ok(Self { layout: self.layout.clone(), mat: &self.mat - &other.mat })
    }

    pub fn mul(&self, other: &Operator) -> Result<Self> {
        self.same_layout(other)?;
        Ok(Self { layout: self.layout.clone(), mat: &self.mat * &other.mat })
    }

    /// `Tr[self * other]`.
    pub fn inner_trace(&self, other: &Operator) -> Result<C64> {
        self.same_layout(other)?;
        Ok(trace_of_product(&self.mat, &other.mat))
    }

    fn same_layout(&self, other: &Operator) -> Result<()> {
        if self.layout != other.layout {
            return Err(Error::Layout(format!(
                "layouts differ: {:?} vs {:?}",
                self.layout.subsystems, other.layout.subsystems
            )));
        }
        Ok(())
    }

    /// `||A - A^dagger||_op`.
    pub fn hermiticity_residual(&self) -> f64 {
        operator_norm_general(&(&self.mat - self.mat.adjoint()))
    }

    pub fn is_hermitian(&self) -> bool {
        let norm = operator_norm_general(&self.mat);
        self.hermiticity_residual() <= 1e-9 * norm.max(1.0)
    }

    /// `(A + A^dagger) / 2`.
    pub fn hermitian_part(&self) -> Self {
        Self {
            layout: self.layout.clone(),
            mat: (&self.mat + self.mat.adjoint()) * C64::new(0.5, 0.0),
        }
    }

    pub fn relabel(&self, labels: &[&str]) -> Result<Self> {
        if labels.len() != self.layout.len() {
            return Err(Error::Layout("relabel needs one label per subsystem".into()));
        }
        let layout = SystemLayout::new(
            labels.iter().zip(self.layout.dims()).map(|(l, d)| (l.to_string(), d)),
        )?;
        Ok(Self { layout, mat: self.mat.clone() })
    }

    /// Reorders the tensor factors to the given label order.
    pub fn permute_subsystems(&self, order: &[&str]) -> Result<Self> {
        if order.len() != self.layout.len() {
            return Err(Error::Layout("reorder must list every subsystem once".into()));
        }
        let pos = self.layout.positions(order)?;
        let new_layout = self.layout.sub_layout(&pos);
        let n = self.dim();
        let map: Vec<usize> = (0..n)
            .map(|i| {
                let d = self.layout.split_index(i);
                let nd: Vec<usize> = pos.iter().map(|&p| d[p]).collect();
                new_layout.join_index(&nd)
            })
            .collect();
        let mut out = CMat::zeros(n, n);
        for c in 0..n {
            for r in 0..n {
                out[(map[r], map[c])] = self.mat[(r, c)];
            }
        }
        Ok(Self { layout: new_layout, mat: out })
    }
}

pub(crate) fn trace_of_product(a: &CMat, b: &CMat) -> C64 {
    // Tr[AB] = sum_{ij} A_ij B_ji
    let mut s = ZERO;
    for i in 0..a.nrows() {
        for j in 0..a.ncols() {
            s += a[(i, j)] * b[(j, i)];
        }
    }
    s
}

fn operator_norm_general(m: &CMat) -> f64 {
    if m.nrows() == 0 {
        return 0.0;
    }
    m.clone().singular_values().max()
}

pub fn tensor(a: &Operator, b: &Operator) -> Result<Operator> {
    let layout = a.layout.concat(&b.layout)?;
    Ok(Operator { layout, mat: a.mat.kronecker(&b.mat) })
}

/// Tensor product of several operators, left to right.
pub fn tensor_all(ops: &[&Operator]) -> Result<Operator> {
    let mut acc = Operator::identity(SystemLayout::scalar());
    for op in ops {
        acc = tensor(&acc, op)?;
    }
    Ok(acc)
}

pub fn partial_trace(a: &Operator, remove: &[&str]) -> Result<Operator> {
    let pos = a.layout.positions(remove)?;
    let split = IndexSplit::new(&a.layout, &pos);
    let m = split.outer_layout.total_dim();
    let mut out = CMat::zeros(m, m);
    let n = a.dim();
    for c in 0..n {
        for r in 0..n {
            if split.inner[r] == split.inner[c] {
                out[(split.outer[r], split.outer[c])] += a.mat[(r, c)];
            }
        }
    }
    Ok(Operator { layout: split.outer_layout, mat: out })
}

pub fn partial_transpose(a: &Operator, transpose_on: &[&str]) -> Result<Operator> {
    let pos = a.layout.positions(transpose_on)?;
    let n = a.dim();
    let digits: Vec<Vec<usize>> = (0..n).map(|i| a.layout.split_index(i)).collect();
    let mut out = CMat::zeros(n, n);
    let mut dr = vec![0; a.layout.len()];
    let mut dc = vec![0; a.layout.len()];
    for r in 0..n {
        for c in 0..n {
            dr.copy_from_slice(&digits[r]);
            dc.copy_from_slice(&digits[c]);
            for &p in &pos {
                std::mem::swap(&mut dr[p], &mut dc[p]);
            }
            out[(a.layout.join_index(&dr), a.layout.join_index(&dc))] = a.mat[(r, c)];
        }
    }
    Ok(Operator { layout: a.layout.clone(), mat: out })
}

/// Basis-state map of `W^pi`: the content of block slot `s` moves to slot `pi[s]`.
pub(crate) fn permutation_index_map(
    layout: &SystemLayout,
    block_labels: &[&str],
    pi: &[usize],
) -> Result<Vec<usize>> {
    let pos = layout.positions(block_labels)?;
    if pi.len() != pos.len() {
        return Err(Error::InvalidArgument(format!(
            "permutation of length {} for {} blocks",
            pi.len(),
            pos.len()
        )));
    }
    let mut seen = vec![false; pi.len()];
    for &p in pi {
        if p >= pi.len() || seen[p] {
            return Err(Error::InvalidArgument(format!("{pi:?} is not a permutation")));
        }
        seen[p] = true;
    }
    let dims = layout.dims();
    if pos.iter().any(|&p| dims[p] != dims[pos[0]]) {
        return Err(Error::Layout("permuted subsystems must have equal dimensions".into()));
    }
    Ok((0..layout.total_dim())
        .map(|i| {
            let d = layout.split_index(i);
            let mut nd = d.clone();
            for (s, &p) in pos.iter().enumerate() {
                nd[pos[pi[s]]] = d[p];
            }
            layout.join_index(&nd)
        })
        .collect())
}

/// The unitary `W^pi` permuting the listed subsystems; `W^pi W^sigma = W^{pi o sigma}`.
pub fn permutation_unitary(
    layout: &SystemLayout,
    block_labels: &[&str],
    pi: &[usize],
) -> Result<Operator> {
    let map = permutation_index_map(layout, block_labels, pi)?;
    let n = layout.total_dim();
    let mut w = CMat::zeros(n, n);
    for (i, &j) in map.iter().enumerate() {
        w[(j, i)] = ONE;
    }
    Ok(Operator { layout: layout.clone(), mat: w })
}

/// `W A W^dagger` for the permutation of the listed subsystems.
pub fn conjugate_by_permutation(a: &Operator, block_labels: &[&str], pi: &[usize]) -> Result<Operator> {
    let map = permutation_index_map(&a.layout, block_labels, pi)?;
    let n = a.dim();
    let mut out = CMat::zeros(n, n);
    for c in 0..n {
        for r in 0..n {
            out[(map[r], map[c])] = a.mat[(r, c)];
        }
    }
    Ok(Operator { layout: a.layout.clone(), mat: out })
}

/// `Phi = |Phi><Phi|` with `|Phi> = d^{-1/2} sum_i |ii>` on systems `A`, `B`.
pub fn max_entangled(d: usize) -> Operator {
    max_entangled_on(d, "A", "B")
}

pub fn max_entangled_on(d: usize, left: &str, right: &str) -> Operator {
    let layout = SystemLayout::new([(left, d), (right, d)]).expect("distinct labels");
    let n = d * d;
    let mut m = CMat::zeros(n, n);
    let w = C64::new(1.0 / d as f64, 0.0);
    for i in 0..d {
        for j in 0..d {
            m[(i * d + i, j * d + j)] = w;
        }
    }
    Operator { layout, mat: m }
}

/// All permutations of `0..k` in lexicographic order.
pub fn permutations(k: usize) -> Vec<Vec<usize>> {
    fn rec(cur: &mut Vec<usize>, used: &mut [bool], out: &mut Vec<Vec<usize>>) {
        if cur.len() == used.len() {
            out.push(cur.clone());
            return;
        }
        for i in 0..used.len() {
            if !used[i] {
                used[i] = true;
                cur.push(i);
                rec(cur, used, out);
                cur.pop();
                used[i] = false;
            }
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::with_capacity(k), &mut vec![false; k], &mut out);
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    pub trace_norm: f64,
    pub operator_norm: f64,
    pub min_eigenvalue: f64,
}

/// Eigenvalues (ascending) and eigenvectors of the Hermitian part of `m`.
pub fn hermitian_eigen(m: &CMat) -> (Vec<f64>, CMat) {
    let n = m.nrows();
    if n == 0 {
        return (Vec::new(), CMat::zeros(0, 0));
    }
    let h = (m + m.adjoint()) * C64::new(0.5, 0.0);
    let eig = h.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let vals = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vecs = CMat::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    (vals, vecs)
}

pub fn hermitian_eigenvalues(m: &CMat) -> Vec<f64> {
    if m.nrows() == 0 {
        return Vec::new();
    }
    let h = (m + m.adjoint()) * C64::new(0.5, 0.0);
    let mut v: Vec<f64> = h.symmetric_eigenvalues().iter().copied().collect();
    v.sort_by(f64::total_cmp);
    v
}

pub fn min_eigenvalue(m: &CMat) -> f64 {
    hermitian_eigenvalues(m).first().copied().unwrap_or(f64::INFINITY)
}

/// Applies `f` to the spectrum of a Hermitian matrix.
pub fn hermitian_function(m: &CMat, f: impl Fn(f64) -> f64) -> CMat {
    let (vals, vecs) = hermitian_eigen(m);
    let d = DVector::from_iterator(vals.len(), vals.iter().map(|&v| C64::new(f(v), 0.0)));
    &vecs * CMat::from_diagonal(&d) * vecs.adjoint()
}

/// Square root of a PSD matrix, clamping round-off negatives to zero.
pub fn psd_sqrt(m: &CMat) -> CMat {
    hermitian_function(m, |v| v.max(0.0).sqrt())
}

pub fn spectrum(a: &Operator) -> Result<Spectrum> {
    if !a.is_hermitian() {
        return Err(Error::NotHermitian { residual: a.hermiticity_residual() });
    }
    let eigenvalues = hermitian_eigenvalues(&a.mat);
    Ok(Spectrum {
        trace_norm: eigenvalues.iter().map(|v| v.abs()).sum(),
        operator_norm: eigenvalues.iter().fold(0.0, |m, v| m.max(v.abs())),
        min_eigenvalue: eigenvalues.first().copied().unwrap_or(0.0),
        eigenvalues,
    })
}

/// `M^T` (plain transpose, not the adjoint).
pub fn transpose(a: &Operator) -> Operator {
    Operator { layout: a.layout.clone(), mat: a.mat.transpose() }
}
