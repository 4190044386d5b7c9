//! Matrices whose entries are affine in real scalar variables of an
//! [`LmiBuilder`], with the index-relocating maps (partial trace, partial
//! transpose, subsystem permutation, tensoring with an identity) needed to
//! state POVM constraints on matrix variables.

use std::collections::BTreeMap;

use extendicap_sdp::{LmiBuilder, VarId};

use crate::error::{Error, Result};
use crate::qlinalg::{permutation_index_map, CMat, IndexSplit, SystemLayout, C64, ZERO};

#[derive(Debug, Clone, Default, PartialEq)]
pub struct LinExpr {
    pub terms: BTreeMap<usize, C64>,
    pub constant: C64,
}

impl LinExpr {
    pub(crate) fn add_scaled(&mut self, other: &LinExpr, s: C64) {
        for (&v, &c) in &other.terms {
            let e = self.terms.entry(v).or_insert(ZERO);
            *e += c * s;
        }
        self.constant += other.constant * s;
    }

    pub fn eval(&self, x: &[f64]) -> C64 {
        self.terms.iter().fold(self.constant, |acc, (&v, &c)| acc + c * x[v])
    }

    pub(crate) fn is_zero(&self) -> bool {
        self.constant == ZERO && self.terms.values().all(|c| *c == ZERO)
    }

    pub fn real_terms(&self) -> Vec<(VarId, f64)> {
        self.terms
            .iter()
            .filter(|(_, c)| c.re != 0.0)
            .map(|(&v, c)| (VarId(v), c.re))
            .collect()
    }

    pub fn imag_terms(&self) -> Vec<(VarId, f64)> {
        self.terms
            .iter()
            .filter(|(_, c)| c.im != 0.0)
            .map(|(&v, c)| (VarId(v), c.im))
            .collect()
    }
}

/// Square matrix of affine expressions on a labelled layout. Only nonzero
/// entries are stored; both triangles are kept.
#[derive(Debug, Clone, PartialEq)]
pub struct HermExpr {
    layout: SystemLayout,
    entries: BTreeMap<(usize, usize), LinExpr>,
}

impl HermExpr {
    pub fn zero(layout: SystemLayout) -> Self {
        Self { layout, entries: BTreeMap::new() }
    }

    /// A fresh Hermitian (or real symmetric) matrix variable: `d^2` real
    /// parameters, or `d(d+1)/2` when restricted to real entries.
    pub fn variable(b: &mut LmiBuilder, layout: SystemLayout, name: &str, real: bool) -> Self {
        let d = layout.total_dim();
        let mut e = Self::zero(layout);
        for r in 0..d {
            for c in r..d {
                let re = b.add_var(format!("{name}[{r},{c}].re"));
                let mut up = LinExpr::default();
                up.terms.insert(re.0, C64::new(1.0, 0.0));
                if r != c && !real {
                    let im = b.add_var(format!("{name}[{r},{c}].im"));
                    up.terms.insert(im.0, C64::new(0.0, 1.0));
                }
                if r != c {
                    let mut lo = LinExpr::default();
                    for (&v, &cf) in &up.terms {
                        lo.terms.insert(v, cf.conj());
                    }
                    e.entries.insert((c, r), lo);
                }
                e.entries.insert((r, c), up);
            }
        }
        e
    }

    /// Builds an expression from explicit entries; the caller keeps both triangles consistent.
    pub(crate) fn from_entries(layout: SystemLayout, entries: BTreeMap<(usize, usize), LinExpr>) -> Self {
        Self { layout, entries }
    }

    pub fn constant(layout: SystemLayout, m: &CMat) -> Result<Self> {
        let d = layout.total_dim();
        if m.nrows() != d || m.ncols() != d {
            return Err(Error::Dimension("constant matrix does not match layout".into()));
        }
        let mut e = Self::zero(layout);
        for r in 0..d {
            for c in 0..d {
                if m[(r, c)] != ZERO {
                    e.entries.insert((r, c), LinExpr { terms: BTreeMap::new(), constant: m[(r, c)] });
                }
            }
        }
        Ok(e)
    }

    /// `s * I`, with `s` a scalar variable.
    pub fn scaled_identity(layout: SystemLayout, var: VarId, s: f64) -> Self {
        let d = layout.total_dim();
        let mut e = Self::zero(layout);
        for i in 0..d {
            let mut l = LinExpr::default();
            l.terms.insert(var.0, C64::new(s, 0.0));
            e.entries.insert((i, i), l);
        }
        e
    }

    pub fn layout(&self) -> &SystemLayout {
        &self.layout
    }

    pub fn dim(&self) -> usize {
        self.layout.total_dim()
    }

    pub fn entry(&self, r: usize, c: usize) -> Option<&LinExpr> {
        self.entries.get(&(r, c))
    }

    pub fn with_layout(mut self, layout: SystemLayout) -> Result<Self> {
        if layout.total_dim() != self.dim() {
            return Err(Error::Layout("relayout must keep the total dimension".into()));
        }
        self.layout = layout;
        Ok(self)
    }

    pub fn add_assign_scaled(&mut self, other: &HermExpr, s: f64) -> Result<()> {
        if self.layout != other.layout {
            return Err(Error::Layout(format!(
                "cannot add expressions on {:?} and {:?}",
                self.layout.subsystems(),
                other.layout.subsystems()
            )));
        }
        let s = C64::new(s, 0.0);
        for (&k, v) in &other.entries {
            self.entries.entry(k).or_default().add_scaled(v, s);
        }
        Ok(())
    }

    pub fn scaled(&self, s: f64) -> Self {
        let mut out = Self::zero(self.layout.clone());
        out.add_assign_scaled(self, s).expect("same layout");
        out
    }

    fn relocate(&self, layout: SystemLayout, f: impl Fn(usize, usize) -> Option<(usize, usize)>) -> Self {
        let mut out = Self::zero(layout);
        let one = C64::new(1.0, 0.0);
        for (&(r, c), v) in &self.entries {
            if let Some(k) = f(r, c) {
                out.entries.entry(k).or_default().add_scaled(v, one);
            }
        }
        out
    }

    pub fn partial_trace(&self, remove: &[&str]) -> Result<Self> {
        let pos = remove
            .iter()
            .map(|l| self.layout.position(l))
            .collect::<Result<Vec<_>>>()?;
        let split = IndexSplit::new(&self.layout, &pos);
        let out_layout = split.outer_layout.clone();
        Ok(self.relocate(out_layout, |r, c| {
            (split.inner[r] == split.inner[c]).then(|| (split.outer[r], split.outer[c]))
        }))
    }

    pub fn partial_transpose(&self, on: &[&str]) -> Result<Self> {
        let pos = on
            .iter()
            .map(|l| self.layout.position(l))
            .collect::<Result<Vec<_>>>()?;
        let layout = self.layout.clone();
        let n = layout.total_dim();
        let digits: Vec<Vec<usize>> = (0..n).map(|i| layout.split_index(i)).collect();
        Ok(self.relocate(layout.clone(), |r, c| {
            let mut dr = digits[r].clone();
            let mut dc = digits[c].clone();
            for &p in &pos {
                std::mem::swap(&mut dr[p], &mut dc[p]);
            }
            Some((layout.join_index(&dr), layout.join_index(&dc)))
        }))
    }

    /// `W^pi X (W^pi)^dagger`.
    pub fn conjugate_by_permutation(&self, block_labels: &[&str], pi: &[usize]) -> Result<Self> {
        let map = permutation_index_map(&self.layout, block_labels, pi)?;
        Ok(self.relocate(self.layout.clone(), |r, c| Some((map[r], map[c]))))
    }

    /// `X (x) I` on appended subsystems.
    pub fn tensor_identity(&self, extra: &SystemLayout) -> Result<Self> {
        let layout = self.layout.concat(extra)?;
        let m = extra.total_dim();
        let mut out = Self::zero(layout);
        for (&(r, c), v) in &self.entries {
            for i in 0..m {
                out.entries.insert((r * m + i, c * m + i), v.clone());
            }
        }
        Ok(out)
    }

    /// Reorders subsystems to the given label order.
    pub fn permute_subsystems(&self, order: &[&str]) -> Result<Self> {
        let pos = order
            .iter()
            .map(|l| self.layout.position(l))
            .collect::<Result<Vec<_>>>()?;
        if pos.len() != self.layout.len() {
            return Err(Error::Layout("reorder must list every subsystem".into()));
        }
        let new_layout = SystemLayout::new(pos.iter().map(|&p| self.layout.subsystems()[p].clone()))?;
        let map: Vec<usize> = (0..self.dim())
            .map(|i| {
                let d = self.layout.split_index(i);
                new_layout.join_index(&pos.iter().map(|&p| d[p]).collect::<Vec<_>>())
            })
            .collect();
        Ok(self.relocate(new_layout, |r, c| Some((map[r], map[c]))))
    }

    /// `Tr[X M]`.
    pub fn trace_with(&self, m: &CMat) -> LinExpr {
        let mut out = LinExpr::default();
        for (&(r, c), v) in &self.entries {
            let w = m[(c, r)];
            if w != ZERO {
                out.add_scaled(v, w);
            }
        }
        out
    }

    pub fn trace(&self) -> LinExpr {
        let mut out = LinExpr::default();
        for (&(r, c), v) in &self.entries {
            if r == c {
                out.add_scaled(v, C64::new(1.0, 0.0));
            }
        }
        out
    }

    pub fn eval(&self, x: &[f64]) -> CMat {
        let d = self.dim();
        let mut m = CMat::zeros(d, d);
        for (&(r, c), v) in &self.entries {
            m[(r, c)] = v.eval(x);
        }
        m
    }

    /// Adds the LMI `X >= 0` and returns its id.
    pub fn add_psd(&self, b: &mut LmiBuilder, name: &str) -> extendicap_sdp::LmiId {
        let id = b.add_lmi(name, self.dim());
        for (&(r, c), v) in &self.entries {
            if r > c {
                continue;
            }
            if v.constant != ZERO {
                b.lmi_constant(id, r, c, v.constant);
            }
            for (&var, &cf) in &v.terms {
                if cf != ZERO {
                    b.lmi_coef(id, VarId(var), r, c, cf);
                }
            }
        }
        id
    }

    /// Adds real equality rows expressing `X = 0` (upper triangle, real and
    /// imaginary parts). Returns the number of rows added.
    pub fn add_zero(&self, b: &mut LmiBuilder) -> usize {
        let mut rows = 0;
        for (&(r, c), v) in &self.entries {
            if r > c || v.is_zero() {
                continue;
            }
            let re = v.real_terms();
            if !re.is_empty() || v.constant.re != 0.0 {
                b.add_equality(&re, -v.constant.re);
                rows += 1;
            }
            if r != c {
                let im = v.imag_terms();
                if !im.is_empty() || v.constant.im != 0.0 {
                    b.add_equality(&im, -v.constant.im);
                    rows += 1;
                }
            }
        }
        rows
    }

    pub fn difference(&self, other: &HermExpr) -> Result<Self> {
        let mut d = self.clone();
        d.add_assign_scaled(other, -1.0)?;
        Ok(d)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qlinalg::{partial_trace, partial_transpose, Operator};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn expression_maps_agree_with_numeric_maps() {
        let layout = SystemLayout::new([("A", 2), ("B", 3)]).unwrap();
        let mut b = LmiBuilder::new();
        let x = HermExpr::variable(&mut b, layout.clone(), "X", false);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let vals: Vec<f64> = (0..b.num_vars()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let m = x.eval(&vals);
        assert!((&m - m.adjoint()).norm() < 1e-15);
        let op = Operator::new(layout, m).unwrap();

        let pt = x.partial_trace(&["A"]).unwrap().eval(&vals);
        assert!((pt - partial_trace(&op, &["A"]).unwrap().matrix()).norm() < 1e-14);
        let tb = x.partial_transpose(&["B"]).unwrap().eval(&vals);
        assert!((tb - partial_transpose(&op, &["B"]).unwrap().matrix()).norm() < 1e-14);
        let m2 = CMat::from_fn(6, 6, |r, c| C64::new((r + 2 * c) as f64, r as f64 - c as f64));
        let t = x.trace_with(&m2).eval(&vals);
        let direct = (op.matrix() * &m2).trace();
        assert!((t - direct).norm() < 1e-12);
    }
}
