//! Block-structured SDP data in standard form.
//!
//! The primal/dual pair handled by the solver is
//!
//! ```text
//! (P)  min  sum_j <C_j, X_j>
//!      s.t. sum_j <A_ij, X_j> = b_i      i = 1..m
//!           X_j >= 0
//!
//! (D)  max  b . y
//!      s.t. Z_j = C_j - sum_i y_i A_ij >= 0
//! ```
//!
//! Blocks are either dense PSD blocks or diagonal (linear) blocks. All
//! coefficient matrices are real symmetric and stored sparsely as upper
//! triangles.

use std::fmt::Write as _;
use std::io::{self, BufRead, Write};

use nalgebra::{DMatrix, DVector};

use crate::error::SdpError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BlockKind {
    /// Dense symmetric block constrained to the PSD cone.
    Psd,
    /// Nonnegative orthant; only diagonal entries are meaningful.
    Diagonal,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlockSpec {
    pub name: String,
    pub kind: BlockKind,
    pub dim: usize,
}

/// Sparse symmetric matrix stored as upper-triangle triplets `(row <= col)`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SparseSym {
    pub entries: Vec<(usize, usize, f64)>,
}

impl SparseSym {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds `value` at `(row, col)` and, implicitly, at `(col, row)`.
    pub fn push(&mut self, row: usize, col: usize, value: f64) {
        if value == 0.0 {
            return;
        }
        let (r, c) = if row <= col { (row, col) } else { (col, row) };
        self.entries.push((r, c, value));
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    /// Merges duplicate coordinates and drops exact zeros.
    pub fn compress(&mut self) {
        self.entries.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut out: Vec<(usize, usize, f64)> = Vec::with_capacity(self.entries.len());
        for &(r, c, v) in &self.entries {
            match out.last_mut() {
                Some(last) if last.0 == r && last.1 == c => last.2 += v,
                _ => out.push((r, c, v)),
            }
        }
        out.retain(|e| e.2 != 0.0);
        self.entries = out;
    }

    pub fn to_dense(&self, dim: usize) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(dim, dim);
        for &(r, c, v) in &self.entries {
            m[(r, c)] += v;
            if r != c {
                m[(c, r)] += v;
            }
        }
        m
    }

    /// Frobenius inner product `<self, x>` with a dense symmetric matrix.
    pub fn dot_dense(&self, x: &DMatrix<f64>) -> f64 {
        self.entries
            .iter()
            .map(|&(r, c, v)| if r == c { v * x[(r, c)] } else { 2.0 * v * x[(r, c)] })
            .sum()
    }

    /// `<self, x>` for a diagonal block stored as a vector.
    pub fn dot_diag(&self, x: &DVector<f64>) -> f64 {
        self.entries
            .iter()
            .filter(|e| e.0 == e.1)
            .map(|&(r, _, v)| v * x[r])
            .sum()
    }

    /// Adds `alpha * self` into a dense symmetric matrix.
    pub fn axpy_dense(&self, alpha: f64, out: &mut DMatrix<f64>) {
        for &(r, c, v) in &self.entries {
            out[(r, c)] += alpha * v;
            if r != c {
                out[(c, r)] += alpha * v;
            }
        }
    }

    pub fn axpy_diag(&self, alpha: f64, out: &mut DVector<f64>) {
        for &(r, c, v) in &self.entries {
            if r == c {
                out[r] += alpha * v;
            }
        }
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.entries
            .iter()
            .map(|&(r, c, v)| if r == c { v * v } else { 2.0 * v * v })
            .sum::<f64>()
            .sqrt()
    }
}

/// One equality row `sum_j <A_ij, X_j> = b_i`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Constraint {
    /// `(block index, coefficient matrix)`; blocks not listed have zero coefficient.
    pub coeffs: Vec<(usize, SparseSym)>,
    pub rhs: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SdpProblem {
    pub blocks: Vec<BlockSpec>,
    /// Cost matrix per block (same length as `blocks`).
    pub cost: Vec<SparseSym>,
    pub constraints: Vec<Constraint>,
}

impl SdpProblem {
    pub fn new(blocks: Vec<BlockSpec>) -> Self {
        let cost = vec![SparseSym::new(); blocks.len()];
        Self {
            blocks,
            cost,
            constraints: Vec::new(),
        }
    }

    pub fn num_constraints(&self) -> usize {
        self.constraints.len()
    }

    /// Sum of block dimensions (the "n" of the barrier parameter).
    pub fn total_dim(&self) -> usize {
        self.blocks.iter().map(|b| b.dim).sum()
    }

    pub fn validate(&self) -> Result<(), SdpError> {
        if self.cost.len() != self.blocks.len() {
            return Err(SdpError::Structure(format!(
                "{} cost matrices for {} blocks",
                self.cost.len(),
                self.blocks.len()
            )));
        }
        for (j, b) in self.blocks.iter().enumerate() {
            if b.dim == 0 {
                return Err(SdpError::Structure(format!("block `{}` has dimension 0", b.name)));
            }
            check_sym(&self.cost[j], b, "cost")?;
        }
        for (i, con) in self.constraints.iter().enumerate() {
            if !con.rhs.is_finite() {
                return Err(SdpError::Structure(format!("constraint {i} has non-finite rhs")));
            }
            for (j, a) in &con.coeffs {
                let b = self.blocks.get(*j).ok_or_else(|| {
                    SdpError::Structure(format!("constraint {i} references block {j}"))
                })?;
                check_sym(a, b, "constraint")?;
            }
        }
        Ok(())
    }

    /// Writes the problem in SDPA sparse format.
    ///
    /// Matrix 0 is the cost `C`, matrix `i` is `A_i`; the objective vector
    /// line holds `b`. Diagonal blocks get a negative size, as SDPA expects.
    pub fn write_sdpa<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "\"extendicap problem dump\"")?;
        writeln!(w, "{}", self.constraints.len())?;
        writeln!(w, "{}", self.blocks.len())?;
        let sizes: Vec<String> = self
            .blocks
            .iter()
            .map(|b| match b.kind {
                BlockKind::Psd => b.dim.to_string(),
                BlockKind::Diagonal => format!("-{}", b.dim),
            })
            .collect();
        writeln!(w, "{}", sizes.join(" "))?;
        let mut line = String::new();
        for (i, c) in self.constraints.iter().enumerate() {
            if i > 0 {
                line.push(' ');
            }
            write!(line, "{:e}", c.rhs).unwrap();
        }
        writeln!(w, "{line}")?;
        for (j, cj) in self.cost.iter().enumerate() {
            for &(r, c, v) in &cj.entries {
                writeln!(w, "0 {} {} {} {:e}", j + 1, r + 1, c + 1, v)?;
            }
        }
        for (i, con) in self.constraints.iter().enumerate() {
            for (j, a) in &con.coeffs {
                for &(r, c, v) in &a.entries {
                    writeln!(w, "{} {} {} {} {:e}", i + 1, j + 1, r + 1, c + 1, v)?;
                }
            }
        }
        Ok(())
    }

    /// Reads a problem written by [`SdpProblem::write_sdpa`].
    pub fn read_sdpa<R: BufRead>(r: R) -> Result<Self, SdpError> {
        let mut lines = r
            .lines()
            .map(|l| l.map_err(|e| SdpError::Parse(e.to_string())))
            .filter(|l| match l {
                Ok(s) => {
                    let t = s.trim();
                    !(t.is_empty() || t.starts_with('"') || t.starts_with('*'))
                }
                Err(_) => true,
            });
        let mut next = || -> Result<String, SdpError> {
            lines
                .next()
                .ok_or_else(|| SdpError::Parse("unexpected end of input".into()))?
        };
        let parse_usize = |s: &str| -> Result<usize, SdpError> {
            s.trim().parse().map_err(|_| SdpError::Parse(format!("bad integer `{s}`")))
        };
        let m = parse_usize(&next()?)?;
        let nblocks = parse_usize(&next()?)?;
        let sizes_line = next()?;
        let mut blocks = Vec::with_capacity(nblocks);
        for (j, tok) in sizes_line.split_whitespace().enumerate() {
            let v: i64 = tok
                .parse()
                .map_err(|_| SdpError::Parse(format!("bad block size `{tok}`")))?;
            let (kind, dim) = if v < 0 {
                (BlockKind::Diagonal, (-v) as usize)
            } else {
                (BlockKind::Psd, v as usize)
            };
            blocks.push(BlockSpec {
                name: format!("block{}", j + 1),
                kind,
                dim,
            });
        }
        if blocks.len() != nblocks {
            return Err(SdpError::Parse("block size count mismatch".into()));
        }
        let mut p = SdpProblem::new(blocks);
        p.constraints = vec![Constraint::default(); m];
        if m > 0 {
            let rhs_line = next()?;
            let vals: Vec<f64> = rhs_line
                .split_whitespace()
                .map(|t| t.parse().map_err(|_| SdpError::Parse(format!("bad float `{t}`"))))
                .collect::<Result<_, _>>()?;
            if vals.len() != m {
                return Err(SdpError::Parse("rhs length mismatch".into()));
            }
            for (c, v) in p.constraints.iter_mut().zip(vals) {
                c.rhs = v;
            }
        } else {
            let _ = next();
        }
        while let Ok(line) = next() {
            let toks: Vec<&str> = line.split_whitespace().collect();
            if toks.len() != 5 {
                return Err(SdpError::Parse(format!("bad entry line `{line}`")));
            }
            let mat = parse_usize(toks[0])?;
            let blk = parse_usize(toks[1])?
                .checked_sub(1)
                .ok_or_else(|| SdpError::Parse("block index 0".into()))?;
            let row = parse_usize(toks[2])? - 1;
            let col = parse_usize(toks[3])? - 1;
            let val: f64 = toks[4]
                .parse()
                .map_err(|_| SdpError::Parse(format!("bad float `{}`", toks[4])))?;
            if mat == 0 {
                p.cost[blk].push(row, col, val);
            } else {
                let con = p
                    .constraints
                    .get_mut(mat - 1)
                    .ok_or_else(|| SdpError::Parse(format!("matrix index {mat} out of range")))?;
                match con.coeffs.iter_mut().find(|(j, _)| *j == blk) {
                    Some((_, a)) => a.push(row, col, val),
                    None => {
                        let mut a = SparseSym::new();
                        a.push(row, col, val);
                        con.coeffs.push((blk, a));
                    }
                }
            }
        }
        p.validate()?;
        Ok(p)
    }
}

fn check_sym(a: &SparseSym, b: &BlockSpec, what: &str) -> Result<(), SdpError> {
    for &(r, c, v) in &a.entries {
        if r > c || c >= b.dim {
            return Err(SdpError::Structure(format!(
                "{what} entry ({r},{c}) invalid for block `{}` of dimension {}",
                b.name, b.dim
            )));
        }
        if b.kind == BlockKind::Diagonal && r != c {
            return Err(SdpError::Structure(format!(
                "{what} has off-diagonal entry ({r},{c}) in diagonal block `{}`",
                b.name
            )));
        }
        if !v.is_finite() {
            return Err(SdpError::Structure(format!("{what} has non-finite entry")));
        }
    }
    Ok(())
}
