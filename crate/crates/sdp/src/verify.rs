//! Recomputes residuals of a candidate solution directly from the problem data.

use nalgebra::DVector;

use crate::error::SdpError;
use crate::problem::{BlockKind, SdpProblem};
use crate::solver::{apply_a, apply_at, apply_cost, cost_blocks, BlockValue, SdpSolution};

#[derive(Debug, Clone, PartialEq)]
pub struct ResidualReport {
    /// `max_i |b_i - A(X)_i|`.
    pub primal_residual: f64,
    pub primal_residual_rel: f64,
    /// Frobenius norm of `C - Z - A*(y)`.
    pub dual_residual: f64,
    pub dual_residual_rel: f64,
    pub min_eig_x: f64,
    pub min_eig_z: f64,
    pub primal_objective: f64,
    pub dual_objective: f64,
    pub gap: f64,
    pub relative_gap: f64,
    /// `<X, Z>`, the complementarity measure.
    pub complementarity: f64,
}

impl ResidualReport {
    /// Dual objective does not exceed the primal one beyond round-off.
    pub fn weak_duality_holds(&self) -> bool {
        self.dual_objective <= self.primal_objective + 1e-7 * (1.0 + self.primal_objective.abs())
    }

    pub fn max_residual(&self) -> f64 {
        self.primal_residual.max(self.dual_residual)
    }
}

fn check_block(kind: BlockKind, dim: usize, v: &BlockValue, what: &str) -> Result<(), SdpError> {
    let ok = match (kind, v) {
        (BlockKind::Psd, BlockValue::Dense(m)) => m.nrows() == dim && m.ncols() == dim,
        (BlockKind::Diagonal, BlockValue::Diagonal(d)) => d.len() == dim,
        _ => false,
    };
    if ok {
        Ok(())
    } else {
        Err(SdpError::SolutionMismatch(format!("{what} block does not match dimension {dim}")))
    }
}

fn min_eig(v: &BlockValue) -> f64 {
    match v {
        BlockValue::Dense(m) => {
            if m.nrows() == 0 {
                return f64::INFINITY;
            }
            let s = (m + m.transpose()) * 0.5;
            s.symmetric_eigenvalues().min()
        }
        BlockValue::Diagonal(d) => d.iter().copied().fold(f64::INFINITY, f64::min),
    }
}

pub fn verify_solution(p: &SdpProblem, s: &SdpSolution) -> Result<ResidualReport, SdpError> {
    p.validate()?;
    if s.x.len() != p.blocks.len() || s.z.len() != p.blocks.len() {
        return Err(SdpError::SolutionMismatch(format!(
            "expected {} blocks, got {} primal and {} dual",
            p.blocks.len(),
            s.x.len(),
            s.z.len()
        )));
    }
    if s.y.len() != p.constraints.len() {
        return Err(SdpError::SolutionMismatch(format!(
            "expected {} multipliers, got {}",
            p.constraints.len(),
            s.y.len()
        )));
    }
    for (j, blk) in p.blocks.iter().enumerate() {
        check_block(blk.kind, blk.dim, &s.x[j], "primal")?;
        check_block(blk.kind, blk.dim, &s.z[j], "dual slack")?;
    }

    let b = DVector::from_iterator(p.constraints.len(), p.constraints.iter().map(|c| c.rhs));
    let rp = &b - apply_a(p, &s.x);
    let primal_residual = rp.amax();

    let c = cost_blocks(p);
    let aty = apply_at(p, &s.y);
    let mut rd_sq = 0.0;
    let mut c_sq = 0.0;
    for j in 0..p.blocks.len() {
        let cd = c[j].to_dense();
        let r = &cd - s.z[j].to_dense() - aty[j].to_dense();
        rd_sq += r.norm_squared();
        c_sq += cd.norm_squared();
    }
    let dual_residual = rd_sq.sqrt();

    let primal_objective = apply_cost(p, &s.x);
    let dual_objective = b.dot(&s.y);
    let complementarity = s
        .x
        .iter()
        .zip(&s.z)
        .map(|(x, z)| x.to_dense().dot(&z.to_dense()))
        .sum();
    let gap = primal_objective - dual_objective;
    Ok(ResidualReport {
        primal_residual,
        primal_residual_rel: primal_residual / (1.0 + b.amax()),
        dual_residual,
        dual_residual_rel: dual_residual / (1.0 + c_sq.sqrt()),
        min_eig_x: s.x.iter().map(min_eig).fold(f64::INFINITY, f64::min),
        min_eig_z: s.z.iter().map(min_eig).fold(f64::INFINITY, f64::min),
        primal_objective,
        dual_objective,
        gap,
        relative_gap: gap.abs() / (1.0 + primal_objective.abs() + dual_objective.abs()),
        complementarity,
    })
}
