//! Semidefinite upper bound on the one-shot classical capacity of a channel,
//! with the test measurement relaxed to a k-(PPT-)extendible one. `k = 1`
//! with partial transposes gives the plain PPT bound.

use std::time::Instant;

use extendicap_sdp::{LmiBuilder, SolveStatus, SolverOptions};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::affine::HermExpr;
use crate::channels::{Channel, DEFAULT_DIM_CAP};
use crate::error::{Error, Result};
use crate::labels::{covariant_family, tuple_index, tuples, Covariance, FamilySpec};
use crate::qlinalg::{
    conjugate_by_permutation, hermitian_eigenvalues, min_eigenvalue, partial_trace, partial_transpose,
    permutations, tensor, CMat, Operator, SystemLayout, C64,
};

/// Largest admissible error probability; the bound diverges as `eps -> 1`.
pub const MAX_EPSILON: f64 = 1.0 - 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct CapacityQuery {
    pub channel: Channel,
    pub epsilon: f64,
    pub k: usize,
    pub ppt: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CapacityOptions {
    pub covariance: Covariance,
    pub solver: SolverOptions,
    pub dim_cap: usize,
}

impl Default for CapacityOptions {
    fn default() -> Self {
        Self { covariance: Covariance::Explicit, solver: SolverOptions::default(), dim_cap: DEFAULT_DIM_CAP }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConstraintFamily {
    /// `Tr rho = 1`.
    StateTrace,
    /// `sum_y Q^y = rho (x) I`.
    Completeness,
    /// `Q^y >= 0`.
    Positivity,
    /// `W^pi(Q^{y o pi}) = Q^y`.
    Covariance,
    /// `T_{B_1..B_i}(Q^y) >= 0`.
    PartialTranspose,
    /// `sum_{y_2..} Tr_A Q^{(0,..)} <= lambda I`.
    EigenvalueCap,
    /// `sum_{y_k} Tr_A Q = (1/|B|) sum_{y_k} Tr_{A B_k} Q (x) I_{B_k}`.
    NonSignaling,
    /// Success probability on the channel's Choi operator at least `1 - eps`.
    TypeOne,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConstraintKind {
    Equality,
    Psd,
    ScalarGe,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub family: ConstraintFamily,
    pub kind: ConstraintKind,
    /// Outcome tuple the constraint is attached to, if any.
    pub label: Option<Vec<usize>>,
    /// Permutation for covariance rows, or prefix length for partial transposes.
    pub detail: Vec<usize>,
    /// Matrix dimension of the constraint (1 for scalars).
    pub dim: usize,
}

/// Built program together with the handles needed to read a solution back.
pub struct CapacityProgram {
    pub program: extendicap_sdp::LmiProgram,
    pub manifest: Vec<ManifestEntry>,
    pub num_matrix_variables: usize,
    pub num_scalar_variables: usize,
    lambda: extendicap_sdp::VarId,
    rho: HermExpr,
    q: Vec<(Vec<usize>, HermExpr)>,
    layout: SystemLayout,
}

impl CapacityProgram {
    pub fn layout(&self) -> &SystemLayout {
        &self.layout
    }

    pub fn count(&self, family: ConstraintFamily) -> usize {
        self.manifest.iter().filter(|e| e.family == family).count()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CapacityWitness {
    pub lambda: f64,
    pub rho: Operator,
    /// `Q^{y_1^k}` on `A B1 .. Bk`.
    pub q: Vec<(Vec<usize>, Operator)>,
}

/// Violations of each constraint at a candidate point, computed from the
/// operators alone.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CapacityResiduals {
    pub state_trace: f64,
    pub completeness: f64,
    pub covariance: f64,
    pub min_eigenvalue: f64,
    pub min_ppt_eigenvalue: Option<f64>,
    /// Smallest eigenvalue of `lambda I - sum Tr_A Q^{(0,..)}`.
    pub cap_margin: f64,
    pub non_signaling: f64,
    /// Success probability minus `1 - eps`.
    pub type_one_margin: f64,
}

impl CapacityResiduals {
    pub fn max_violation(&self) -> f64 {
        let mut v = self.state_trace.max(self.completeness).max(self.covariance).max(self.non_signaling);
        v = v.max(-self.min_eigenvalue).max(-self.cap_margin).max(-self.type_one_margin);
        if let Some(p) = self.min_ppt_eigenvalue {
            v = v.max(-p);
        }
        v.max(0.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundResult {
    pub lambda_star: f64,
    /// `-log2 lambda_star`.
    pub bound_bits: f64,
    /// Lower bound on the optimal `lambda` certified by the solver's other side.
    pub lambda_lower: f64,
    pub status: SolveStatus,
    pub gap: f64,
    pub iterations: usize,
    pub wall_ms: u128,
    pub witness: CapacityWitness,
    pub residuals: CapacityResiduals,
}

impl BoundResult {
    /// Whether the solver converged and the witness satisfies every constraint to `1e-6`.
    pub fn reliable(&self) -> bool {
        self.status == SolveStatus::Optimal && self.residuals.max_violation() <= 1e-6
    }
}

fn ext_layout(din: usize, dout: usize, k: usize) -> SystemLayout {
    let mut subs = vec![("A".to_string(), din)];
    subs.extend((1..=k).map(|i| (format!("B{i}"), dout)));
    SystemLayout::new(subs).expect("distinct labels")
}

fn b_labels(k: usize) -> Vec<String> {
    (1..=k).map(|i| format!("B{i}")).collect()
}

fn check_query(q: &CapacityQuery, dim_cap: usize) -> Result<()> {
    if !(q.epsilon.is_finite() && q.epsilon >= 0.0 && q.epsilon < MAX_EPSILON) {
        return Err(Error::InvalidArgument(format!("epsilon {} outside [0, 1 - 1e-9)", q.epsilon)));
    }
    if q.k == 0 {
        return Err(Error::InvalidArgument("k must be at least 1".into()));
    }
    let total = q
        .channel
        .dim_out()
        .checked_pow(q.k as u32)
        .and_then(|v| v.checked_mul(q.channel.dim_in()))
        .unwrap_or(usize::MAX);
    if total > dim_cap {
        return Err(Error::DimensionCap { dim: total, cap: dim_cap });
    }
    Ok(())
}

/// `Gamma_{A B1} (x) I_{B2..Bk} / |B|^{k-1}`.
fn success_operator(ch: &Channel, k: usize) -> Result<Operator> {
    let gamma = ch.choi().relabel(&["A", "B1"])?;
    if k == 1 {
        return Ok(gamma);
    }
    let rest = SystemLayout::new((2..=k).map(|i| (format!("B{i}"), ch.dim_out())))?;
    Ok(tensor(&gamma, &Operator::identity(rest))?.scale(1.0 / (ch.dim_out() as f64).powi(k as i32 - 1)))
}

pub fn build_capacity_sdp(q: &CapacityQuery, opts: &CapacityOptions) -> Result<CapacityProgram> {
    check_query(q, opts.dim_cap)?;
    let (din, dout, k) = (q.channel.dim_in(), q.channel.dim_out(), q.k);
    let layout = ext_layout(din, dout, k);
    let bl = b_labels(k);
    let blr: Vec<&str> = bl.iter().map(|s| s.as_str()).collect();
    let blayout = SystemLayout::new(bl.iter().map(|l| (l.clone(), dout)))?;
    let real = q.channel.is_real();
    let mut manifest = Vec::new();
    let entry = |family, kind, label: Option<&Vec<usize>>, detail: Vec<usize>, dim| ManifestEntry {
        family,
        kind,
        label: label.cloned(),
        detail,
        dim,
    };

    let mut b = LmiBuilder::new();
    let lambda = b.add_var("lambda");
    b.objective(lambda, 1.0);
    let rho = HermExpr::variable(&mut b, SystemLayout::single("A", din), "rho", real);
    let tr = rho.trace();
    b.add_equality(&tr.real_terms(), 1.0);
    manifest.push(entry(ConstraintFamily::StateTrace, ConstraintKind::Equality, None, vec![], 1));

    let family = covariant_family(
        &mut b,
        &FamilySpec { layout: &layout, blocks: &blr, outcomes: 2, real, covariance: opts.covariance, name: "Q" },
    )?;
    let qs = &family.exprs;
    for (y, pi) in &family.relations {
        manifest.push(entry(
            ConstraintFamily::Covariance,
            ConstraintKind::Equality,
            Some(y),
            pi.clone(),
            layout.total_dim(),
        ));
    }

    let mut sum = HermExpr::zero(layout.clone());
    for e in qs {
        sum.add_assign_scaled(e, 1.0)?;
    }
    let rho_ext = rho.tensor_identity(&blayout)?;
    sum.difference(&rho_ext)?.add_zero(&mut b);
    manifest.push(entry(ConstraintFamily::Completeness, ConstraintKind::Equality, None, vec![], layout.total_dim()));

    for (i, (y, e)) in family.tuples.iter().zip(qs).enumerate() {
        let tag: String = y.iter().map(|v| v.to_string()).collect();
        if family.independent[i] {
            e.add_psd(&mut b, &format!("Q^{tag}"));
            manifest.push(entry(ConstraintFamily::Positivity, ConstraintKind::Psd, Some(y), vec![], layout.total_dim()));
        }
        if q.ppt {
            for j in 1..=k {
                e.partial_transpose(&blr[..j])?.add_psd(&mut b, &format!("T_{j}(Q^{tag})"));
                manifest.push(entry(
                    ConstraintFamily::PartialTranspose,
                    ConstraintKind::Psd,
                    Some(y),
                    vec![j],
                    layout.total_dim(),
                ));
            }
        }
    }

    let mut head = HermExpr::zero(layout.clone());
    for (y, e) in family.tuples.iter().zip(qs) {
        if y[0] == 0 {
            head.add_assign_scaled(e, 1.0)?;
        }
    }
    let cap = HermExpr::scaled_identity(blayout.clone(), lambda, 1.0).difference(&head.partial_trace(&["A"])?)?;
    cap.add_psd(&mut b, "cap");
    manifest.push(entry(ConstraintFamily::EigenvalueCap, ConstraintKind::Psd, None, vec![], blayout.total_dim()));

    // For k = 1 this condition follows from completeness and the trace of rho.
    if k >= 2 {
        let last = blr[k - 1];
        let lb = SystemLayout::single(last, dout);
        for h in tuples(2, k - 1) {
            let mut acc = HermExpr::zero(layout.clone());
            for yk in 0..2 {
                let mut y = h.clone();
                y.push(yk);
                acc.add_assign_scaled(&qs[tuple_index(&y, 2)], 1.0)?;
            }
            let lhs = acc.partial_trace(&["A"])?;
            let rhs = lhs.partial_trace(&[last])?.tensor_identity(&lb)?.scaled(1.0 / dout as f64);
            lhs.difference(&rhs)?.add_zero(&mut b);
            manifest.push(entry(
                ConstraintFamily::NonSignaling,
                ConstraintKind::Equality,
                Some(&h),
                vec![],
                blayout.total_dim(),
            ));
        }
    }

    let omega = success_operator(&q.channel, k)?;
    let succ = head.trace_with(omega.matrix());
    b.add_scalar_ge(&succ.real_terms(), succ.constant.re - (1.0 - q.epsilon));
    manifest.push(entry(ConstraintFamily::TypeOne, ConstraintKind::ScalarGe, None, vec![], 1));

    let program = b.build()?;
    let num_matrix_variables = 1 + family.independent.iter().filter(|v| **v).count();
    Ok(CapacityProgram {
        program,
        manifest,
        num_matrix_variables,
        num_scalar_variables: b.num_vars(),
        lambda,
        rho,
        q: family.tuples.iter().cloned().zip(qs.iter().cloned()).collect(),
        layout,
    })
}

/// Checks every constraint at a candidate point without reference to the program.
pub fn recheck_capacity_witness(q: &CapacityQuery, w: &CapacityWitness) -> Result<CapacityResiduals> {
    let (din, dout, k) = (q.channel.dim_in(), q.channel.dim_out(), q.k);
    let layout = ext_layout(din, dout, k);
    let bl = b_labels(k);
    let blr: Vec<&str> = bl.iter().map(|s| s.as_str()).collect();
    let blayout = SystemLayout::new(bl.iter().map(|l| (l.clone(), dout)))?;
    let all = tuples(2, k);
    if w.q.len() != all.len() || w.q.iter().zip(&all).any(|((y, op), t)| y != t || op.layout() != &layout) {
        return Err(Error::InvalidArgument("witness must list every tuple in order on A B1..Bk".into()));
    }
    let ops: Vec<&Operator> = w.q.iter().map(|(_, o)| o).collect();
    let n = layout.total_dim();
    let norm = |m: &CMat| hermitian_eigenvalues(m).iter().fold(0.0f64, |a, v| a.max(v.abs()));

    let state_trace = (w.rho.trace() - C64::new(1.0, 0.0)).norm();
    let mut sum = CMat::zeros(n, n);
    for o in &ops {
        sum += o.matrix();
    }
    let target = tensor(&w.rho.relabel(&["A"])?, &Operator::identity(blayout.clone()))?;
    let completeness = norm(&(sum - target.matrix()));

    let mut covariance: f64 = 0.0;
    for pi in permutations(k).iter().skip(1) {
        for (i, y) in all.iter().enumerate() {
            let src: Vec<usize> = pi.iter().map(|&s| y[s]).collect();
            let moved = conjugate_by_permutation(ops[tuple_index(&src, 2)], &blr, pi)?;
            covariance = covariance.max(norm(&(moved.matrix() - ops[i].matrix())));
        }
    }

    let min_eig = ops.iter().map(|o| min_eigenvalue(o.matrix())).fold(f64::INFINITY, f64::min);
    let min_ppt = if q.ppt {
        let mut m = f64::INFINITY;
        for o in &ops {
            for j in 1..=k {
                m = m.min(min_eigenvalue(partial_transpose(o, &blr[..j])?.matrix()));
            }
        }
        Some(m)
    } else {
        None
    };

    let mut head = Operator::zeros(layout.clone());
    for (y, o) in all.iter().zip(&ops) {
        if y[0] == 0 {
            head = head.add(o)?;
        }
    }
    let marg = partial_trace(&head, &["A"])?;
    let db = blayout.total_dim();
    let cap_margin = min_eigenvalue(&(CMat::identity(db, db) * C64::new(w.lambda, 0.0) - marg.matrix()));

    let mut non_signaling: f64 = 0.0;
    if k >= 2 {
        let last = blr[k - 1];
        let ib = Operator::identity(SystemLayout::single(last, dout));
        for h in tuples(2, k - 1) {
            let mut acc = Operator::zeros(layout.clone());
            for yk in 0..2 {
                let mut y = h.clone();
                y.push(yk);
                acc = acc.add(ops[tuple_index(&y, 2)])?;
            }
            let lhs = partial_trace(&acc, &["A"])?;
            let rhs = tensor(&partial_trace(&lhs, &[last])?, &ib)?.scale(1.0 / dout as f64);
            non_signaling = non_signaling.max(norm(&(lhs.matrix() - rhs.matrix())));
        }
    }

    let omega = success_operator(&q.channel, k)?;
    let success = head.inner_trace(&omega)?.re;
    Ok(CapacityResiduals {
        state_trace,
        completeness,
        covariance,
        min_eigenvalue: min_eig,
        min_ppt_eigenvalue: min_ppt,
        cap_margin,
        non_signaling,
        type_one_margin: success - (1.0 - q.epsilon),
    })
}

pub fn capacity_bound(q: &CapacityQuery, opts: &CapacityOptions) -> Result<BoundResult> {
    let start = Instant::now();
    let prog = build_capacity_sdp(q, opts)?;
    let sol = prog.program.solve(&opts.solver)?;
    let x = &sol.x;
    let lambda = x[prog.lambda.0];
    let rho = Operator::new(SystemLayout::single("A", q.channel.dim_in()), prog.rho.eval(x))?.hermitian_part();
    let qops = prog
        .q
        .iter()
        .map(|(y, e)| Ok((y.clone(), Operator::new(prog.layout.clone(), e.eval(x))?.hermitian_part())))
        .collect::<Result<Vec<_>>>()?;
    let witness = CapacityWitness { lambda, rho, q: qops };
    let residuals = recheck_capacity_witness(q, &witness)?;
    Ok(BoundResult {
        lambda_star: lambda,
        bound_bits: -lambda.log2(),
        lambda_lower: sol.dual_bound,
        status: sol.status,
        gap: sol.sdp.relative_gap,
        iterations: sol.sdp.iterations,
        wall_ms: start.elapsed().as_millis(),
        witness,
        residuals,
    })
}

#[derive(Debug, Clone)]
pub struct CurveRow {
    pub epsilon: f64,
    pub k: usize,
    pub ppt: bool,
    /// Per-cell failures are kept as messages so one bad cell does not abort the sweep.
    pub result: std::result::Result<BoundResult, String>,
}

/// One row per `(eps, config)` in grid-major order; cells are solved in parallel.
pub fn bound_curve(
    channel: &Channel,
    eps_grid: &[f64],
    configs: &[(usize, bool)],
    opts: &CapacityOptions,
) -> Vec<CurveRow> {
    let cells: Vec<(f64, usize, bool)> =
        eps_grid.iter().flat_map(|&e| configs.iter().map(move |&(k, p)| (e, k, p))).collect();
    cells
        .par_iter()
        .map(|&(epsilon, k, ppt)| {
            let q = CapacityQuery { channel: channel.clone(), epsilon, k, ppt };
            CurveRow { epsilon, k, ppt, result: capacity_bound(&q, opts).map_err(|e| e.to_string()) }
        })
        .collect()
}

pub const CSV_HEADER: &str = "eps,k,ppt,lambda,bound_bits,status,gap,iterations,wall_ms";

impl CurveRow {
    /// CSV line matching [`CSV_HEADER`]. Failed cells carry `error` as status.
    pub fn csv_fields(&self, include_wall: bool) -> Vec<String> {
        let mut f = vec![self.epsilon.to_string(), self.k.to_string(), self.ppt.to_string()];
        match &self.result {
            Ok(r) => {
                f.push(format!("{:.10}", r.lambda_star));
                f.push(format!("{:.10}", r.bound_bits));
                f.push(r.status.as_str().to_string());
                f.push(format!("{:.3e}", r.gap));
                f.push(r.iterations.to_string());
                f.push(if include_wall { r.wall_ms.to_string() } else { "0".into() });
            }
            Err(_) => {
                f.extend(["", "", "error", "", "", ""].map(String::from));
            }
        }
        f
    }
}
