//! POVMs on bipartite systems, one-way LOCC constructions, and the
//! k-extendibility / k-PPT-extendibility feasibility programs.

use extendicap_sdp::{LmiBuilder, SolveStatus, SolverOptions};

use crate::affine::HermExpr;
use crate::channels::DEFAULT_DIM_CAP;
use crate::error::{Error, Result};
use crate::labels::{covariant_family, tuple_index, tuples, Covariance, FamilySpec};
use crate::qlinalg::{
    conjugate_by_permutation, hermitian_eigenvalues, max_entangled, min_eigenvalue, partial_trace,
    partial_transpose, permutations, tensor, tensor_all, CMat, Operator, SystemLayout, C64,
};

/// Threshold on the optimal slack `t` above which a program counts as feasible.
pub const FEASIBILITY_TOL: f64 = 1e-7;

#[derive(Debug, Clone, PartialEq)]
pub struct Povm {
    layout: SystemLayout,
    outcomes: Vec<(Vec<usize>, Operator)>,
}

fn op_norm(m: &CMat) -> f64 {
    hermitian_eigenvalues(m).iter().fold(0.0, |a, v| a.max(v.abs()))
}

impl Povm {
    /// Validates positivity of every element and completeness to `1e-9`.
    pub fn new(layout: SystemLayout, outcomes: Vec<(Vec<usize>, Operator)>) -> Result<Self> {
        if outcomes.is_empty() {
            return Err(Error::InvalidArgument("a POVM needs at least one outcome".into()));
        }
        let n = layout.total_dim();
        let mut sum = CMat::zeros(n, n);
        for (i, (label, el)) in outcomes.iter().enumerate() {
            if el.layout() != &layout {
                return Err(Error::Layout(format!("element {label:?} has a different layout")));
            }
            if outcomes[..i].iter().any(|(l, _)| l == label) {
                return Err(Error::InvalidArgument(format!("duplicate outcome {label:?}")));
            }
            if !el.is_hermitian() {
                return Err(Error::NotHermitian { residual: el.hermiticity_residual() });
            }
            let lmin = min_eigenvalue(el.matrix());
            if lmin < -1e-9 * op_norm(el.matrix()).max(1.0) {
                return Err(Error::Validation {
                    what: format!("element {label:?} is not positive semidefinite"),
                    residual: -lmin,
                });
            }
            sum += el.matrix();
        }
        let resid = op_norm(&(sum - CMat::identity(n, n)));
        if resid > 1e-9 {
            return Err(Error::Validation { what: "elements do not sum to the identity".into(), residual: resid });
        }
        Ok(Self { layout, outcomes })
    }

    pub fn layout(&self) -> &SystemLayout {
        &self.layout
    }

    pub fn outcomes(&self) -> &[(Vec<usize>, Operator)] {
        &self.outcomes
    }

    pub fn len(&self) -> usize {
        self.outcomes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.outcomes.is_empty()
    }

    pub fn element(&self, label: &[usize]) -> Option<&Operator> {
        self.outcomes.iter().find(|(l, _)| l == label).map(|(_, e)| e)
    }

    pub fn elements(&self) -> impl Iterator<Item = &Operator> {
        self.outcomes.iter().map(|(_, e)| e)
    }

    fn is_real(&self) -> bool {
        self.elements().all(|e| e.matrix().iter().all(|v| v.im == 0.0))
    }
}

/// `P^y = sum_x E^x (x) F^{x,y}`; `f[i]` is the measurement applied after the
/// `i`-th outcome of `e`.
pub fn one_way_locc_povm(e: &Povm, f: &[Povm]) -> Result<Povm> {
    check_locc_inputs(e, f)?;
    let layout = e.layout.concat(&f[0].layout)?;
    let mut outcomes = Vec::new();
    for (label, _) in &f[0].outcomes {
        let mut acc = Operator::zeros(layout.clone());
        for ((_, ex), fx) in e.outcomes.iter().zip(f) {
            acc = acc.add(&tensor(ex, fx.element(label).unwrap())?)?;
        }
        outcomes.push((label.clone(), acc));
    }
    Povm::new(layout, outcomes)
}

fn check_locc_inputs(e: &Povm, f: &[Povm]) -> Result<()> {
    if f.len() != e.len() {
        return Err(Error::InvalidArgument(format!(
            "{} outcomes on the first system but {} conditional measurements",
            e.len(),
            f.len()
        )));
    }
    let labels: Vec<&Vec<usize>> = f[0].outcomes.iter().map(|(l, _)| l).collect();
    for fx in &f[1..] {
        if fx.layout != f[0].layout || fx.outcomes.iter().map(|(l, _)| l).ne(labels.iter().copied()) {
            return Err(Error::InvalidArgument(
                "conditional measurements must share layout and outcome labels".into(),
            ));
        }
    }
    Ok(())
}

fn extension_layout(da: usize, db: usize, k: usize) -> SystemLayout {
    let mut subs = vec![("A".to_string(), da)];
    subs.extend((1..=k).map(|i| (format!("B{i}"), db)));
    SystemLayout::new(subs).expect("distinct labels")
}

fn b_labels(k: usize) -> Vec<String> {
    (1..=k).map(|i| format!("B{i}")).collect()
}

/// The product extension `sum_x E^x (x) F^{x,y_1} (x) ... (x) F^{x,y_k}` of a
/// one-way LOCC POVM, on systems `A B1 .. Bk`.
pub fn one_way_locc_extension(e: &Povm, f: &[Povm], k: usize) -> Result<Vec<(Vec<usize>, Operator)>> {
    check_locc_inputs(e, f)?;
    let da = e.layout.total_dim();
    let db = f[0].layout.total_dim();
    let layout = extension_layout(da, db, k);
    let labels: Vec<Vec<usize>> = f[0].outcomes.iter().map(|(l, _)| l.clone()).collect();
    let mut out = Vec::new();
    for y in tuples(labels.len(), k) {
        let mut acc = CMat::zeros(layout.total_dim(), layout.total_dim());
        for ((_, ex), fx) in e.outcomes.iter().zip(f) {
            let mut m = ex.matrix().clone();
            for &yi in &y {
                m = m.kronecker(fx.element(&labels[yi]).unwrap().matrix());
            }
            acc += m;
        }
        let label: Vec<usize> = y.iter().flat_map(|&yi| labels[yi].iter().copied()).collect();
        out.push((label, Operator::new(layout.clone(), acc)?));
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoExtensionReport {
    /// `max_y || sum_{y'} G^{y,y'} - P^y (x) I_E ||_op`.
    pub marginal_residual: f64,
    /// `max_{y,y'} || F_BE G^{y,y'} F_BE - G^{y',y} ||_op`.
    pub swap_residual: f64,
}

impl TwoExtensionReport {
    pub fn max_residual(&self) -> f64 {
        self.marginal_residual.max(self.swap_residual)
    }
}

/// Checks a candidate two-extension. `g` lives on three systems (the third
/// isomorphic to the second) and its labels are concatenations `(y, y')`.
pub fn check_two_extension(p: &Povm, g: &Povm) -> Result<TwoExtensionReport> {
    let pd = p.layout.dims();
    let gd = g.layout.dims();
    if pd.len() != 2 || gd.len() != 3 || gd[0] != pd[0] || gd[1] != pd[1] || gd[2] != pd[1] {
        return Err(Error::Layout("extension must live on A B E with E isomorphic to B".into()));
    }
    let glayout = SystemLayout::new([("A", gd[0]), ("B", gd[1]), ("E", gd[2])])?;
    let lookup = |y: &[usize], yp: &[usize]| -> Result<Operator> {
        let label: Vec<usize> = y.iter().chain(yp).copied().collect();
        g.element(&label)
            .ok_or_else(|| Error::InvalidArgument(format!("extension lacks outcome {label:?}")))?
            .relabel(&["A", "B", "E"])
    };
    let ie = Operator::identity(SystemLayout::single("E", pd[1]));
    let mut marginal: f64 = 0.0;
    let mut swap: f64 = 0.0;
    for (y, py) in &p.outcomes {
        let mut acc = Operator::zeros(glayout.clone());
        for (yp, _) in &p.outcomes {
            let gyy = lookup(y, yp)?;
            acc = acc.add(&gyy)?;
            let swapped = conjugate_by_permutation(&gyy, &["B", "E"], &[1, 0])?;
            swap = swap.max(op_norm(&(swapped.matrix() - lookup(yp, y)?.matrix())));
        }
        let target = tensor(&py.relabel(&["A", "B"])?, &ie)?;
        marginal = marginal.max(op_norm(&(acc.matrix() - target.matrix())));
    }
    Ok(TwoExtensionReport { marginal_residual: marginal, swap_residual: swap })
}

/// `X^a Z^b` on `C^d`.
fn weyl(d: usize, a: usize, b: usize) -> CMat {
    let w = 2.0 * std::f64::consts::PI / d as f64;
    CMat::from_fn(d, d, |r, c| {
        if r == (c + a) % d {
            C64::from_polar(1.0, w * (b * c) as f64)
        } else {
            C64::new(0.0, 0.0)
        }
    })
}

/// Generalized Bell state `(X^a Z^b (x) I) Phi (X^a Z^b (x) I)^dagger`, `y = a d + b`.
pub fn bell_state(d: usize, y: usize) -> Operator {
    let u = weyl(d, y / d, y % d).kronecker(&CMat::identity(d, d));
    let phi = max_entangled(d);
    let m = &u * phi.matrix() * u.adjoint();
    Operator::new(phi.layout().clone(), m).expect("same layout")
}

/// The Bell measurement `{Phi^y}` on two qudits.
pub fn bell_povm(d: usize) -> Result<Povm> {
    if d < 2 {
        return Err(Error::InvalidArgument("Bell measurement needs d >= 2".into()));
    }
    let layout = SystemLayout::new([("A", d), ("B", d)])?;
    Povm::new(layout, (0..d * d).map(|y| (vec![y], bell_state(d, y))).collect())
}

/// `P^y = Phi^y / 2 + I / (2 d^2)` together with its two-extension
/// `G^{y,y'} = (Phi^y_AB (x) I_E + Phi^{y'}_AE (x) I_B) / (2 d^2)`.
pub fn bell_noise_povm(d: usize) -> Result<(Povm, Povm)> {
    if d < 2 {
        return Err(Error::InvalidArgument("Bell-noise POVM needs d >= 2".into()));
    }
    let n = d * d;
    let layout = SystemLayout::new([("A", d), ("B", d)])?;
    let noise = CMat::identity(n, n) * C64::new(0.5 / n as f64, 0.0);
    let p = Povm::new(
        layout,
        (0..n)
            .map(|y| {
                let m = bell_state(d, y).matrix() * C64::new(0.5, 0.0) + &noise;
                (vec![y], Operator::new(SystemLayout::new([("A", d), ("B", d)]).unwrap(), m).unwrap())
            })
            .collect(),
    )?;
    let glayout = SystemLayout::new([("A", d), ("B", d), ("E", d)])?;
    let ib = Operator::identity(SystemLayout::single("B", d));
    let ie = Operator::identity(SystemLayout::single("E", d));
    let scale = 1.0 / (2 * n) as f64;
    let ab: Vec<Operator> = (0..n).map(|y| tensor(&bell_state(d, y), &ie).unwrap()).collect();
    let ae: Vec<Operator> = (0..n)
        .map(|y| {
            let phi = bell_state(d, y).relabel(&["A", "E"]).unwrap();
            tensor(&phi, &ib).unwrap().permute_subsystems(&["A", "B", "E"]).unwrap()
        })
        .collect();
    let mut outcomes = Vec::new();
    for y in 0..n {
        for yp in 0..n {
            outcomes.push((vec![y, yp], ab[y].add(&ae[yp])?.scale(scale)));
        }
    }
    Ok((p, Povm::new(glayout, outcomes)?))
}

/// `|B|^3 |Y|^2 (|B||Y| + 1) sqrt(2 ln 2 |A|^3 / k)`: distance from any
/// k-extendible POVM to the one-way LOCC set.
pub fn definetti_deviation_bound(da: usize, db: usize, ny: usize, k: usize) -> Result<f64> {
    if da == 0 || db == 0 || ny == 0 || k < 2 {
        return Err(Error::InvalidArgument("dimensions must be positive and k >= 2".into()));
    }
    let (a, b, y) = (da as f64, db as f64, ny as f64);
    Ok(b.powi(3) * y * y * (b * y + 1.0) * (2.0 * std::f64::consts::LN_2 * a.powi(3) / k as f64).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExtendOptions {
    pub covariance: Covariance,
    pub solver: SolverOptions,
    pub dim_cap: usize,
}

impl Default for ExtendOptions {
    fn default() -> Self {
        Self { covariance: Covariance::Explicit, solver: SolverOptions::default(), dim_cap: DEFAULT_DIM_CAP }
    }
}

/// Largest violation of each extension condition, recomputed from the
/// operators alone.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WitnessResiduals {
    pub completeness: f64,
    pub marginal: f64,
    pub non_signaling: f64,
    pub covariance: f64,
    pub min_eigenvalue: f64,
    /// Smallest eigenvalue over all partial transposes `T_{B_1..B_i}`, when requested.
    pub min_ppt_eigenvalue: Option<f64>,
}

impl WitnessResiduals {
    pub fn max_violation(&self) -> f64 {
        let mut v = self.completeness.max(self.marginal).max(self.non_signaling).max(self.covariance);
        v = v.max(-self.min_eigenvalue);
        if let Some(p) = self.min_ppt_eigenvalue {
            v = v.max(-p);
        }
        v.max(0.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExtensionWitness {
    pub k: usize,
    pub ppt: bool,
    /// Elements on `A B1 .. Bk`, keyed by index tuples into the POVM's outcome list.
    pub elements: Vec<(Vec<usize>, Operator)>,
    pub residuals: WitnessResiduals,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExtendResult {
    pub feasible: bool,
    /// Optimal slack `t` in `G - t I >= 0`.
    pub slack: f64,
    /// Certified upper bound on the slack from the solver's other side.
    pub slack_upper: f64,
    pub status: SolveStatus,
    pub iterations: usize,
    pub witness: ExtensionWitness,
}

/// Recomputes every extension condition for candidate elements `g`, indexed
/// by tuples over the outcome positions of `p`, on layout `A B1 .. Bk`.
pub fn recheck_extension(p: &Povm, g: &[(Vec<usize>, Operator)], k: usize, ppt: bool) -> Result<WitnessResiduals> {
    let dims = p.layout.dims();
    if dims.len() != 2 {
        return Err(Error::Layout("POVM must be bipartite".into()));
    }
    let (da, db) = (dims[0], dims[1]);
    let ny = p.len();
    let layout = extension_layout(da, db, k);
    let bl = b_labels(k);
    let blr: Vec<&str> = bl.iter().map(|s| s.as_str()).collect();
    let all = tuples(ny, k);
    let mut elems: Vec<Option<&Operator>> = vec![None; all.len()];
    for (y, op) in g {
        if y.len() != k || y.iter().any(|&v| v >= ny) || op.layout() != &layout {
            return Err(Error::InvalidArgument(format!("malformed witness element {y:?}")));
        }
        elems[tuple_index(y, ny)] = Some(op);
    }
    let elems: Vec<&Operator> = elems
        .into_iter()
        .collect::<Option<Vec<_>>>()
        .ok_or_else(|| Error::InvalidArgument("witness lacks some outcome tuples".into()))?;
    let n = layout.total_dim();

    let mut sum = CMat::zeros(n, n);
    for e in &elems {
        sum += e.matrix();
    }
    let completeness = op_norm(&(sum - CMat::identity(n, n)));

    let rest = SystemLayout::new(bl[1..].iter().map(|l| (l.clone(), db)))?;
    let irest = Operator::identity(rest);
    let mut marginal: f64 = 0.0;
    for (y1, (_, py)) in p.outcomes.iter().enumerate() {
        let mut acc = CMat::zeros(n, n);
        for (y, e) in all.iter().zip(&elems) {
            if y[0] == y1 {
                acc += e.matrix();
            }
        }
        let target = if k == 1 {
            py.matrix().clone()
        } else {
            tensor(&py.relabel(&["A", "B1"])?, &irest)?.into_matrix()
        };
        marginal = marginal.max(op_norm(&(acc - target)));
    }

    let mut non_signaling: f64 = 0.0;
    if k >= 2 {
        let last = blr[k - 1];
        let ib = Operator::identity(SystemLayout::single(last, db));
        for head in tuples(ny, k - 1) {
            let mut lhs: Option<Operator> = None;
            for yk in 0..ny {
                let mut y = head.clone();
                y.push(yk);
                let t = partial_trace(elems[tuple_index(&y, ny)], &["A"])?;
                lhs = Some(match lhs {
                    None => t,
                    Some(acc) => acc.add(&t)?,
                });
            }
            let lhs = lhs.unwrap();
            let rhs = tensor(&partial_trace(&lhs, &[last])?, &ib)?.scale(1.0 / db as f64);
            non_signaling = non_signaling.max(op_norm(&(lhs.matrix() - rhs.matrix())));
        }
    }

    let mut covariance: f64 = 0.0;
    for pi in permutations(k).iter().skip(1) {
        for (i, y) in all.iter().enumerate() {
            let src: Vec<usize> = pi.iter().map(|&s| y[s]).collect();
            let moved = conjugate_by_permutation(elems[tuple_index(&src, ny)], &blr, pi)?;
            covariance = covariance.max(op_norm(&(moved.matrix() - elems[i].matrix())));
        }
    }

    let min_eig = elems.iter().map(|e| min_eigenvalue(e.matrix())).fold(f64::INFINITY, f64::min);
    let min_ppt = if ppt {
        let mut m = f64::INFINITY;
        for e in &elems {
            for i in 1..=k {
                m = m.min(min_eigenvalue(partial_transpose(e, &blr[..i])?.matrix()));
            }
        }
        Some(m)
    } else {
        None
    };
    Ok(WitnessResiduals {
        completeness,
        marginal,
        non_signaling,
        covariance,
        min_eigenvalue: min_eig,
        min_ppt_eigenvalue: min_ppt,
    })
}

pub fn is_k_extendible(p: &Povm, k: usize, opts: &ExtendOptions) -> Result<ExtendResult> {
    extension_program(p, k, false, opts)
}

pub fn is_k_ppt_extendible(p: &Povm, k: usize, opts: &ExtendOptions) -> Result<ExtendResult> {
    extension_program(p, k, true, opts)
}

/// Maximizes `t` subject to `G^y - t I >= 0` (and the partial-transpose
/// analogues) together with the extension equalities.
fn extension_program(p: &Povm, k: usize, ppt: bool, opts: &ExtendOptions) -> Result<ExtendResult> {
    let dims = p.layout.dims();
    if dims.len() != 2 {
        return Err(Error::Layout("extendibility is defined for bipartite POVMs".into()));
    }
    if k == 0 {
        return Err(Error::InvalidArgument("k must be at least 1".into()));
    }
    let (da, db) = (dims[0], dims[1]);
    let total = db.checked_pow(k as u32).and_then(|v| v.checked_mul(da)).unwrap_or(usize::MAX);
    if total > opts.dim_cap {
        return Err(Error::DimensionCap { dim: total, cap: opts.dim_cap });
    }
    let ny = p.len();
    let layout = extension_layout(da, db, k);
    let bl = b_labels(k);
    let blr: Vec<&str> = bl.iter().map(|s| s.as_str()).collect();

    let mut b = LmiBuilder::new();
    let t = b.add_var("t");
    b.objective(t, -1.0);
    // Complex conjugation maps solutions to solutions when P is real, so the
    // real part of any solution is one as well.
    let family = covariant_family(
        &mut b,
        &FamilySpec {
            layout: &layout,
            blocks: &blr,
            outcomes: ny,
            real: p.is_real(),
            covariance: opts.covariance,
            name: "G",
        },
    )?;
    let g = &family.exprs;

    // Marginal condition; summing it over y_1 yields completeness.
    let rest = SystemLayout::new(bl[1..].iter().map(|l| (l.clone(), db)))?;
    for (y1, (_, py)) in p.outcomes.iter().enumerate() {
        let mut acc = HermExpr::zero(layout.clone());
        for (y, e) in family.tuples.iter().zip(g) {
            if y[0] == y1 {
                acc.add_assign_scaled(e, 1.0)?;
            }
        }
        let target = if k == 1 {
            py.matrix().clone()
        } else {
            tensor(&py.relabel(&["A", "B1"])?, &Operator::identity(rest.clone()))?.into_matrix()
        };
        acc.difference(&HermExpr::constant(layout.clone(), &target)?)?.add_zero(&mut b);
    }

    if k >= 2 {
        let last = blr[k - 1];
        let lb = SystemLayout::single(last, db);
        for head in tuples(ny, k - 1) {
            let mut lhs = HermExpr::zero(layout.clone());
            for yk in 0..ny {
                let mut y = head.clone();
                y.push(yk);
                lhs.add_assign_scaled(&g[tuple_index(&y, ny)], 1.0)?;
            }
            let lhs = lhs.partial_trace(&["A"])?;
            let rhs = lhs.partial_trace(&[last])?.tensor_identity(&lb)?.scaled(1.0 / db as f64);
            lhs.difference(&rhs)?.add_zero(&mut b);
        }
    }

    let slack = HermExpr::scaled_identity(layout.clone(), t, 1.0);
    for (i, (y, e)) in family.tuples.iter().zip(g).enumerate() {
        let tag: String = y.iter().map(|v| v.to_string()).collect();
        if family.independent[i] {
            e.difference(&slack)?.add_psd(&mut b, &format!("G^{tag}"));
        }
        if ppt {
            for j in 1..=k {
                let pt = e.partial_transpose(&blr[..j])?;
                pt.difference(&slack)?.add_psd(&mut b, &format!("T_{j}(G^{tag})"));
            }
        }
    }

    let program = b.build()?;
    let sol = program.solve(&opts.solver)?;
    let x = &sol.x;
    let slack_value = x[t.0];
    let elements: Vec<(Vec<usize>, Operator)> = family
        .tuples
        .iter()
        .zip(g)
        .map(|(y, e)| {
            let m = e.eval(x);
            let op = Operator::new(layout.clone(), m).unwrap().hermitian_part();
            (y.clone(), op)
        })
        .collect();
    let residuals = recheck_extension(p, &elements, k, ppt)?;
    let feasible = sol.status == SolveStatus::Optimal && slack_value >= -FEASIBILITY_TOL;
    Ok(ExtendResult {
        feasible,
        slack: slack_value,
        slack_upper: -sol.dual_bound,
        status: sol.status,
        iterations: sol.sdp.iterations,
        witness: ExtensionWitness { k, ppt, elements, residuals },
    })
}

/// Product form of a POVM on `A` and one on `B`; convenient for tests and examples.
pub fn product_povm(a: &Povm, b: &Povm) -> Result<Povm> {
    let layout = a.layout.concat(&b.layout)?;
    let mut outcomes = Vec::new();
    for (la, ea) in &a.outcomes {
        for (lb, eb) in &b.outcomes {
            let label: Vec<usize> = la.iter().chain(lb).copied().collect();
            outcomes.push((label, tensor_all(&[ea, eb])?));
        }
    }
    Povm::new(layout, outcomes)
}
