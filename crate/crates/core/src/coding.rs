//! Codes for one channel use and the local tester built from a code: the
//! canonical purification of the average input, the pretty-good measurement
//! on the reference, and `Omega = sum_m Theta^m (x) Lambda^m`.

use crate::capacity::{capacity_bound, CapacityOptions, CapacityQuery, MAX_EPSILON};
use crate::channels::Channel;
use crate::error::{Error, Result};
use crate::extendibility::Povm;
use crate::qlinalg::{hermitian_eigen, hermitian_eigenvalues, psd_sqrt, tensor, CMat, Operator, SystemLayout, C64, ZERO};

/// Relative eigenvalue cutoff for inverses taken on the support.
pub const SUPPORT_CUTOFF: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct Code {
    states: Vec<Operator>,
    decoder: Povm,
}

fn check_state(rho: &Operator, what: &str) -> Result<()> {
    if !rho.is_hermitian() {
        return Err(Error::NotHermitian { residual: rho.hermiticity_residual() });
    }
    let lmin = hermitian_eigenvalues(rho.matrix()).first().copied().unwrap_or(0.0);
    if lmin < -1e-9 {
        return Err(Error::Validation { what: format!("{what} is not positive semidefinite"), residual: -lmin });
    }
    let tr = (rho.trace() - C64::new(1.0, 0.0)).norm();
    if tr > 1e-9 {
        return Err(Error::Validation { what: format!("{what} does not have unit trace"), residual: tr });
    }
    Ok(())
}

fn message_label(m: usize) -> Vec<usize> {
    vec![m]
}

impl Code {
    /// Encoder states on `A` and a decoder whose outcomes are labelled `[0]..[M-1]`.
    pub fn new(states: Vec<Operator>, decoder: Povm) -> Result<Self> {
        if states.is_empty() {
            return Err(Error::InvalidArgument("a code needs at least one message".into()));
        }
        let da = states[0].dim();
        for (m, s) in states.iter().enumerate() {
            if s.dim() != da {
                return Err(Error::Dimension(format!("state {m} has dimension {}, expected {da}", s.dim())));
            }
            check_state(s, &format!("state {m}"))?;
        }
        if decoder.len() != states.len() || (0..states.len()).any(|m| decoder.element(&message_label(m)).is_none()) {
            return Err(Error::InvalidArgument(format!(
                "decoder must have exactly the outcomes [0]..[{}]",
                states.len() - 1
            )));
        }
        Ok(Self { states, decoder })
    }

    pub fn messages(&self) -> usize {
        self.states.len()
    }

    pub fn states(&self) -> &[Operator] {
        &self.states
    }

    pub fn decoder(&self) -> &Povm {
        &self.decoder
    }

    pub fn decoder_element(&self, m: usize) -> &Operator {
        self.decoder.element(&message_label(m)).expect("checked at construction")
    }

    /// `(1/|M|) sum_m rho^m`.
    pub fn average_state(&self) -> CMat {
        let mut acc = CMat::zeros(self.states[0].dim(), self.states[0].dim());
        for s in &self.states {
            acc += s.matrix();
        }
        acc / C64::new(self.messages() as f64, 0.0)
    }

    fn check_channel(&self, ch: &Channel) -> Result<()> {
        if ch.dim_in() != self.states[0].dim() || ch.dim_out() != self.decoder.layout().total_dim() {
            return Err(Error::Dimension(format!(
                "code maps {} -> {}, channel maps {} -> {}",
                self.states[0].dim(),
                self.decoder.layout().total_dim(),
                ch.dim_in(),
                ch.dim_out()
            )));
        }
        Ok(())
    }
}

fn success(code: &Code, ch: &Channel) -> Result<Vec<f64>> {
    code.check_channel(ch)?;
    code.states
        .iter()
        .enumerate()
        .map(|(m, rho)| {
            let out = ch.apply(rho.matrix())?;
            Ok((code.decoder_element(m).matrix() * out).trace().re)
        })
        .collect()
}

/// `(worst, average)` error over messages, the average with a uniform prior.
pub fn error_probabilities(code: &Code, ch: &Channel) -> Result<(f64, f64)> {
    let s = success(code, ch)?;
    let worst = s.iter().map(|p| 1.0 - p).fold(f64::NEG_INFINITY, f64::max);
    let average = 1.0 - s.iter().sum::<f64>() / s.len() as f64;
    Ok((worst, average))
}

/// `(I_R (x) sqrt(rho)) Gamma (I_R (x) sqrt(rho))` on `R (x) A`, with
/// `Gamma = sum_ij |i><j| (x) |i><j|`.
pub fn canonical_purification(rho: &Operator) -> Result<Operator> {
    check_state(rho, "input")?;
    let d = rho.dim();
    let s = psd_sqrt(rho.matrix());
    // Column i of (I (x) s)|Gamma> restricted to R = i is s e_i.
    let mut v = CMat::zeros(d * d, 1);
    for i in 0..d {
        for a in 0..d {
            v[(i * d + a, 0)] = s[(a, i)];
        }
    }
    let layout = SystemLayout::new([("R", d), ("A", d)])?;
    Operator::new(layout, &v * v.adjoint())
}

/// `rho^{-1/2}` on the support, eigenvalues below `SUPPORT_CUTOFF * lambda_max` dropped,
/// together with the support projector.
fn inverse_sqrt_on_support(rho: &CMat) -> (CMat, CMat) {
    let (vals, vecs) = hermitian_eigen(rho);
    let top = vals.last().copied().unwrap_or(0.0).max(0.0);
    let d = rho.nrows();
    let mut inv = CMat::zeros(d, d);
    let mut proj = CMat::zeros(d, d);
    for (i, &l) in vals.iter().enumerate() {
        if l > SUPPORT_CUTOFF * top && l > 0.0 {
            let v = vecs.column(i);
            let p = v * v.adjoint();
            inv += &p * C64::new(1.0 / l.sqrt(), 0.0);
            proj += p;
        }
    }
    (inv, proj)
}

/// `Theta^m = (1/|M|)(rho_bar^{-1/2} rho^m rho_bar^{-1/2})^T` on `R`, labelled
/// `[m]`. When `rho_bar` is rank-deficient the elements sum to the transposed
/// support projector and an extra reject outcome `[|M|]` completes the POVM.
pub fn pretty_good_measurement(states: &[Operator]) -> Result<Povm> {
    if states.is_empty() {
        return Err(Error::InvalidArgument("the ensemble is empty".into()));
    }
    let d = states[0].dim();
    if states.iter().any(|s| s.dim() != d) {
        return Err(Error::Dimension("ensemble states differ in dimension".into()));
    }
    let nm = states.len() as f64;
    let mut avg = CMat::zeros(d, d);
    for s in states {
        avg += s.matrix();
    }
    avg /= C64::new(nm, 0.0);
    let (inv, proj) = inverse_sqrt_on_support(&avg);
    let layout = SystemLayout::single("R", d);
    let mut outcomes = Vec::with_capacity(states.len() + 1);
    for (m, s) in states.iter().enumerate() {
        let t = (&inv * s.matrix() * &inv).transpose() / C64::new(nm, 0.0);
        let t = (&t + t.adjoint()) * C64::new(0.5, 0.0);
        outcomes.push((message_label(m), Operator::new(layout.clone(), t)?));
    }
    let reject = (CMat::identity(d, d) - proj).transpose();
    if reject.norm() > 1e-12 {
        outcomes.push((message_label(states.len()), Operator::new(layout.clone(), reject)?));
    }
    Povm::new(layout, outcomes)
}

fn tester(pairs: &[(&Operator, &Operator)]) -> Result<Operator> {
    let (first_r, first_b) = pairs[0];
    let layout = first_r.layout().concat(first_b.layout())?;
    let mut acc = Operator::zeros(layout);
    for (t, l) in pairs {
        acc = acc.add(&tensor(t, l)?)?;
    }
    Ok(acc)
}

/// `Omega = sum_m Theta^m (x) Lambda^m`, pairing outcomes by label.
pub fn lo_tester(theta: &Povm, lambda: &Povm) -> Result<Operator> {
    if theta.len() != lambda.len() {
        return Err(Error::InvalidArgument(format!(
            "outcome counts differ: {} vs {}",
            theta.len(),
            lambda.len()
        )));
    }
    let pairs = theta
        .outcomes()
        .iter()
        .map(|(label, t)| {
            lambda
                .element(label)
                .map(|l| (t, l))
                .ok_or_else(|| Error::InvalidArgument(format!("outcome {label:?} missing from the second POVM")))
        })
        .collect::<Result<Vec<_>>>()?;
    tester(&pairs)
}

/// `(id_R (x) N)(X)` for `X` on `R (x) A`.
fn apply_on_second(ch: &Channel, x: &CMat, dr: usize) -> Result<CMat> {
    let (da, db) = (ch.dim_in(), ch.dim_out());
    let mut out = CMat::zeros(dr * db, dr * db);
    for i in 0..dr {
        for j in 0..dr {
            let block = x.view((i * da, j * da), (da, da)).into_owned();
            if block.iter().all(|v| *v == ZERO) {
                continue;
            }
            out.view_mut((i * db, j * db), (db, db)).copy_from(&ch.apply(&block)?);
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundChainReport {
    pub messages: usize,
    pub worst_error: f64,
    pub average_error: f64,
    /// `Tr[Omega N(psi_bar)]`.
    pub accept_channel: f64,
    /// `Tr[Omega R^sigma(psi_bar)]`.
    pub accept_replacer: f64,
    /// `|accept_channel - (1 - average_error)|`.
    pub channel_identity_residual: f64,
    /// `|accept_replacer - 1/|M||`.
    pub replacer_identity_residual: f64,
    /// `-log2 accept_replacer`.
    pub implied_bits: f64,
    /// Largest `||rho^m - Pi rho^m Pi||` with `Pi` the support of `rho_bar`.
    pub support_leak: f64,
    /// Rank of the reject outcome of the pretty-good measurement.
    pub reject_rank: usize,
    /// The SDP bound at `eps = worst_error`, when requested and solvable.
    pub sdp_bound_bits: Option<f64>,
}

impl BoundChainReport {
    /// `log2 |M| <= bound + slack` when the SDP was evaluated.
    pub fn rate_within_bound(&self, slack: f64) -> Option<bool> {
        self.sdp_bound_bits.map(|b| (self.messages as f64).log2() <= b + slack)
    }
}

/// Rebuilds the tester of a code and evaluates the two acceptance
/// probabilities that sandwich `log2 |M|`. With `sdp` set, also solves the
/// capacity program at `eps` equal to the worst error (k = 1, PPT).
pub fn verify_bound_chain(
    code: &Code,
    ch: &Channel,
    sigma: &Operator,
    sdp: Option<&CapacityOptions>,
) -> Result<BoundChainReport> {
    code.check_channel(ch)?;
    check_state(sigma, "sigma")?;
    if sigma.dim() != ch.dim_out() {
        return Err(Error::Dimension("sigma must live on the channel output".into()));
    }
    let (worst, average) = error_probabilities(code, ch)?;
    let nm = code.messages();
    let da = ch.dim_in();
    let avg = code.average_state();
    let avg_op = Operator::new(SystemLayout::single("A", da), avg.clone())?;
    let psi = canonical_purification(&avg_op)?;

    let pgm = pretty_good_measurement(code.states())?;
    let pairs: Vec<(&Operator, &Operator)> = (0..nm)
        .map(|m| (pgm.element(&message_label(m)).unwrap(), code.decoder_element(m)))
        .collect();
    let omega = tester(&pairs)?;

    let out = apply_on_second(ch, psi.matrix(), da)?;
    let accept_channel = (omega.matrix() * out).trace().re;
    // R^sigma(psi) = Tr_A(psi) (x) sigma.
    let mut reduced = CMat::zeros(da, da);
    for i in 0..da {
        for j in 0..da {
            reduced[(i, j)] = (0..da).map(|a| psi.matrix()[(i * da + a, j * da + a)]).sum();
        }
    }
    let replaced = reduced.kronecker(sigma.matrix());
    let accept_replacer = (omega.matrix() * replaced).trace().re;

    let (_, proj) = inverse_sqrt_on_support(&avg);
    let reject_rank = da - proj.trace().re.round() as usize;
    let support_leak = code
        .states()
        .iter()
        .map(|s| (s.matrix() - &proj * s.matrix() * &proj).norm())
        .fold(0.0, f64::max);

    let sdp_bound_bits = match sdp {
        Some(opts) if worst < MAX_EPSILON => {
            let q = CapacityQuery { channel: ch.clone(), epsilon: worst.max(0.0), k: 1, ppt: true };
            let r = capacity_bound(&q, opts)?;
            r.reliable().then_some(r.bound_bits)
        }
        _ => None,
    };

    Ok(BoundChainReport {
        messages: nm,
        worst_error: worst,
        average_error: average,
        accept_channel,
        accept_replacer,
        channel_identity_residual: (accept_channel - (1.0 - average)).abs(),
        replacer_identity_residual: (accept_replacer - 1.0 / nm as f64).abs(),
        implied_bits: -accept_replacer.log2(),
        support_leak,
        reject_rank,
        sdp_bound_bits,
    })
}
