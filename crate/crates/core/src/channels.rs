//! Channels represented by their Choi operator `Gamma = sum_{ij} |i><j|_R (x) N(|i><j|)_B`,
//! reference system on the left. `Tr Gamma = dim_in`.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::qlinalg::{
    hermitian_eigen, max_entangled_on, min_eigenvalue, partial_trace, CMat, Operator,
    SystemLayout, C64, ZERO,
};

/// Default bound on the total dimension of any constructed operator.
pub const DEFAULT_DIM_CAP: usize = 512;

#[derive(Debug, Clone, PartialEq)]
pub struct Channel {
    dim_in: usize,
    dim_out: usize,
    choi: Operator,
}

fn choi_layout(dim_in: usize, dim_out: usize) -> SystemLayout {
    SystemLayout::new([("R", dim_in), ("B", dim_out)]).expect("fixed labels")
}

/// Validates complete positivity and trace preservation of a Choi matrix.
pub fn channel_from_choi(dim_in: usize, dim_out: usize, choi: CMat) -> Result<Channel> {
    if dim_in == 0 || dim_out == 0 {
        return Err(Error::InvalidArgument("channel dimensions must be positive".into()));
    }
    let choi = Operator::new(choi_layout(dim_in, dim_out), choi)?;
    if !choi.is_hermitian() {
        return Err(Error::NotHermitian { residual: choi.hermiticity_residual() });
    }
    let eigs = crate::qlinalg::hermitian_eigenvalues(choi.matrix());
    let norm = eigs.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let lmin = eigs.first().copied().unwrap_or(0.0);
    if lmin < -1e-9 * norm.max(1.0) {
        return Err(Error::Validation {
            what: "Choi operator is not positive semidefinite".into(),
            residual: -lmin,
        });
    }
    let marginal = partial_trace(&choi, &["B"])?;
    let diff = marginal.matrix() - CMat::identity(dim_in, dim_in);
    let tp = if diff.nrows() == 0 { 0.0 } else { diff.singular_values().max() };
    if tp > 1e-9 {
        return Err(Error::Validation {
            what: "partial trace of the Choi operator over the output is not the identity".into(),
            residual: tp,
        });
    }
    Ok(Channel { dim_in, dim_out, choi })
}

impl Channel {
    pub fn dim_in(&self) -> usize {
        self.dim_in
    }

    pub fn dim_out(&self) -> usize {
        self.dim_out
    }

    /// Choi operator on `R (x) B`.
    pub fn choi(&self) -> &Operator {
        &self.choi
    }

    /// `N(rho) = Tr_R[(rho^T (x) I_B) Gamma]`.
    pub fn apply(&self, state: &CMat) -> Result<CMat> {
        let (din, dout) = (self.dim_in, self.dim_out);
        if state.nrows() != din || state.ncols() != din {
            return Err(Error::Dimension(format!(
                "input is {}x{}, channel expects {din}x{din}",
                state.nrows(),
                state.ncols()
            )));
        }
        let g = self.choi.matrix();
        let mut out = CMat::zeros(dout, dout);
        for rp in 0..din {
            for r in 0..din {
                let w = state[(rp, r)];
                if w == ZERO {
                    continue;
                }
                for b in 0..dout {
                    for bp in 0..dout {
                        out[(b, bp)] += w * g[(rp * dout + b, r * dout + bp)];
                    }
                }
            }
        }
        Ok(out)
    }

    /// Kraus operators `K_i[b, a] = sqrt(l_i) v_i[(a, b)]` from the Choi eigendecomposition.
    pub fn kraus_operators(&self) -> Vec<CMat> {
        let (vals, vecs) = hermitian_eigen(self.choi.matrix());
        let (din, dout) = (self.dim_in, self.dim_out);
        let cutoff = 1e-14 * vals.last().copied().unwrap_or(0.0).abs().max(1.0);
        vals.iter()
            .enumerate()
            .filter(|(_, &l)| l > cutoff)
            .map(|(i, &l)| {
                let s = l.sqrt();
                CMat::from_fn(dout, din, |b, a| vecs[(a * dout + b, i)] * s)
            })
            .collect()
    }

    /// Whether every Choi entry is real.
    pub fn is_real(&self) -> bool {
        self.choi.matrix().iter().all(|v| v.im == 0.0)
    }

    /// Normalized Choi state `Gamma / dim_in`.
    pub fn choi_state(&self) -> Operator {
        self.choi.scale(1.0 / self.dim_in as f64)
    }
}

/// Channel with Choi operator `(6/7) Phi + (15/7) sigma`, where `Phi` is the
/// two-qutrit maximally entangled state and
/// `sigma = (|01><01| + |12><12| + |20><20|) / 3`.
pub fn example_channel() -> Channel {
    let choi = example_choi(6.0 / 7.0, 15.0 / 7.0);
    channel_from_choi(3, 3, choi).expect("the example channel is valid")
}

/// `a Phi + b sigma` in the two-qutrit space; exposed for negative tests.
pub fn example_choi(a: f64, b: f64) -> CMat {
    let phi = max_entangled_on(3, "R", "B");
    let mut m = phi.matrix() * C64::new(a, 0.0);
    for (i, j) in [(0usize, 1usize), (1, 2), (2, 0)] {
        let idx = i * 3 + j;
        m[(idx, idx)] += C64::new(b / 3.0, 0.0);
    }
    m
}

pub fn identity_channel(d: usize) -> Channel {
    let phi = max_entangled_on(d, "R", "B");
    channel_from_choi(d, d, phi.matrix() * C64::new(d as f64, 0.0)).expect("identity channel is valid")
}

/// Replaces every input by `sigma`.
pub fn replacer_channel(dim_in: usize, sigma: &CMat) -> Result<Channel> {
    let choi = CMat::identity(dim_in, dim_in).kronecker(sigma);
    channel_from_choi(dim_in, sigma.nrows(), choi)
}

/// Replaces every input by the maximally mixed state.
pub fn completely_depolarizing(d: usize) -> Channel {
    let sigma = CMat::identity(d, d) * C64::new(1.0 / d as f64, 0.0);
    replacer_channel(d, &sigma).expect("maximally mixed replacer is valid")
}

/// `rho -> (1 - p) rho + p Tr[rho] I / d`.
pub fn depolarizing_channel(d: usize, p: f64) -> Result<Channel> {
    if !p.is_finite() || p < 0.0 {
        return Err(Error::InvalidArgument(format!("depolarizing parameter {p} out of range")));
    }
    let phi = max_entangled_on(d, "R", "B");
    let n = d * d;
    let choi = phi.matrix() * C64::new((1.0 - p) * d as f64, 0.0)
        + CMat::identity(n, n) * C64::new(p / d as f64, 0.0);
    channel_from_choi(d, d, choi)
}

/// Parses `example29`, `identity:d`, `replacer:d` and `depolarizing:d:p`.
pub fn builtin_channel(name: &str) -> Result<Channel> {
    let parts: Vec<&str> = name.split(':').collect();
    let dim = |s: &str| -> Result<usize> {
        s.parse::<usize>()
            .ok()
            .filter(|d| *d >= 1)
            .ok_or_else(|| Error::InvalidArgument(format!("bad dimension {s:?} in {name:?}")))
    };
    match parts.as_slice() {
        ["example29"] => Ok(example_channel()),
        ["identity", d] => Ok(identity_channel(dim(d)?)),
        ["replacer", d] => Ok(completely_depolarizing(dim(d)?)),
        ["depolarizing", d, p] => {
            let p: f64 = p
                .parse()
                .map_err(|_| Error::InvalidArgument(format!("bad parameter {p:?} in {name:?}")))?;
            depolarizing_channel(dim(d)?, p)
        }
        _ => Err(Error::InvalidArgument(format!("unknown channel {name:?}"))),
    }
}

/// Choi operator of `N^{(x) n}`, reordered from `(R_1 B_1)(R_2 B_2)...` to
/// `R_1 ... R_n B_1 ... B_n`.
pub fn tensor_power(ch: &Channel, n: usize, dim_cap: usize) -> Result<Channel> {
    if n == 0 {
        return Err(Error::InvalidArgument("tensor power needs n >= 1".into()));
    }
    let din = ch.dim_in.pow(n as u32);
    let dout = ch.dim_out.pow(n as u32);
    if din * dout > dim_cap {
        return Err(Error::DimensionCap { dim: din * dout, cap: dim_cap });
    }
    if n == 1 {
        return Ok(ch.clone());
    }
    let mut labels = Vec::new();
    let mut mat = DMatrix::from_element(1, 1, C64::new(1.0, 0.0));
    for i in 0..n {
        labels.push((format!("R{i}"), ch.dim_in));
        labels.push((format!("B{i}"), ch.dim_out));
        mat = mat.kronecker(ch.choi.matrix());
    }
    let naive = Operator::new(SystemLayout::new(labels)?, mat)?;
    let order: Vec<String> = (0..n)
        .map(|i| format!("R{i}"))
        .chain((0..n).map(|i| format!("B{i}")))
        .collect();
    let order_refs: Vec<&str> = order.iter().map(|s| s.as_str()).collect();
    let sorted = naive.permute_subsystems(&order_refs)?;
    channel_from_choi(din, dout, sorted.into_matrix())
}

/// Smallest eigenvalue of the Choi operator.
pub fn choi_min_eigenvalue(ch: &Channel) -> f64 {
    min_eigenvalue(ch.choi.matrix())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_names_parse() {
        assert_eq!(builtin_channel("identity:2").unwrap().dim_in(), 2);
        assert_eq!(builtin_channel("example29").unwrap().dim_out(), 3);
        assert!(builtin_channel("depolarizing:2:0.3").is_ok());
        assert!(builtin_channel("identity:0").is_err());
        assert!(builtin_channel("nonsense").is_err());
    }

    #[test]
    fn replacer_outputs_its_state() {
        let ch = completely_depolarizing(3);
        let mut rho = CMat::zeros(3, 3);
        rho[(1, 1)] = C64::new(1.0, 0.0);
        let out = ch.apply(&rho).unwrap();
        assert!((out - CMat::identity(3, 3) * C64::new(1.0 / 3.0, 0.0)).norm() < 1e-14);
    }
}
