//! JSON forms of channels, POVMs and codes. Matrices are nested arrays of
//! `[re, im]` pairs, row-major.

use serde::{Deserialize, Serialize};

use crate::channels::{builtin_channel, channel_from_choi, Channel};
use crate::coding::Code;
use crate::error::{Error, Result};
use crate::extendibility::Povm;
use crate::qlinalg::{CMat, Operator, SystemLayout, C64};

pub type JsonMatrix = Vec<Vec<[f64; 2]>>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelJson {
    pub dim_in: usize,
    pub dim_out: usize,
    pub choi: JsonMatrix,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutcomeJson {
    pub label: Vec<usize>,
    pub element: JsonMatrix,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PovmJson {
    pub layout: Vec<(String, usize)>,
    pub outcomes: Vec<OutcomeJson>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CodeJson {
    pub states: Vec<JsonMatrix>,
    pub decoder: PovmJson,
}

pub fn matrix_to_json(m: &CMat) -> JsonMatrix {
    (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect()).collect()
}

pub fn matrix_from_json(rows: &JsonMatrix) -> Result<CMat> {
    let n = rows.len();
    if rows.iter().any(|r| r.len() != n) {
        return Err(Error::Dimension("matrix must be square".into()));
    }
    Ok(CMat::from_fn(n, n, |i, j| C64::new(rows[i][j][0], rows[i][j][1])))
}

pub fn channel_to_json(ch: &Channel) -> ChannelJson {
    ChannelJson { dim_in: ch.dim_in(), dim_out: ch.dim_out(), choi: matrix_to_json(ch.choi().matrix()) }
}

pub fn channel_from_json(j: &ChannelJson) -> Result<Channel> {
    channel_from_choi(j.dim_in, j.dim_out, matrix_from_json(&j.choi)?)
}

pub fn povm_to_json(p: &Povm) -> PovmJson {
    PovmJson {
        layout: p.layout().subsystems().to_vec(),
        outcomes: p
            .outcomes()
            .iter()
            .map(|(label, e)| OutcomeJson { label: label.clone(), element: matrix_to_json(e.matrix()) })
            .collect(),
    }
}

pub fn povm_from_json(j: &PovmJson) -> Result<Povm> {
    let layout = SystemLayout::new(j.layout.iter().map(|(l, d)| (l.clone(), *d)))?;
    let outcomes = j
        .outcomes
        .iter()
        .map(|o| Ok((o.label.clone(), Operator::new(layout.clone(), matrix_from_json(&o.element)?)?)))
        .collect::<Result<Vec<_>>>()?;
    Povm::new(layout, outcomes)
}

pub fn code_to_json(c: &Code) -> CodeJson {
    CodeJson {
        states: c.states().iter().map(|s| matrix_to_json(s.matrix())).collect(),
        decoder: povm_to_json(c.decoder()),
    }
}

pub fn code_from_json(j: &CodeJson) -> Result<Code> {
    let states = j
        .states
        .iter()
        .map(|m| {
            let m = matrix_from_json(m)?;
            Operator::new(SystemLayout::single("A", m.nrows()), m)
        })
        .collect::<Result<Vec<_>>>()?;
    Code::new(states, povm_from_json(&j.decoder)?)
}

/// A built-in name (`example29`, `identity:d`, ...) or a path to a channel JSON file.
pub fn load_channel(spec: &str) -> Result<Channel> {
    match builtin_channel(spec) {
        Ok(ch) => Ok(ch),
        Err(builtin_err) => {
            let path = std::path::Path::new(spec);
            if !path.exists() {
                return Err(builtin_err);
            }
            let j: ChannelJson = serde_json::from_str(&std::fs::read_to_string(path)?)?;
            channel_from_json(&j)
        }
    }
}

pub fn load_povm(path: &str) -> Result<Povm> {
    let j: PovmJson = serde_json::from_str(&std::fs::read_to_string(path)?)?;
    povm_from_json(&j)
}

pub fn load_code(path: &str) -> Result<Code> {
    let j: CodeJson = serde_json::from_str(&std::fs::read_to_string(path)?)?;
    code_from_json(&j)
}
