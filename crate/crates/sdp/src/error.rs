use thiserror::Error;

#[derive(Debug, Error)]
pub enum SdpError {
    #[error("malformed problem: {0}")]
    Structure(String),
    #[error("solution does not match problem structure: {0}")]
    SolutionMismatch(String),
    #[error("equality constraints are inconsistent (least-squares residual {residual:.3e})")]
    InconsistentEqualities { residual: f64 },
    #[error("variable `{0}` does not enter any matrix inequality")]
    UnusedVariable(String),
    #[error("parse error: {0}")]
    Parse(String),
}
