use extendicap_sdp::SdpError;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("layout error: {0}")]
    Layout(String),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("operator is not Hermitian (residual {residual:.3e})")]
    NotHermitian { residual: f64 },
    #[error("{what} (residual {residual:.3e})")]
    Validation { what: String, residual: f64 },
    #[error("dimension {dim} exceeds the configured cap {cap}")]
    DimensionCap { dim: usize, cap: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Sdp(#[from] SdpError),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
