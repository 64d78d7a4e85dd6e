use thiserror::Error;

/// Errors raised anywhere in the toolkit.
#[derive(Debug, Error)]
pub enum SfwError {
    #[error("dimension error: {0}")]
    Dimension(String),

    #[error("size error: expected {expected} {what}, got {actual}")]
    Size {
        what: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("mask does not match: {0}")]
    MaskMismatch(String),

    #[error("unrecoverable codeword: {0}")]
    Unrecoverable(String),

    #[error("format information unrecoverable: {0}")]
    FormatInfo(String),

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("malformed file: {0}")]
    Malformed(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl SfwError {
    /// Stable machine-readable tag, used by the CLI and the C ABI.
    pub fn kind(&self) -> &'static str {
        match self {
            SfwError::Dimension(_) => "dimension",
            SfwError::Size { .. } => "size",
            SfwError::InvalidParameter(_) => "invalid_parameter",
            SfwError::NonFinite(_) => "non_finite",
            SfwError::MaskMismatch(_) => "mask_mismatch",
            SfwError::Unrecoverable(_) => "unrecoverable",
            SfwError::FormatInfo(_) => "format_info",
            SfwError::Empty(_) => "empty",
            SfwError::Malformed(_) => "malformed",
            SfwError::Io(_) => "io",
            SfwError::Json(_) => "json",
        }
    }
}

pub type Result<T, E = SfwError> = std::result::Result<T, E>;
