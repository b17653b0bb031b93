use thiserror::Error;

use crate::write::ProtocolViolation;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("malformed sequence: length {len} is not a multiple of 4")]
    MalformedSequence { len: usize },

    #[error("invalid base symbol {0:?}")]
    InvalidBase(char),

    #[error("invalid layout: {0}")]
    InvalidLayout(String),

    #[error("address {address} out of range for {spot_count} parking spots")]
    Addressing { address: u64, spot_count: u64 },

    #[error("electric field must be positive")]
    ZeroField,

    #[error("configuration error: {0}")]
    Config(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("scheduling error: {0}")]
    Scheduling(String),

    #[error("no open-pore baseline could be estimated")]
    Baseline,

    #[error("protocol violation: {0}")]
    Protocol(ProtocolViolation),

    #[error("spacer of {spacer_nm} nm is shorter than the {required_nm} nm the activator needs")]
    Adjacency { spacer_nm: f64, required_nm: f64 },

    #[error("capability error: {0}")]
    Capability(String),

    #[error("strand has unwritten sites; splice needs a completed write pass")]
    WriteIncomplete,

    #[error("scenario error: {0}")]
    Scenario(String),
}

impl From<ProtocolViolation> for Error {
    fn from(v: ProtocolViolation) -> Self {
        Error::Protocol(v)
    }
}
