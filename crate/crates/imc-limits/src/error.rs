use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("degenerate signal: {0}")]
    DegenerateSignal(String),
    #[error("invalid quantizer: {0}")]
    InvalidQuantizer(String),
    #[error("empty input: {0}")]
    Empty(&'static str),
    #[error("gamma too large: log argument {0} is not positive")]
    GammaTooLarge(f64),
    #[error("cell cutoff: word-line voltage {v_wl} V does not exceed threshold {vt} V")]
    CellCutoff { v_wl: f64, vt: f64 },
    #[error("length mismatch: {what} ({left} vs {right})")]
    LengthMismatch { what: &'static str, left: usize, right: usize },
    #[error("zero total capacitance")]
    ZeroCapacitance,
    #[error("headroom smaller than unit discharge (k_h = {0})")]
    HeadroomTooSmall(f64),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("empty sweep")]
    EmptySweep,
    #[error("mismatched configurations: {0}")]
    MismatchedConfigs(String),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("parse error in {path}: {message}")]
    Parse { path: String, message: String },
}
