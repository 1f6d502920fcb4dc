use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid lattice: {0}")]
    Lattice(String),

    #[error("lattice mismatch: left N={left_n} L={left_l}, right N={right_n} L={right_l}")]
    LatticeMismatch {
        left_n: usize,
        left_l: f64,
        right_n: usize,
        right_l: f64,
    },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("configuration error: {}", .0.join("; "))]
    Config(Vec<String>),

    #[error(
        "numerical blow-up at t={time} (max |a_k| = {max_abs:e}); last checkpoint step: {last_checkpoint:?}"
    )]
    BlowUp {
        time: f64,
        max_abs: f64,
        last_checkpoint: Option<u64>,
    },

    #[error("step rejected at t={time}: CFL number {cfl:.3} exceeds hard limit {limit}")]
    StepRejected { time: f64, cfl: f64, limit: f64 },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("fit error: {reason}; usable separations: {usable:?}")]
    Fit { reason: String, usable: Vec<f64> },

    #[error("checkpoint format error: {0}")]
    Checkpoint(String),

    #[error("usage error: {0}")]
    Usage(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(vec![msg.into()])
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code: 1 validation, 2 numerics, 3 insufficient data.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::BlowUp { .. } | Error::StepRejected { .. } => 2,
            Error::InsufficientData(_) | Error::Fit { .. } => 3,
            _ => 1,
        }
    }
}
