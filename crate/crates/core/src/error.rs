use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension error: {0}")]
    Dimension(String),

    #[error("numerical consistency error: imaginary residual {residual:e} exceeds {limit:e}")]
    NumericalConsistency { residual: f64, limit: f64 },

    #[error("encoding error: {0}")]
    Encoding(String),

    #[error("timing error: {0}")]
    Timing(String),

    #[error("layout capacity error: canvas {canvas:?} too small, need at least {minimum:?}")]
    LayoutCapacity {
        canvas: (usize, usize),
        minimum: (usize, usize),
    },

    #[error("crosstalk error: expanded tiles {first} and {second} overlap")]
    Crosstalk { first: usize, second: usize },

    #[error("layout error: {0}")]
    Layout(String),

    #[error("format error: {0}")]
    Format(String),

    #[error("ingestion error: {msg} ({path})")]
    Ingestion { path: PathBuf, msg: String },

    #[error("manifest error: {0}")]
    Manifest(String),

    #[error("training diverged at epoch {epoch}, batch {batch}: loss {loss}")]
    Divergence { epoch: usize, batch: usize, loss: f64 },

    #[error("parameter error: {0}")]
    Parameter(String),

    #[error("infeasible overlap: t1 = {t1} must be < t2 = {t2}")]
    InfeasibleOverlap { t1: f64, t2: f64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
