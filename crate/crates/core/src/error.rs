use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid cone: {0}")]
    InvalidCone(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("length mismatch: expected {expected}, found {found}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid data: {0}")]
    InvalidData(String),

    #[error("point set is empty")]
    EmptyView,

    #[error("dictionary column {column} has norm {norm}, expected unit norm")]
    NotNormalized { column: usize, norm: f64 },

    #[error("matrix is not symmetric (max |m_ij - m_ji| = {max_diff:e})")]
    Asymmetric { max_diff: f64 },

    #[error("every pointwise density is infinite (duplicate points only)")]
    DegenerateDensity,

    #[error("ground-truth labels are required")]
    MissingLabels,

    #[error("bad IDX magic number: expected {expected:#010x}, found {found:#010x}")]
    BadMagic { expected: u32, found: u32 },

    #[error("truncated IDX data: expected {expected} bytes, found {found}")]
    Truncated { expected: usize, found: usize },

    #[error("IDX data has {extra} unexpected trailing bytes")]
    TrailingData { extra: usize },

    #[error("image and label counts differ: {images} images, {labels} labels")]
    CountMismatch { images: usize, labels: usize },

    #[error("not enough data: {0}")]
    InsufficientData(String),

    #[error("unreadable image {path}: {reason}")]
    Image { path: PathBuf, reason: String },

    #[error("no images found under {0}")]
    EmptyFolder(PathBuf),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
