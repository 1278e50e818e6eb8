use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the alignment pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid dimensions {width}x{height}: {reason}")]
    Dimension {
        width: usize,
        height: usize,
        reason: &'static str,
    },

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("exposure order violated: mean of first image {first:.2} is below mean of second {second:.2}")]
    Ordering { first: f64, second: f64 },

    #[error("degenerate input: {0}")]
    Degenerate(&'static str),

    #[error("unsupported image format for {}", .0.display())]
    UnsupportedFormat(PathBuf),

    #[error("failed to read or write {}: {source}", path.display())]
    Image {
        path: PathBuf,
        #[source]
        source: image::ImageError,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
