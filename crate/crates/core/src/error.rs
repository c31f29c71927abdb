use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the painting pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot read image {path}: {source}")]
    ImageRead {
        path: PathBuf,
        #[source]
        source: image::ImageError,
    },
    #[error("cannot write image {path}: {source}")]
    ImageWrite {
        path: PathBuf,
        #[source]
        source: image::ImageError,
    },
    #[error("cannot access {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(
        "region with center ({cx}, {cy}) and radius {radius} exceeds image bounds {width}x{height}"
    )]
    RegionOutOfBounds {
        cx: u32,
        cy: u32,
        radius: u32,
        width: u32,
        height: u32,
    },
    #[error("image must be at least {min}x{min} pixels, got {width}x{height}")]
    ImageTooSmall { width: u32, height: u32, min: u32 },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("system has no chords")]
    EmptySystem,
    #[error("chord covers no pixels")]
    EmptyChord,
    #[error("non-finite value encountered during solve at iteration {iteration}")]
    NonFinite { iteration: usize },
    #[error("no unused chord available from pin {pin} after {drawn} of {requested} chords")]
    PinExhausted {
        pin: u32,
        drawn: usize,
        requested: usize,
    },
    #[error("invalid sequence file: {0}")]
    SequenceParse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
