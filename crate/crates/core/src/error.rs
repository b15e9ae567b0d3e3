use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("failed to read {path}: {source}")]
    Read {
        path: PathBuf,
        #[source]
        source: ::image::ImageError,
    },

    #[error("failed to write {path}: {source}")]
    Write {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("unsupported image format for {0} (expected PGM or PNG)")]
    UnsupportedFormat(PathBuf),

    #[error("image has zero size")]
    EmptyImage,

    #[error("pixel buffer holds {actual} values, expected {expected}")]
    PixelCount { expected: usize, actual: usize },

    #[error("image dimensions {width}x{height} are not multiples of {block}")]
    NotBlockAligned { width: u32, height: u32, block: u32 },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("image capacity is {capacity} slots, but {required} are required ({redundancy} copies of {payload_bits} bits)")]
    Capacity {
        capacity: usize,
        required: usize,
        redundancy: usize,
        payload_bits: usize,
    },

    #[error("slot {slot} is out of range for {redundancy} copies of {payload_len} bits")]
    SlotOutOfRange {
        slot: usize,
        redundancy: usize,
        payload_len: usize,
    },

    #[error("payload must be 256 bits: {0}")]
    Payload(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("codec failure: {0}")]
    Codec(String),
}
