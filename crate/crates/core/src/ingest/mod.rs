//! Loading volumes from SEG-Y and raw binary files.

mod raw;
mod segy;

use std::io;
use std::path::PathBuf;

use thiserror::Error;

use crate::volume::{DenseVolume, VolumeError, VoxelFormat};

pub use raw::{read_raw, read_raw_with_sidecar, sidecar_path, write_raw, RawSidecar};
pub use segy::{
    ibm_to_ieee, ieee_to_ibm, parse_segy, parse_segy_bytes, write_segy, AxisMapping, SegyAxis,
    SegyFormatCode, SegyHeaderInfo, SegyTrace, SegyVolume, BINARY_HEADER_LEN, TEXT_HEADER_LEN,
    TRACE_HEADER_LEN,
};

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("SizeMismatch: expected {expected} bytes, found {actual}")]
    SizeMismatch { expected: u64, actual: u64 },
    #[error("UnsupportedFormatCode: {0} (only 1 = IBM float and 5 = IEEE float are accepted)")]
    UnsupportedFormatCode(u16),
    #[error("TruncatedHeader: file is {0} bytes, SEG-Y headers need 3600")]
    TruncatedHeader(u64),
    #[error("TruncatedTrace: trace {index} is cut short ({available} of {needed} bytes)")]
    TruncatedTrace {
        index: u64,
        available: u64,
        needed: u64,
    },
    #[error("InconsistentTraceLength: trace {index} declares {declared} samples, binary header says {expected}")]
    InconsistentTraceLength {
        index: u64,
        declared: u16,
        expected: u16,
    },
    #[error("InvalidHeader: {0}")]
    InvalidHeader(String),
    #[error("DuplicateTrace: inline {inline}, crossline {crossline} appears more than once")]
    DuplicateTrace { inline: i32, crossline: i32 },
    #[error("DegenerateRange: normalization range [{0}, {1}] is empty")]
    DegenerateRange(f64, f64),
    #[error("BadSidecar: {0}")]
    BadSidecar(String),
    #[error(transparent)]
    Volume(#[from] VolumeError),
}

impl IngestError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        IngestError::Io {
            path: path.into(),
            source,
        }
    }
}

/// Maps each value onto `0..=255` through the window `range`, clamping
/// outside it and rounding half up.
///
/// The result keeps `range` as its `value_range` so the original scale can be
/// recovered.
pub fn normalize_to_u8(volume: &DenseVolume, range: (f64, f64)) -> Result<DenseVolume, IngestError> {
    let (lo, hi) = range;
    if !(lo < hi) {
        return Err(IngestError::DegenerateRange(lo, hi));
    }
    let data = volume
        .data
        .iter()
        .map(|&v| normalize_value(v as f64, lo, hi) as f32)
        .collect();
    Ok(DenseVolume {
        dims: volume.dims,
        format: VoxelFormat::Unsigned8Normalized,
        data,
        value_range: range,
    })
}

fn normalize_value(v: f64, lo: f64, hi: f64) -> u8 {
    let t = ((v - lo) / (hi - lo)).clamp(0.0, 1.0);
    // NaN clamps to NaN; the cast sends it to 0.
    (255.0 * t + 0.5).floor() as u8
}
