//! SEG-Y rev-1 reader and writer for fixed-length float cubes.
//!
//! Only what a post-stack float cube needs: the 3200-byte textual header is
//! skipped as opaque bytes, the binary header supplies sample count, sample
//! interval and format code, and each 240-byte trace header supplies its
//! inline/crossline numbers. All fields are big-endian.

use std::fs;
use std::path::Path;

use byteorder::{BigEndian, ByteOrder};

use super::IngestError;
use crate::par;
use crate::volume::{DenseVolume, VolumeDims, VoxelFormat};

pub const TEXT_HEADER_LEN: usize = 3200;
pub const BINARY_HEADER_LEN: usize = 400;
pub const TRACE_HEADER_LEN: usize = 240;
const FILE_HEADER_LEN: usize = TEXT_HEADER_LEN + BINARY_HEADER_LEN;

// Absolute offsets in the file (binary header) and relative offsets inside a
// trace header, zero-based.
const BIN_SAMPLE_INTERVAL: usize = 3216;
const BIN_SAMPLES_PER_TRACE: usize = 3220;
const BIN_FORMAT_CODE: usize = 3224;
const BIN_REVISION: usize = 3500;
const BIN_FIXED_LENGTH: usize = 3502;
const TR_SAMPLE_COUNT: usize = 114;
const TR_SAMPLE_INTERVAL: usize = 116;
const TR_INLINE: usize = 188;
const TR_CROSSLINE: usize = 192;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SegyFormatCode {
    IbmFloat = 1,
    IeeeFloat = 5,
}

impl SegyFormatCode {
    pub fn from_code(code: u16) -> Result<Self, IngestError> {
        match code {
            1 => Ok(SegyFormatCode::IbmFloat),
            5 => Ok(SegyFormatCode::IeeeFloat),
            other => Err(IngestError::UnsupportedFormatCode(other)),
        }
    }

    fn decode(self, word: u32) -> f32 {
        match self {
            SegyFormatCode::IbmFloat => ibm_to_ieee(word) as f32,
            SegyFormatCode::IeeeFloat => f32::from_bits(word),
        }
    }

    fn encode(self, v: f32) -> u32 {
        match self {
            SegyFormatCode::IbmFloat => ieee_to_ibm(v as f64),
            SegyFormatCode::IeeeFloat => v.to_bits(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SegyHeaderInfo {
    pub samples_per_trace: u16,
    /// Microseconds.
    pub sample_interval: u16,
    pub format_code: SegyFormatCode,
    pub trace_count: u64,
    pub inline_range: (i32, i32),
    pub crossline_range: (i32, i32),
}

/// Source axis assigned to a volume axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SegyAxis {
    Inline,
    Crossline,
    Sample,
}

/// Which SEG-Y axis becomes volume x, y and z.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AxisMapping(pub [SegyAxis; 3]);

impl Default for AxisMapping {
    fn default() -> Self {
        AxisMapping([SegyAxis::Crossline, SegyAxis::Inline, SegyAxis::Sample])
    }
}

impl AxisMapping {
    /// Parses strings such as `"crossline,inline,sample"` or `"xis"`
    /// (x = crossline, i = inline, s = sample).
    pub fn parse(s: &str) -> Option<Self> {
        let s = s.trim().to_ascii_lowercase();
        let axes: Vec<SegyAxis> = if s.contains(',') {
            s.split(',')
                .map(|p| match p.trim() {
                    "inline" | "il" => Some(SegyAxis::Inline),
                    "crossline" | "xl" => Some(SegyAxis::Crossline),
                    "sample" | "time" | "depth" => Some(SegyAxis::Sample),
                    _ => None,
                })
                .collect::<Option<_>>()?
        } else {
            s.chars()
                .map(|c| match c {
                    'i' => Some(SegyAxis::Inline),
                    'x' => Some(SegyAxis::Crossline),
                    's' => Some(SegyAxis::Sample),
                    _ => None,
                })
                .collect::<Option<_>>()?
        };
        let arr: [SegyAxis; 3] = axes.try_into().ok()?;
        let distinct = arr[0] != arr[1] && arr[1] != arr[2] && arr[0] != arr[2];
        distinct.then_some(AxisMapping(arr))
    }

    fn axis_of(&self, a: SegyAxis) -> usize {
        self.0.iter().position(|&b| b == a).unwrap()
    }
}

/// One trace as written by [`write_segy`].
#[derive(Debug, Clone, PartialEq)]
pub struct SegyTrace {
    pub inline: i32,
    pub crossline: i32,
    pub samples: Vec<f32>,
}

#[derive(Debug, Clone)]
pub struct SegyVolume {
    pub header: SegyHeaderInfo,
    pub volume: DenseVolume,
    /// (inline, crossline) cells with no trace; filled with 0.
    pub missing: Vec<(i32, i32)>,
}

/// Decodes an IBM System/360 single-precision word.
///
/// `(-1)^sign * 16^(exponent - 64) * fraction / 2^24`. Every pattern decodes;
/// the conversion to `f64` is exact.
pub fn ibm_to_ieee(word: u32) -> f64 {
    let sign = if word >> 31 == 1 { -1.0 } else { 1.0 };
    let exponent = ((word >> 24) & 0x7f) as i32;
    let fraction = (word & 0x00ff_ffff) as f64;
    sign * fraction * 2f64.powi(4 * (exponent - 64) - 24)
}

/// Encodes `v` as the nearest normalized IBM single-precision word.
///
/// Values beyond the IBM range saturate; values below it flush to zero.
pub fn ieee_to_ibm(v: f64) -> u32 {
    if v == 0.0 || v.is_nan() {
        return 0;
    }
    let sign: u32 = if v < 0.0 { 0x8000_0000 } else { 0 };
    let mag = v.abs();
    if mag.is_infinite() {
        return sign | 0x7fff_ffff;
    }
    // Find e with 16^(e-65) <= mag < 16^(e-64).
    let (_, exp2) = frexp(mag);
    let mut e = (exp2 + 3).div_euclid(4) + 64;
    let mut frac = (mag * 2f64.powi(24 - 4 * (e - 64))).round() as u64;
    if frac >= 1 << 24 {
        frac >>= 4;
        e += 1;
    }
    if e > 127 {
        return sign | 0x7fff_ffff;
    }
    if e < 0 {
        return 0;
    }
    sign | ((e as u32) << 24) | frac as u32
}

// mag = m * 2^exp with m in [0.5, 1).
fn frexp(mag: f64) -> (f64, i32) {
    let mut exp = mag.log2().floor() as i32 + 1;
    let mut m = mag * 2f64.powi(-exp);
    // log2 can be off by one near powers of two.
    if m >= 1.0 {
        m /= 2.0;
        exp += 1;
    } else if m < 0.5 {
        m *= 2.0;
        exp -= 1;
    }
    (m, exp)
}

/// Reads a SEG-Y file into a volume with the default axis mapping.
pub fn parse_segy(path: &Path) -> Result<SegyVolume, IngestError> {
    let bytes = fs::read(path).map_err(|e| IngestError::io(path, e))?;
    parse_segy_bytes(&bytes, AxisMapping::default())
}

struct TraceHeader {
    inline: i32,
    crossline: i32,
}

pub fn parse_segy_bytes(bytes: &[u8], axes: AxisMapping) -> Result<SegyVolume, IngestError> {
    if bytes.len() < FILE_HEADER_LEN {
        return Err(IngestError::TruncatedHeader(bytes.len() as u64));
    }
    let sample_interval = BigEndian::read_u16(&bytes[BIN_SAMPLE_INTERVAL..]);
    let samples_per_trace = BigEndian::read_u16(&bytes[BIN_SAMPLES_PER_TRACE..]);
    let format_code = SegyFormatCode::from_code(BigEndian::read_u16(&bytes[BIN_FORMAT_CODE..]))?;
    if samples_per_trace == 0 {
        return Err(IngestError::InvalidHeader("samples per trace is 0".into()));
    }

    let ns = samples_per_trace as usize;
    let trace_len = TRACE_HEADER_LEN + 4 * ns;
    let body = &bytes[FILE_HEADER_LEN..];
    let full = body.len() / trace_len;
    let rem = body.len() % trace_len;
    if rem != 0 {
        return Err(IngestError::TruncatedTrace {
            index: full as u64,
            available: rem as u64,
            needed: trace_len as u64,
        });
    }
    if full == 0 {
        return Err(IngestError::InvalidHeader("file holds no traces".into()));
    }

    let mut headers = Vec::with_capacity(full);
    for (index, trace) in body.chunks_exact(trace_len).enumerate() {
        let declared = BigEndian::read_u16(&trace[TR_SAMPLE_COUNT..]);
        // Zero means "not recorded"; anything else must agree.
        if declared != 0 && declared != samples_per_trace {
            return Err(IngestError::InconsistentTraceLength {
                index: index as u64,
                declared,
                expected: samples_per_trace,
            });
        }
        headers.push(TraceHeader {
            inline: BigEndian::read_i32(&trace[TR_INLINE..]),
            crossline: BigEndian::read_i32(&trace[TR_CROSSLINE..]),
        });
    }

    let il = LineAxis::fit(headers.iter().map(|h| h.inline));
    let xl = LineAxis::fit(headers.iter().map(|h| h.crossline));

    let mut extent = [0u32; 3];
    extent[axes.axis_of(SegyAxis::Inline)] = il.count;
    extent[axes.axis_of(SegyAxis::Crossline)] = xl.count;
    extent[axes.axis_of(SegyAxis::Sample)] = samples_per_trace as u32;
    let dims = VolumeDims::from_array(extent).validate()?;
    let n = dims
        .checked_voxel_count()
        .ok_or(crate::volume::VolumeError::VoxelCountOverflow(dims))?;

    let decoded: Vec<Vec<f32>> = par::map_indexed(full, |t| {
        let start = t * trace_len + TRACE_HEADER_LEN;
        body[start..start + 4 * ns]
            .chunks_exact(4)
            .map(|w| format_code.decode(BigEndian::read_u32(w)))
            .collect()
    });

    let mut data = vec![0f32; n as usize];
    let mut seen = vec![false; il.count as usize * xl.count as usize];
    let mut coord = [0u32; 3];
    let (ai, ax, as_) = (
        axes.axis_of(SegyAxis::Inline),
        axes.axis_of(SegyAxis::Crossline),
        axes.axis_of(SegyAxis::Sample),
    );
    for (h, samples) in headers.iter().zip(&decoded) {
        let i = il.index(h.inline);
        let x = xl.index(h.crossline);
        let cell = i as usize * xl.count as usize + x as usize;
        if std::mem::replace(&mut seen[cell], true) {
            return Err(IngestError::DuplicateTrace {
                inline: h.inline,
                crossline: h.crossline,
            });
        }
        coord[ai] = i;
        coord[ax] = x;
        for (s, &v) in samples.iter().enumerate() {
            coord[as_] = s as u32;
            data[dims.index(coord[0], coord[1], coord[2])] = v;
        }
    }

    let mut missing = Vec::new();
    for i in 0..il.count {
        for x in 0..xl.count {
            if !seen[i as usize * xl.count as usize + x as usize] {
                missing.push((il.value(i), xl.value(x)));
            }
        }
    }

    let header = SegyHeaderInfo {
        samples_per_trace,
        sample_interval,
        format_code,
        trace_count: full as u64,
        inline_range: (il.min, il.max),
        crossline_range: (xl.min, xl.max),
    };
    let volume = DenseVolume::new(dims, VoxelFormat::Float32, data)?;
    Ok(SegyVolume {
        header,
        volume,
        missing,
    })
}

/// Line numbering along one survey axis: `min + k * step` for `k < count`.
struct LineAxis {
    min: i32,
    max: i32,
    step: i64,
    count: u32,
}

impl LineAxis {
    fn fit(values: impl Iterator<Item = i32> + Clone) -> Self {
        let min = values.clone().min().unwrap_or(0);
        let max = values.clone().max().unwrap_or(0);
        let step = values
            .map(|v| v as i64 - min as i64)
            .fold(0i64, gcd)
            .max(1);
        let count = ((max as i64 - min as i64) / step + 1) as u32;
        Self {
            min,
            max,
            step,
            count,
        }
    }

    fn index(&self, v: i32) -> u32 {
        ((v as i64 - self.min as i64) / self.step) as u32
    }

    fn value(&self, k: u32) -> i32 {
        (self.min as i64 + k as i64 * self.step) as i32
    }
}

fn gcd(a: i64, b: i64) -> i64 {
    if b == 0 {
        a.abs()
    } else {
        gcd(b, a % b)
    }
}

/// Serializes traces as a rev-1 SEG-Y byte stream.
///
/// All traces must hold `samples_per_trace` samples. The textual header is
/// filled with EBCDIC spaces.
pub fn write_segy(
    traces: &[SegyTrace],
    samples_per_trace: u16,
    sample_interval: u16,
    format: SegyFormatCode,
) -> Vec<u8> {
    let ns = samples_per_trace as usize;
    let mut out = vec![0u8; FILE_HEADER_LEN + traces.len() * (TRACE_HEADER_LEN + 4 * ns)];
    out[..TEXT_HEADER_LEN].fill(0x40);
    BigEndian::write_u16(&mut out[BIN_SAMPLE_INTERVAL..], sample_interval);
    BigEndian::write_u16(&mut out[BIN_SAMPLES_PER_TRACE..], samples_per_trace);
    BigEndian::write_u16(&mut out[BIN_FORMAT_CODE..], format as u16);
    BigEndian::write_u16(&mut out[BIN_REVISION..], 0x0100);
    BigEndian::write_u16(&mut out[BIN_FIXED_LENGTH..], 1);

    let mut pos = FILE_HEADER_LEN;
    for (seq, t) in traces.iter().enumerate() {
        assert_eq!(t.samples.len(), ns, "trace length must match samples_per_trace");
        let h = &mut out[pos..pos + TRACE_HEADER_LEN];
        BigEndian::write_i32(&mut h[0..], seq as i32 + 1);
        BigEndian::write_u16(&mut h[TR_SAMPLE_COUNT..], samples_per_trace);
        BigEndian::write_u16(&mut h[TR_SAMPLE_INTERVAL..], sample_interval);
        BigEndian::write_i32(&mut h[TR_INLINE..], t.inline);
        BigEndian::write_i32(&mut h[TR_CROSSLINE..], t.crossline);
        pos += TRACE_HEADER_LEN;
        for &v in &t.samples {
            BigEndian::write_u32(&mut out[pos..], format.encode(v));
            pos += 4;
        }
    }
    out
}
