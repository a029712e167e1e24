//! Headerless binary volumes with a key:value text sidecar.
//!
//! Sidecar layout, one `key: value` per line:
//!
//! ```text
//! dims: 64 64 32
//! format: f32
//! endianness: little
//! value_range: -34.5 36.45
//! ```
//!
//! `value_range` is optional and only recorded for provenance.

use std::fs;
use std::path::{Path, PathBuf};

use byteorder::{BigEndian, ByteOrder, LittleEndian};

use super::IngestError;
use crate::volume::{DenseVolume, Endianness, VolumeDims, VoxelFormat};

#[derive(Debug, Clone, PartialEq)]
pub struct RawSidecar {
    pub dims: VolumeDims,
    pub format: VoxelFormat,
    pub endianness: Endianness,
    pub value_range: Option<(f64, f64)>,
}

impl RawSidecar {
    pub fn parse(text: &str) -> Result<Self, IngestError> {
        let bad = |m: String| IngestError::BadSidecar(m);
        let mut dims = None;
        let mut format = None;
        let mut endianness = Endianness::Little;
        let mut value_range = None;
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once(':')
                .ok_or_else(|| bad(format!("line {}: expected `key: value`", lineno + 1)))?;
            let value = value.trim();
            match key.trim() {
                "dims" => {
                    let parts = parse_numbers::<u32>(value)
                        .filter(|p| p.len() == 3)
                        .ok_or_else(|| bad(format!("dims must be three integers, got `{value}`")))?;
                    dims = Some(VolumeDims::new(parts[0], parts[1], parts[2]));
                }
                "format" => {
                    format = Some(
                        VoxelFormat::from_name(value)
                            .ok_or_else(|| bad(format!("unknown format `{value}`")))?,
                    );
                }
                "endianness" => {
                    endianness = Endianness::from_name(value)
                        .ok_or_else(|| bad(format!("unknown endianness `{value}`")))?;
                }
                "value_range" => {
                    let parts = parse_numbers::<f64>(value)
                        .filter(|p| p.len() == 2)
                        .ok_or_else(|| bad(format!("value_range must be two numbers, got `{value}`")))?;
                    value_range = Some((parts[0], parts[1]));
                }
                other => return Err(bad(format!("unknown key `{other}`"))),
            }
        }
        Ok(Self {
            dims: dims.ok_or_else(|| bad("missing `dims`".into()))?,
            format: format.ok_or_else(|| bad("missing `format`".into()))?,
            endianness,
            value_range,
        })
    }

    pub fn render(&self) -> String {
        let mut s = format!(
            "dims: {} {} {}\nformat: {}\nendianness: {}\n",
            self.dims.x,
            self.dims.y,
            self.dims.z,
            self.format.name(),
            self.endianness.name()
        );
        if let Some((lo, hi)) = self.value_range {
            s.push_str(&format!("value_range: {lo} {hi}\n"));
        }
        s
    }
}

fn parse_numbers<T: std::str::FromStr>(s: &str) -> Option<Vec<T>> {
    s.split(|c: char| c.is_whitespace() || c == ',' || c == 'x')
        .filter(|p| !p.is_empty())
        .map(|p| p.parse().ok())
        .collect()
}

/// The sidecar that accompanies `raw`: the same path with `.txt` appended.
pub fn sidecar_path(raw: &Path) -> PathBuf {
    let mut s = raw.as_os_str().to_owned();
    s.push(".txt");
    PathBuf::from(s)
}

/// Reads a headerless volume, converting byte order to host.
pub fn read_raw(
    path: &Path,
    dims: VolumeDims,
    format: VoxelFormat,
    endianness: Endianness,
) -> Result<DenseVolume, IngestError> {
    let dims = dims.validate()?;
    let bytes = fs::read(path).map_err(|e| IngestError::io(path, e))?;
    let expected = dims
        .checked_voxel_count()
        .and_then(|n| n.checked_mul(format.bytes_per_voxel() as u64))
        .ok_or(crate::volume::VolumeError::VoxelCountOverflow(dims))?;
    if bytes.len() as u64 != expected {
        return Err(IngestError::SizeMismatch {
            expected,
            actual: bytes.len() as u64,
        });
    }
    let data: Vec<f32> = match format {
        VoxelFormat::Unsigned8Normalized => bytes.iter().map(|&b| b as f32).collect(),
        VoxelFormat::Float32 => {
            let mut out = vec![0f32; bytes.len() / 4];
            match endianness {
                Endianness::Little => LittleEndian::read_f32_into(&bytes, &mut out),
                Endianness::Big => BigEndian::read_f32_into(&bytes, &mut out),
            }
            out
        }
    };
    Ok(DenseVolume::new(dims, format, data)?)
}

/// Reads `raw` using the dimensions and format stored in its sidecar.
pub fn read_raw_with_sidecar(raw: &Path) -> Result<DenseVolume, IngestError> {
    let side = sidecar_path(raw);
    let text = fs::read_to_string(&side).map_err(|e| IngestError::io(&side, e))?;
    let meta = RawSidecar::parse(&text)?;
    let mut vol = read_raw(raw, meta.dims, meta.format, meta.endianness)?;
    if let Some(r) = meta.value_range {
        vol.value_range = r;
    }
    Ok(vol)
}

/// Writes `volume` as little-endian raw bytes plus its sidecar.
pub fn write_raw(path: &Path, volume: &DenseVolume) -> Result<(), IngestError> {
    let bytes: Vec<u8> = match volume.format {
        VoxelFormat::Unsigned8Normalized => volume.data.iter().map(|&v| v as u8).collect(),
        VoxelFormat::Float32 => {
            let mut out = vec![0u8; volume.data.len() * 4];
            LittleEndian::write_f32_into(&volume.data, &mut out);
            out
        }
    };
    fs::write(path, bytes).map_err(|e| IngestError::io(path, e))?;
    let meta = RawSidecar {
        dims: volume.dims,
        format: volume.format,
        endianness: Endianness::Little,
        value_range: Some(volume.value_range),
    };
    let side = sidecar_path(path);
    fs::write(&side, meta.render()).map_err(|e| IngestError::io(&side, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_zero_u8() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("z.raw");
        fs::write(&p, [0u8; 8]).unwrap();
        let v = read_raw(&p, VolumeDims::cube(2), VoxelFormat::Unsigned8Normalized, Endianness::Little)
            .unwrap();
        assert_eq!(v.value_range, (0.0, 0.0));
        assert_eq!(v.data, vec![0.0; 8]);
    }

    #[test]
    fn big_endian_float() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("f.raw");
        fs::write(&p, [0x42, 0xC8, 0x00, 0x00]).unwrap();
        let v = read_raw(&p, VolumeDims::cube(1), VoxelFormat::Float32, Endianness::Big).unwrap();
        assert_eq!(v.data, [100.0]);
        let le = read_raw(&p, VolumeDims::cube(1), VoxelFormat::Float32, Endianness::Little).unwrap();
        assert_eq!(le.data[0], f32::from_le_bytes([0x42, 0xC8, 0, 0]));
    }

    #[test]
    fn size_mismatch() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("short.raw");
        fs::write(&p, [0u8; 7]).unwrap();
        let err = read_raw(&p, VolumeDims::cube(2), VoxelFormat::Unsigned8Normalized, Endianness::Little)
            .unwrap_err();
        assert!(matches!(err, IngestError::SizeMismatch { expected: 8, actual: 7 }));
    }

    #[test]
    fn missing_file_is_io_error() {
        let err = read_raw(
            Path::new("/nonexistent/volume.raw"),
            VolumeDims::cube(2),
            VoxelFormat::Float32,
            Endianness::Little,
        )
        .unwrap_err();
        assert!(matches!(err, IngestError::Io { .. }));
    }

    #[test]
    fn sidecar_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("v.raw");
        let vol = DenseVolume::from_fn(VolumeDims::new(3, 2, 2), VoxelFormat::Float32, |x, y, z| {
            x as f32 - 2.5 * y as f32 + z as f32 * 0.25
        })
        .unwrap();
        write_raw(&p, &vol).unwrap();
        let back = read_raw_with_sidecar(&p).unwrap();
        assert_eq!(back, vol);
    }

    #[test]
    fn sidecar_parse_errors() {
        assert!(RawSidecar::parse("format: f32\n").is_err());
        assert!(RawSidecar::parse("dims: 1 2\nformat: f32\n").is_err());
        assert!(RawSidecar::parse("dims: 1 2 3\nformat: f16\n").is_err());
        assert!(RawSidecar::parse("dims: 1 2 3\nformat: u8\ncolor: red\n").is_err());
        let ok = RawSidecar::parse("# comment\ndims: 4x5x6\nformat: u8\nendianness: big\n").unwrap();
        assert_eq!(ok.dims, VolumeDims::new(4, 5, 6));
        assert_eq!(ok.endianness, Endianness::Big);
    }
}
