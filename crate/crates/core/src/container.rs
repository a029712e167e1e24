//! `SVTF` container files.
//!
//! Little-endian throughout:
//!
//! ```text
//! "SVTF"  u32 version
//! u32 tile_size, u32 pad, u32 max_atlas_extent, f32 empty_value, f32 empty_threshold
//! u8 format, f64 value_min, f64 value_max
//! u32 x3 virtual dims
//! u32 mip_count, then per mip:
//!     u32 x3 level dims, u32 x3 grid dims, u32 x (grid voxels) packed entries
//! u64 nonempty_voxel_count, u64 x mip_count tile counts,
//! u64 padded_nonempty_voxel_count, f64 mean_tile_occupancy
//! u32 x3 atlas slot dims
//! u64 tile_count, u64 x tile_count record offsets, u64 payload bytes
//! records: occupancy mask + non-empty values, in slot order
//! ```
//!
//! Page-table entries pack the slot as `x | y << 10 | z << 20`, with
//! `0xFFFF_FFFF` for an empty tile.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use thiserror::Error;

use crate::svt::{BuildStats, PageEntry, PageTable, SparseVolumeTexture, SvtConfig, SvtError};
use crate::upload::{apply_upload, partition_windows, serialize_upload, UploadBuffer, UploadError};
use crate::volume::{VolumeDims, VoxelFormat};

const MAGIC: &[u8; 4] = b"SVTF";
const VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ContainerError {
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("CorruptContainer: {0}")]
    Corrupt(String),
    #[error(transparent)]
    Upload(#[from] UploadError),
    #[error(transparent)]
    Svt(#[from] SvtError),
}

fn corrupt<T>(m: impl Into<String>) -> Result<T, ContainerError> {
    Err(ContainerError::Corrupt(m.into()))
}

fn write_dims(w: &mut Vec<u8>, d: VolumeDims) {
    for v in d.as_array() {
        w.write_u32::<LittleEndian>(v).unwrap();
    }
}

/// Serializes `svt` into container bytes.
pub fn encode(svt: &SparseVolumeTexture) -> Vec<u8> {
    let mut w = Vec::new();
    w.extend_from_slice(MAGIC);
    w.write_u32::<LittleEndian>(VERSION).unwrap();
    let c = &svt.config;
    w.write_u32::<LittleEndian>(c.tile_size).unwrap();
    w.write_u32::<LittleEndian>(c.pad).unwrap();
    w.write_u32::<LittleEndian>(c.max_atlas_extent).unwrap();
    w.write_f32::<LittleEndian>(c.empty_value).unwrap();
    w.write_f32::<LittleEndian>(c.empty_threshold).unwrap();
    w.write_u8(svt.format.code()).unwrap();
    w.write_f64::<LittleEndian>(svt.value_range.0).unwrap();
    w.write_f64::<LittleEndian>(svt.value_range.1).unwrap();
    write_dims(&mut w, svt.virtual_dims);
    w.write_u32::<LittleEndian>(svt.mips.len() as u32).unwrap();
    for pt in &svt.mips {
        write_dims(&mut w, pt.level_dims);
        write_dims(&mut w, pt.grid_dims);
        for e in &pt.entries {
            w.write_u32::<LittleEndian>(e.0).unwrap();
        }
    }
    let s = &svt.stats;
    w.write_u64::<LittleEndian>(s.nonempty_voxel_count).unwrap();
    for &n in &s.nonempty_tile_count {
        w.write_u64::<LittleEndian>(n).unwrap();
    }
    w.write_u64::<LittleEndian>(s.padded_nonempty_voxel_count).unwrap();
    w.write_f64::<LittleEndian>(s.mean_tile_occupancy).unwrap();
    write_dims(&mut w, svt.atlas.slot_dims);

    let stream = serialize_upload(svt);
    w.write_u64::<LittleEndian>(stream.tile_count).unwrap();
    for &o in &stream.tile_data_offsets {
        w.write_u64::<LittleEndian>(o).unwrap();
    }
    w.write_u64::<LittleEndian>(stream.total_bytes).unwrap();
    w.extend_from_slice(&stream.data);
    w
}

struct Reader<'a>(&'a [u8]);

impl Reader<'_> {
    fn short(_: std::io::Error) -> ContainerError {
        ContainerError::Corrupt("container truncated".into())
    }
    fn u8(&mut self) -> Result<u8, ContainerError> {
        self.0.read_u8().map_err(Self::short)
    }
    fn u32(&mut self) -> Result<u32, ContainerError> {
        self.0.read_u32::<LittleEndian>().map_err(Self::short)
    }
    fn u64(&mut self) -> Result<u64, ContainerError> {
        self.0.read_u64::<LittleEndian>().map_err(Self::short)
    }
    fn f32(&mut self) -> Result<f32, ContainerError> {
        self.0.read_f32::<LittleEndian>().map_err(Self::short)
    }
    fn f64(&mut self) -> Result<f64, ContainerError> {
        self.0.read_f64::<LittleEndian>().map_err(Self::short)
    }
    fn dims(&mut self) -> Result<VolumeDims, ContainerError> {
        Ok(VolumeDims::new(self.u32()?, self.u32()?, self.u32()?))
    }
    /// Fails early when a count cannot possibly fit in what is left.
    fn ensure(&self, count: u64, width: u64) -> Result<(), ContainerError> {
        if count.saturating_mul(width) > self.0.len() as u64 {
            return corrupt("container truncated");
        }
        Ok(())
    }
}

/// Parses container bytes and rebuilds the atlas from its compressed tiles.
pub fn decode(bytes: &[u8]) -> Result<SparseVolumeTexture, ContainerError> {
    let mut r = Reader(bytes);
    let mut magic = [0u8; 4];
    r.0.read_exact(&mut magic).map_err(Reader::short)?;
    if &magic != MAGIC {
        return corrupt("bad magic");
    }
    let version = r.u32()?;
    if version != VERSION {
        return corrupt(format!("unsupported version {version}"));
    }
    let config = SvtConfig {
        tile_size: r.u32()?,
        pad: r.u32()?,
        max_atlas_extent: r.u32()?,
        empty_value: r.f32()?,
        empty_threshold: r.f32()?,
    }
    .validated()
    .map_err(SvtError::from)?;
    let format = VoxelFormat::from_code(r.u8()?).ok_or_else(|| ContainerError::Corrupt("unknown voxel format".into()))?;
    let value_range = (r.f64()?, r.f64()?);
    let virtual_dims = r.dims()?;
    let mip_count = r.u32()?;
    if mip_count == 0 || mip_count > 64 {
        return corrupt(format!("implausible mip count {mip_count}"));
    }
    let mut mips = Vec::with_capacity(mip_count as usize);
    for _ in 0..mip_count {
        let level_dims = r.dims()?;
        let grid_dims = r.dims()?;
        let n = grid_dims
            .checked_voxel_count()
            .ok_or_else(|| ContainerError::Corrupt("page table too large".into()))?;
        r.ensure(n, 4)?;
        let entries = (0..n).map(|_| r.u32().map(PageEntry)).collect::<Result<_, _>>()?;
        mips.push(PageTable {
            level_dims,
            grid_dims,
            entries,
        });
    }
    let nonempty_voxel_count = r.u64()?;
    let nonempty_tile_count = (0..mip_count).map(|_| r.u64()).collect::<Result<Vec<_>, _>>()?;
    let padded_nonempty_voxel_count = r.u64()?;
    let mean_tile_occupancy = r.f64()?;
    let slot_dims = r.dims()?;

    let tile_count = r.u64()?;
    r.ensure(tile_count, 8)?;
    let offsets = (0..tile_count).map(|_| r.u64()).collect::<Result<Vec<_>, _>>()?;
    let total_bytes = r.u64()?;
    if r.0.len() as u64 != total_bytes {
        return corrupt(format!("tile data holds {} bytes, header says {total_bytes}", r.0.len()));
    }

    let padded = config.padded_size();
    // Element total from the masks, so the window table can be rebuilt.
    let mut elements = 0u64;
    for &o in &offsets {
        let end = o.checked_add(config.mask_bytes() as u64).unwrap_or(u64::MAX);
        let Some(mask) = r.0.get(o as usize..end.min(usize::MAX as u64) as usize) else {
            return corrupt("record offset outside tile data");
        };
        elements += mask.iter().map(|b| b.count_ones() as u64).sum::<u64>();
    }
    let stream = UploadBuffer {
        format,
        padded_size: padded,
        tile_count,
        tile_data_offsets: offsets,
        windows: partition_windows(elements),
        total_elements: elements,
        total_bytes,
        exceeds_uint32: total_bytes >= crate::capacity::UINT32_LIMIT,
        data: r.0.to_vec(),
    };
    let atlas = apply_upload(&stream, &config, &mips)?;
    if atlas.slot_dims != slot_dims {
        return corrupt(format!("atlas slot dims {slot_dims} do not match {} resident tiles", tile_count));
    }

    let svt = SparseVolumeTexture {
        config,
        format,
        value_range,
        virtual_dims,
        mips,
        atlas,
        stats: BuildStats {
            nonempty_voxel_count,
            nonempty_tile_count,
            padded_nonempty_voxel_count,
            mean_tile_occupancy,
        },
    };
    svt.validate()?;
    Ok(svt)
}

pub fn write_svt(path: &Path, svt: &SparseVolumeTexture) -> Result<(), ContainerError> {
    let bytes = encode(svt);
    let mut f = fs::File::create(path).map_err(|e| io_err(path, e))?;
    f.write_all(&bytes).map_err(|e| io_err(path, e))
}

pub fn read_svt(path: &Path) -> Result<SparseVolumeTexture, ContainerError> {
    let bytes = fs::read(path).map_err(|e| io_err(path, e))?;
    decode(&bytes)
}

fn io_err(path: &Path, source: std::io::Error) -> ContainerError {
    ContainerError::Io {
        path: path.display().to_string(),
        source,
    }
}
