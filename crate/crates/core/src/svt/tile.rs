//! Padded tiles and their occupancy masks.

use super::{SvtConfig, SvtError};
use crate::volume::{DenseVolume, VolumeDims};

/// Per-axis tile counts covering `dims`.
pub fn tile_grid_dims(dims: VolumeDims, tile_size: u32) -> VolumeDims {
    assert!(tile_size >= 2, "tile_size must be >= 2");
    dims.div_ceil(tile_size)
}

/// One bit per padded-tile voxel, raster order, LSB first within each byte.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OccupancyMask {
    bits: Vec<u8>,
    len: usize,
}

impl OccupancyMask {
    pub fn new(len: usize) -> Self {
        Self {
            bits: vec![0; len.div_ceil(8)],
            len,
        }
    }

    pub fn from_bytes(bits: Vec<u8>, len: usize) -> Option<Self> {
        if bits.len() != len.div_ceil(8) {
            return None;
        }
        // Trailing bits past `len` must be clear.
        if len % 8 != 0 && bits[bits.len() - 1] >> (len % 8) != 0 {
            return None;
        }
        Some(Self { bits, len })
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        self.bits[i >> 3] & (1 << (i & 7)) != 0
    }

    #[inline]
    pub fn set(&mut self, i: usize) {
        self.bits[i >> 3] |= 1 << (i & 7);
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn count_ones(&self) -> u64 {
        self.bits.iter().map(|b| b.count_ones() as u64).sum()
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.bits
    }
}

/// A logical tile plus its border, stored densely.
#[derive(Debug, Clone, PartialEq)]
pub struct PaddedTile {
    pub tile_coord: [u32; 3],
    pub mip_level: u32,
    /// `padded_size³` values, x fastest.
    pub values: Vec<f32>,
    pub occupancy: OccupancyMask,
}

impl PaddedTile {
    /// Number of values the occupancy-compressed record stores.
    pub fn stored_count(&self) -> u64 {
        self.occupancy.count_ones()
    }
}

/// Copies the tile at `tile_coord` with `config.pad` border voxels on every
/// face. Border reads outside the volume clamp to the nearest edge voxel.
pub fn extract_padded_tile(
    volume: &DenseVolume,
    tile_coord: [u32; 3],
    mip_level: u32,
    config: &SvtConfig,
) -> Result<PaddedTile, SvtError> {
    let grid = tile_grid_dims(volume.dims, config.tile_size);
    if !grid.contains(tile_coord[0], tile_coord[1], tile_coord[2]) {
        return Err(SvtError::OutOfGrid {
            coord: tile_coord,
            grid,
        });
    }
    let cfg = config.for_format(volume.format);
    let p = cfg.padded_size() as i64;
    let t = cfg.tile_size as i64;
    let pad = cfg.pad as i64;
    let origin = tile_coord.map(|c| c as i64 * t - pad);
    let d = volume.dims;

    let mut values = Vec::with_capacity(cfg.padded_voxels());
    let mut occupancy = OccupancyMask::new(cfg.padded_voxels());
    for lz in 0..p {
        let z = (origin[2] + lz).clamp(0, d.z as i64 - 1) as u32;
        for ly in 0..p {
            let y = (origin[1] + ly).clamp(0, d.y as i64 - 1) as u32;
            let row = d.index(0, y, z);
            for lx in 0..p {
                let x = (origin[0] + lx).clamp(0, d.x as i64 - 1) as usize;
                let v = volume.data[row + x];
                if !cfg.is_empty_value(v) {
                    occupancy.set(values.len());
                }
                values.push(v);
            }
        }
    }
    Ok(PaddedTile {
        tile_coord,
        mip_level,
        values,
        occupancy,
    })
}

/// True when every voxel of the logical region (border excluded) is empty.
///
/// The border never makes a tile resident.
pub fn is_tile_empty(tile: &PaddedTile, config: &SvtConfig) -> bool {
    let p = config.padded_size() as usize;
    let lo = config.pad as usize;
    let hi = lo + config.tile_size as usize;
    for z in lo..hi {
        for y in lo..hi {
            let row = p * (y + p * z);
            if (lo..hi).any(|x| tile.occupancy.get(row + x)) {
                return false;
            }
        }
    }
    true
}
