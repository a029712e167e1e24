//! Sparse volume textures: page tables over a shared atlas of padded tiles.
//!
//! Every mip level is cut into `tile_size³` tiles. A tile is resident when
//! any voxel of its logical region is non-empty; resident tiles are copied
//! with a `pad`-voxel border into one slot of the atlas, and the level's page
//! table maps the tile coordinate to that slot. Empty tiles cost one page
//! table entry and nothing else.

mod config;
mod mip;
mod tile;

use thiserror::Error;

use crate::capacity::{self, CapacityInputs, CapacityReport};
use crate::par;
use crate::volume::{DenseVolume, VolumeDims, VolumeError, VoxelFormat};

pub use config::{ConfigError, SvtConfig, MAX_SLOTS_PER_AXIS};
pub use mip::{build_mip_level, mip_count};
pub use tile::{extract_padded_tile, is_tile_empty, tile_grid_dims, OccupancyMask, PaddedTile};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SvtError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Volume(#[from] VolumeError),
    #[error("OutOfGrid: tile {coord:?} outside grid {grid}")]
    OutOfGrid { coord: [u32; 3], grid: VolumeDims },
    #[error("AtlasCapacityExceeded: {required_slots} tile slots required, atlas holds {capacity_slots}")]
    AtlasCapacityExceeded {
        required_slots: u64,
        capacity_slots: u64,
        report: Box<CapacityReport>,
    },
    #[error("InvalidTexture: {0}")]
    Invalid(String),
}

/// A page-table entry: an atlas slot coordinate or empty.
///
/// Packed as `x | y << 10 | z << 20`; all ones means empty.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PageEntry(pub u32);

impl PageEntry {
    pub const EMPTY: PageEntry = PageEntry(u32::MAX);

    pub fn slot(x: u32, y: u32, z: u32) -> Self {
        debug_assert!(x < MAX_SLOTS_PER_AXIS && y < MAX_SLOTS_PER_AXIS && z < MAX_SLOTS_PER_AXIS);
        PageEntry(x | y << 10 | z << 20)
    }

    #[inline]
    pub fn is_empty(self) -> bool {
        self == Self::EMPTY
    }

    #[inline]
    pub fn slot_coord(self) -> Option<[u32; 3]> {
        if self.is_empty() {
            None
        } else {
            Some([self.0 & 0x3ff, (self.0 >> 10) & 0x3ff, (self.0 >> 20) & 0x3ff])
        }
    }
}

/// Tile index for one mip level.
#[derive(Debug, Clone, PartialEq)]
pub struct PageTable {
    /// Voxel dimensions of this level.
    pub level_dims: VolumeDims,
    pub grid_dims: VolumeDims,
    /// One entry per tile, x fastest.
    pub entries: Vec<PageEntry>,
}

impl PageTable {
    #[inline]
    pub fn entry(&self, tx: u32, ty: u32, tz: u32) -> PageEntry {
        self.entries[self.grid_dims.index(tx, ty, tz)]
    }

    pub fn resident_count(&self) -> u64 {
        self.entries.iter().filter(|e| !e.is_empty()).count() as u64
    }
}

/// The physical tile store: slots of `padded_size³` voxels.
#[derive(Debug, Clone, PartialEq)]
pub struct TileAtlas {
    /// Atlas shape in slots.
    pub slot_dims: VolumeDims,
    /// Atlas shape in voxels (`slot_dims * padded_size`).
    pub dims: VolumeDims,
    pub data: Vec<f32>,
}

impl TileAtlas {
    pub fn new(slot_dims: VolumeDims, padded: u32, fill: f32) -> Self {
        let dims = VolumeDims::new(slot_dims.x * padded, slot_dims.y * padded, slot_dims.z * padded);
        Self {
            slot_dims,
            dims,
            data: vec![fill; dims.voxel_count() as usize],
        }
    }

    pub fn slot_capacity(&self) -> u64 {
        self.slot_dims.voxel_count()
    }

    /// Slot coordinate of the `i`-th slot in assignment order.
    pub fn slot_coord(&self, i: u64) -> [u32; 3] {
        slot_coord(self.slot_dims, i)
    }

    /// Copies the padded block stored in slot `coord`.
    pub fn read_slot(&self, coord: [u32; 3], padded: u32) -> Vec<f32> {
        let p = padded as usize;
        let mut out = Vec::with_capacity(p * p * p);
        for lz in 0..padded {
            for ly in 0..padded {
                let row = self.dims.index(coord[0] * padded, coord[1] * padded + ly, coord[2] * padded + lz);
                out.extend_from_slice(&self.data[row..row + p]);
            }
        }
        out
    }

    /// Overwrites slot `coord` with a padded block.
    pub fn write_slot(&mut self, coord: [u32; 3], padded: u32, block: &[f32]) {
        let p = padded as usize;
        assert_eq!(block.len(), p * p * p);
        for (i, src) in block.chunks_exact(p).enumerate() {
            let ly = (i % p) as u32;
            let lz = (i / p) as u32;
            let row = self.dims.index(coord[0] * padded, coord[1] * padded + ly, coord[2] * padded + lz);
            self.data[row..row + p].copy_from_slice(src);
        }
    }
}

pub(crate) fn slot_coord(slot_dims: VolumeDims, i: u64) -> [u32; 3] {
    let sx = slot_dims.x as u64;
    let sy = slot_dims.y as u64;
    [(i % sx) as u32, ((i / sx) % sy) as u32, (i / (sx * sy)) as u32]
}

/// Smallest slot box for `slots` tiles: `s × min(s, ⌈n/s⌉) × ⌈n/(s·y)⌉` with
/// `s = ⌈∛n⌉`. An empty texture still gets one slot.
pub fn atlas_slot_dims(slots: u64, config: &SvtConfig) -> Result<VolumeDims, u64> {
    let n = slots.max(1);
    let s = capacity::ceil_cbrt(n);
    if s > config.max_slots_per_axis() as u64 {
        return Err(s);
    }
    let y = n.div_ceil(s).min(s);
    let z = n.div_ceil(s * y);
    Ok(VolumeDims::new(s as u32, y as u32, z as u32))
}

#[derive(Debug, Clone, PartialEq)]
pub struct BuildStats {
    /// Non-empty voxels of the source volume (mip 0, border excluded).
    pub nonempty_voxel_count: u64,
    /// Resident tiles per mip level.
    pub nonempty_tile_count: Vec<u64>,
    /// Non-empty stored voxels (border included) summed over all resident
    /// tiles of all levels; the payload the upload stream carries.
    pub padded_nonempty_voxel_count: u64,
    /// `nonempty_voxel_count / (resident mip-0 tiles · tile_size³)`.
    pub mean_tile_occupancy: f64,
}

impl BuildStats {
    pub fn total_tiles(&self) -> u64 {
        self.nonempty_tile_count.iter().sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SparseVolumeTexture {
    pub config: SvtConfig,
    pub format: VoxelFormat,
    pub value_range: (f64, f64),
    pub virtual_dims: VolumeDims,
    /// Level 0 is full resolution.
    pub mips: Vec<PageTable>,
    pub atlas: TileAtlas,
    pub stats: BuildStats,
}

impl SparseVolumeTexture {
    pub fn mip_count(&self) -> u32 {
        self.mips.len() as u32
    }

    /// Slot assignment order: `(mip, page-table index)` of each resident tile.
    pub fn resident_tiles(&self) -> impl Iterator<Item = (u32, usize, [u32; 3])> + '_ {
        self.mips.iter().enumerate().flat_map(|(m, pt)| {
            pt.entries
                .iter()
                .enumerate()
                .filter_map(move |(i, e)| e.slot_coord().map(|c| (m as u32, i, c)))
        })
    }

    /// Checks structural invariants of a texture from an untrusted source.
    pub fn validate(&self) -> Result<(), SvtError> {
        let bad = |m: String| Err(SvtError::Invalid(m));
        let cfg = self.config.validated()?;
        let p = cfg.padded_size();
        if self.mips.is_empty() {
            return bad("no mip levels".into());
        }
        let mut dims = self.virtual_dims.validate()?;
        for (m, pt) in self.mips.iter().enumerate() {
            if pt.level_dims != dims {
                return bad(format!("mip {m} has dims {}, expected {dims}", pt.level_dims));
            }
            if pt.grid_dims != tile_grid_dims(dims, cfg.tile_size) {
                return bad(format!("mip {m} grid {} does not cover {dims}", pt.grid_dims));
            }
            if pt.entries.len() as u64 != pt.grid_dims.voxel_count() {
                return bad(format!("mip {m} has {} entries", pt.entries.len()));
            }
            dims = dims.div_ceil(2);
        }
        let a = &self.atlas;
        if a.dims != VolumeDims::new(a.slot_dims.x * p, a.slot_dims.y * p, a.slot_dims.z * p)
            || a.data.len() as u64 != a.dims.voxel_count()
            || a.dims.max_axis() > cfg.max_atlas_extent
        {
            return bad(format!("atlas {} inconsistent with {} slots", a.dims, a.slot_dims));
        }
        let mut used = vec![false; a.slot_capacity() as usize];
        for (m, _, c) in self.resident_tiles() {
            if !a.slot_dims.contains(c[0], c[1], c[2]) {
                return bad(format!("mip {m} entry {c:?} outside atlas"));
            }
            if std::mem::replace(&mut used[a.slot_dims.index(c[0], c[1], c[2])], true) {
                return bad(format!("slot {c:?} referenced twice"));
            }
        }
        Ok(())
    }
}

/// One tile scheduled for a slot.
#[derive(Clone, Copy)]
struct Resident {
    level: u32,
    tile: [u32; 3],
}

/// Tiles the volume and its mip chain into a sparse texture.
///
/// Resident tiles take slots in `(mip, tz, ty, tx)` row-major order. Border
/// voxels come from the source level (clamped at the volume edge), never from
/// neighbouring stored tiles. Values the config classifies as empty are
/// stored as exactly `empty_value`.
pub fn build_svt(volume: &DenseVolume, config: &SvtConfig) -> Result<SparseVolumeTexture, SvtError> {
    let cfg = config.validated()?.for_format(volume.format);
    volume.dims.validate()?;

    let count = mip_count(volume.dims, cfg.tile_size);
    let mut owned_levels: Vec<DenseVolume> = Vec::with_capacity(count as usize - 1);
    for _ in 1..count {
        let prev = owned_levels.last().unwrap_or(volume);
        owned_levels.push(build_mip_level(prev));
    }
    let levels: Vec<&DenseVolume> = std::iter::once(volume).chain(owned_levels.iter()).collect();

    // Residency and logical occupancy per tile.
    let t = cfg.tile_size;
    let mut residents = Vec::new();
    let mut nonempty_tile_count = Vec::with_capacity(levels.len());
    let mut nonempty_voxel_count = 0u64;
    let mut grids = Vec::with_capacity(levels.len());
    for (m, level) in levels.iter().enumerate() {
        let grid = tile_grid_dims(level.dims, t);
        let counts = par::map_indexed(grid.voxel_count() as usize, |i| {
            let c = slot_coord(grid, i as u64);
            logical_nonempty(level, c, &cfg)
        });
        if m == 0 {
            nonempty_voxel_count = counts.iter().sum();
        }
        let before = residents.len();
        for (i, &n) in counts.iter().enumerate() {
            if n > 0 {
                residents.push(Resident {
                    level: m as u32,
                    tile: slot_coord(grid, i as u64),
                });
            }
        }
        nonempty_tile_count.push((residents.len() - before) as u64);
        grids.push(grid);
    }

    let required = residents.len() as u64;
    let slot_dims = match atlas_slot_dims(required, &cfg) {
        Ok(d) => d,
        Err(_) => {
            let report = capacity::check_overflow(
                &CapacityInputs::new(nonempty_voxel_count, volume.format.bytes_per_voxel(), cfg)
                    .with_tile_counts(nonempty_tile_count.clone()),
            );
            return Err(SvtError::AtlasCapacityExceeded {
                required_slots: required,
                capacity_slots: cfg.slot_capacity(),
                report: Box::new(report),
            });
        }
    };

    let p = cfg.padded_size();
    let mut atlas = TileAtlas::new(slot_dims, p, cfg.empty_value);
    let mut mips: Vec<PageTable> = levels
        .iter()
        .zip(&grids)
        .map(|(l, &g)| PageTable {
            level_dims: l.dims,
            grid_dims: g,
            entries: vec![PageEntry::EMPTY; g.voxel_count() as usize],
        })
        .collect();
    for (i, r) in residents.iter().enumerate() {
        let c = slot_coord(slot_dims, i as u64);
        let pt = &mut mips[r.level as usize];
        let idx = pt.grid_dims.index(r.tile[0], r.tile[1], r.tile[2]);
        pt.entries[idx] = PageEntry::slot(c[0], c[1], c[2]);
    }

    // Fill the atlas one slot layer (a contiguous z-slab) at a time.
    let per_layer = (slot_dims.x * slot_dims.y) as usize;
    let layer_len = atlas.dims.x as usize * atlas.dims.y as usize * p as usize;
    let atlas_dims = atlas.dims;
    let popcounts = par::map_chunks_mut(&mut atlas.data, layer_len, |layer, slab| {
        let first = layer * per_layer;
        let last = ((layer + 1) * per_layer).min(residents.len());
        let mut stored = 0u64;
        for (i, r) in residents.iter().enumerate().take(last).skip(first) {
            let c = slot_coord(slot_dims, i as u64);
            let tile = extract_padded_tile(levels[r.level as usize], r.tile, r.level, &cfg)
                .expect("resident tile inside grid");
            stored += tile.stored_count();
            for (row_i, src) in tile.values.chunks_exact(p as usize).enumerate() {
                let ly = (row_i % p as usize) as u32;
                let lz = (row_i / p as usize) as u32;
                let at = atlas_dims.index(c[0] * p, c[1] * p + ly, lz);
                let dst = &mut slab[at..at + p as usize];
                for (k, (d, &v)) in dst.iter_mut().zip(src).enumerate() {
                    *d = if tile.occupancy.get(row_i * p as usize + k) {
                        v
                    } else {
                        cfg.empty_value
                    };
                }
            }
        }
        stored
    });

    let mip0_tiles = nonempty_tile_count[0];
    let stats = BuildStats {
        nonempty_voxel_count,
        padded_nonempty_voxel_count: popcounts.iter().sum(),
        mean_tile_occupancy: if mip0_tiles == 0 {
            0.0
        } else {
            nonempty_voxel_count as f64 / (mip0_tiles as f64 * (t as f64).powi(3))
        },
        nonempty_tile_count,
    };

    Ok(SparseVolumeTexture {
        config: cfg,
        format: volume.format,
        value_range: volume.value_range,
        virtual_dims: volume.dims,
        mips,
        atlas,
        stats,
    })
}

/// Non-empty voxels in the logical (unpadded) part of a tile.
fn logical_nonempty(volume: &DenseVolume, tile: [u32; 3], cfg: &SvtConfig) -> u64 {
    let t = cfg.tile_size;
    let d = volume.dims;
    let lo = tile.map(|c| c * t);
    let hi = [(lo[0] + t).min(d.x), (lo[1] + t).min(d.y), (lo[2] + t).min(d.z)];
    let mut n = 0u64;
    for z in lo[2]..hi[2] {
        for y in lo[1]..hi[1] {
            let row = d.index(0, y, z);
            n += volume.data[row + lo[0] as usize..row + hi[0] as usize]
                .iter()
                .filter(|&&v| !cfg.is_empty_value(v))
                .count() as u64;
        }
    }
    n
}
