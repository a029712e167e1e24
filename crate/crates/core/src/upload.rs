//! Occupancy-compressed upload stream.
//!
//! One record per resident tile, in atlas slot order: the tile's occupancy
//! mask (`ceil(padded³ / 8)` bytes) followed by its non-empty values in
//! padded raster order, each `bytes_per_voxel` wide, little-endian. Record
//! offsets are `u64`. The value stream is cut into windows of at most
//! [`WINDOW_ELEMENTS`] values, and expansion into the atlas proceeds one
//! window at a time.

use std::io::{Read, Write};

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use thiserror::Error;

use crate::capacity::UINT32_LIMIT;
use crate::par;
use crate::svt::{atlas_slot_dims, BuildStats, OccupancyMask, PageTable, SparseVolumeTexture, SvtConfig, TileAtlas};
use crate::volume::VoxelFormat;

/// Largest number of values applied in one window.
pub const WINDOW_ELEMENTS: u64 = 1 << 27;

const MAGIC: &[u8; 4] = b"SVTU";
const VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum UploadError {
    #[error("CorruptStream: {0}")]
    CorruptStream(String),
    #[error("Uint32OverflowFlagged: SVT streaming data overflowed the uint32 range ({total_bytes} bytes)")]
    Uint32OverflowFlagged { total_bytes: u64 },
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

fn corrupt<T>(msg: impl Into<String>) -> Result<T, UploadError> {
    Err(UploadError::CorruptStream(msg.into()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct UploadWindow {
    pub start_element: u64,
    pub element_count: u64,
}

/// Greedy partition of `elements` values into windows.
pub fn partition_windows(elements: u64) -> Vec<UploadWindow> {
    let n = elements.div_ceil(WINDOW_ELEMENTS);
    (0..n)
        .map(|i| {
            let start = i * WINDOW_ELEMENTS;
            UploadWindow {
                start_element: start,
                element_count: (elements - start).min(WINDOW_ELEMENTS),
            }
        })
        .collect()
}

/// Stream size arithmetic without materializing any data.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct UploadLayout {
    pub tile_count: u64,
    pub payload_elements: u64,
    pub bytes_per_element: u32,
    pub mask_bytes: u32,
}

impl UploadLayout {
    pub fn new(tile_count: u64, payload_elements: u64, format: VoxelFormat, config: &SvtConfig) -> Self {
        Self {
            tile_count,
            payload_elements,
            bytes_per_element: format.bytes_per_voxel(),
            mask_bytes: config.mask_bytes() as u32,
        }
    }

    /// Layout of the stream a build with these stats would produce.
    pub fn from_stats(stats: &BuildStats, format: VoxelFormat, config: &SvtConfig) -> Self {
        Self::new(stats.total_tiles(), stats.padded_nonempty_voxel_count, format, config)
    }

    /// Start of record `tile_index`, given the values stored before it.
    pub fn record_offset(&self, tile_index: u64, elements_before: u64) -> Option<u64> {
        tile_index
            .checked_mul(self.mask_bytes as u64)?
            .checked_add(elements_before.checked_mul(self.bytes_per_element as u64)?)
    }

    pub fn total_bytes(&self) -> Option<u64> {
        self.record_offset(self.tile_count, self.payload_elements)
    }

    pub fn window_count(&self) -> u64 {
        self.payload_elements.div_ceil(WINDOW_ELEMENTS)
    }

    pub fn exceeds_uint32(&self) -> bool {
        self.total_bytes().is_none_or(|b| b >= UINT32_LIMIT)
    }

    /// The engine-side guard: streams of 2³² bytes or more are refused.
    pub fn check(&self) -> Result<(), UploadError> {
        if self.exceeds_uint32() {
            return Err(UploadError::Uint32OverflowFlagged {
                total_bytes: self.total_bytes().unwrap_or(u64::MAX),
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct UploadBuffer {
    pub format: VoxelFormat,
    pub padded_size: u32,
    pub tile_count: u64,
    /// Byte offset of each record in `data`.
    pub tile_data_offsets: Vec<u64>,
    pub windows: Vec<UploadWindow>,
    pub total_elements: u64,
    pub total_bytes: u64,
    /// Set when `total_bytes >= 2³²`; the buffer is still complete.
    pub exceeds_uint32: bool,
    pub data: Vec<u8>,
}

impl UploadBuffer {
    pub fn mask_bytes(&self) -> usize {
        (self.padded_size as usize).pow(3).div_ceil(8)
    }

    pub fn check(&self) -> Result<(), UploadError> {
        if self.exceeds_uint32 {
            return Err(UploadError::Uint32OverflowFlagged {
                total_bytes: self.total_bytes,
            });
        }
        Ok(())
    }

    pub fn write_to(&self, w: &mut impl Write) -> Result<(), UploadError> {
        w.write_all(MAGIC)?;
        w.write_u32::<LittleEndian>(VERSION)?;
        w.write_u8(self.format.code())?;
        w.write_u32::<LittleEndian>(self.padded_size)?;
        w.write_u64::<LittleEndian>(self.tile_count)?;
        w.write_u64::<LittleEndian>(self.total_elements)?;
        w.write_u64::<LittleEndian>(self.windows.len() as u64)?;
        for win in &self.windows {
            w.write_u64::<LittleEndian>(win.start_element)?;
            w.write_u64::<LittleEndian>(win.element_count)?;
        }
        for &o in &self.tile_data_offsets {
            w.write_u64::<LittleEndian>(o)?;
        }
        w.write_u64::<LittleEndian>(self.total_bytes)?;
        w.write_all(&self.data)?;
        Ok(())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.data.len() + 64 + 8 * self.tile_data_offsets.len());
        self.write_to(&mut out).expect("writing to a Vec cannot fail");
        out
    }

    /// Parses a dump written by [`UploadBuffer::write_to`]. Structure is
    /// checked here; record contents are checked by [`apply_upload`].
    pub fn from_bytes(bytes: &[u8]) -> Result<Self, UploadError> {
        let mut r = bytes;
        let short = |_| UploadError::CorruptStream("stream truncated in header".into());
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic).map_err(short)?;
        if &magic != MAGIC {
            return corrupt("bad magic");
        }
        let version = r.read_u32::<LittleEndian>().map_err(short)?;
        if version != VERSION {
            return corrupt(format!("unsupported version {version}"));
        }
        let format = VoxelFormat::from_code(r.read_u8().map_err(short)?)
            .ok_or_else(|| UploadError::CorruptStream("unknown voxel format".into()))?;
        let padded_size = r.read_u32::<LittleEndian>().map_err(short)?;
        if padded_size == 0 || padded_size > 1024 {
            return corrupt(format!("implausible padded tile size {padded_size}"));
        }
        let tile_count = r.read_u64::<LittleEndian>().map_err(short)?;
        let total_elements = r.read_u64::<LittleEndian>().map_err(short)?;
        let window_count = r.read_u64::<LittleEndian>().map_err(short)?;
        // Each table entry needs bytes; bound counts by what is left.
        if window_count.saturating_mul(16) > r.len() as u64 {
            return corrupt("window table truncated");
        }
        let mut windows = Vec::with_capacity(window_count as usize);
        for _ in 0..window_count {
            windows.push(UploadWindow {
                start_element: r.read_u64::<LittleEndian>().map_err(short)?,
                element_count: r.read_u64::<LittleEndian>().map_err(short)?,
            });
        }
        if tile_count.saturating_mul(8) > r.len() as u64 {
            return corrupt("offset table truncated");
        }
        let mut offsets = Vec::with_capacity(tile_count as usize);
        for _ in 0..tile_count {
            offsets.push(r.read_u64::<LittleEndian>().map_err(short)?);
        }
        let total_bytes = r.read_u64::<LittleEndian>().map_err(short)?;
        if r.len() as u64 != total_bytes {
            return corrupt(format!("payload holds {} bytes, header says {total_bytes}", r.len()));
        }
        Ok(Self {
            format,
            padded_size,
            tile_count,
            tile_data_offsets: offsets,
            windows,
            total_elements,
            total_bytes,
            exceeds_uint32: total_bytes >= UINT32_LIMIT,
            data: r.to_vec(),
        })
    }
}

fn encode_value(format: VoxelFormat, v: f32, out: &mut Vec<u8>) {
    match format {
        VoxelFormat::Unsigned8Normalized => out.push(v as u8),
        VoxelFormat::Float32 => out.extend_from_slice(&v.to_le_bytes()),
    }
}

fn decode_value(format: VoxelFormat, b: &[u8]) -> f32 {
    match format {
        VoxelFormat::Unsigned8Normalized => b[0] as f32,
        VoxelFormat::Float32 => f32::from_le_bytes([b[0], b[1], b[2], b[3]]),
    }
}

/// Compresses every resident tile of `svt` into one stream.
///
/// Streams of 2³² bytes or more are still produced; their
/// `exceeds_uint32` flag is set and [`UploadBuffer::check`] fails.
pub fn serialize_upload(svt: &SparseVolumeTexture) -> UploadBuffer {
    let cfg = &svt.config;
    let p = cfg.padded_size();
    let slots: Vec<[u32; 3]> = svt.resident_tiles().map(|(_, _, c)| c).collect();
    let records: Vec<(Vec<u8>, u64)> = par::map_indexed(slots.len(), |i| {
        let block = svt.atlas.read_slot(slots[i], p);
        let mut mask = OccupancyMask::new(block.len());
        let mut values = Vec::new();
        for (k, &v) in block.iter().enumerate() {
            if !cfg.is_empty_value(v) {
                mask.set(k);
                encode_value(svt.format, v, &mut values);
            }
        }
        let count = mask.count_ones();
        let mut rec = Vec::with_capacity(mask.as_bytes().len() + values.len());
        rec.extend_from_slice(mask.as_bytes());
        rec.extend_from_slice(&values);
        (rec, count)
    });

    let mut offsets = Vec::with_capacity(records.len());
    let mut data = Vec::with_capacity(records.iter().map(|r| r.0.len()).sum());
    let mut elements = 0u64;
    for (rec, count) in &records {
        offsets.push(data.len() as u64);
        data.extend_from_slice(rec);
        elements += count;
    }
    let layout = UploadLayout::new(records.len() as u64, elements, svt.format, cfg);
    debug_assert_eq!(layout.total_bytes(), Some(data.len() as u64));
    UploadBuffer {
        format: svt.format,
        padded_size: p,
        tile_count: records.len() as u64,
        tile_data_offsets: offsets,
        windows: partition_windows(elements),
        total_elements: elements,
        total_bytes: data.len() as u64,
        exceeds_uint32: layout.exceeds_uint32(),
        data,
    }
}

/// Walks the value stream across tile records.
struct Cursor<'a> {
    buf: &'a UploadBuffer,
    config: &'a SvtConfig,
    slot_dims: crate::volume::VolumeDims,
    /// Index of the next record to open.
    next: usize,
    /// Mask of the open record (`next - 1`).
    mask: Option<OccupancyMask>,
    bit: usize,
    byte: usize,
}

impl<'a> Cursor<'a> {
    fn open_next(&mut self) -> Result<(), UploadError> {
        let i = self.next;
        let start = self.buf.tile_data_offsets[i];
        if start != self.byte as u64 {
            return corrupt(format!("record {i} starts at {start}, previous record ends at {}", self.byte));
        }
        let pv = self.config.padded_voxels();
        let mb = self.buf.mask_bytes();
        let Some(end) = self.byte.checked_add(mb).filter(|&e| e <= self.buf.data.len()) else {
            return corrupt(format!("record {i} mask truncated"));
        };
        let mask = OccupancyMask::from_bytes(self.buf.data[self.byte..end].to_vec(), pv)
            .ok_or_else(|| UploadError::CorruptStream(format!("record {i} mask has stray bits")))?;
        let need = mask.count_ones() as usize * self.buf.format.bytes_per_voxel() as usize;
        if end + need > self.buf.data.len() {
            return corrupt(format!("record {i} payload truncated"));
        }
        self.byte = end;
        self.bit = 0;
        self.mask = Some(mask);
        self.next += 1;
        Ok(())
    }

    /// Moves to the next set occupancy bit, opening records as needed.
    fn seek_value(&mut self) -> Result<(), UploadError> {
        let pv = self.config.padded_voxels();
        loop {
            if let Some(mask) = &self.mask {
                while self.bit < pv && !mask.get(self.bit) {
                    self.bit += 1;
                }
                if self.bit < pv {
                    return Ok(());
                }
                self.mask = None;
            }
            if self.next >= self.buf.tile_data_offsets.len() {
                return corrupt("windows cover more values than the records hold");
            }
            self.open_next()?;
        }
    }

    fn write_next(&mut self, atlas: &mut TileAtlas) -> Result<(), UploadError> {
        self.seek_value()?;
        let width = self.buf.format.bytes_per_voxel() as usize;
        let v = decode_value(self.buf.format, &self.buf.data[self.byte..self.byte + width]);
        let p = self.config.padded_size();
        let pu = p as usize;
        let slot = crate::svt::slot_coord(self.slot_dims, (self.next - 1) as u64);
        let (lx, ly, lz) = (self.bit % pu, (self.bit / pu) % pu, self.bit / (pu * pu));
        let at = atlas.dims.index(
            slot[0] * p + lx as u32,
            slot[1] * p + ly as u32,
            slot[2] * p + lz as u32,
        );
        atlas.data[at] = v;
        self.byte += width;
        self.bit += 1;
        Ok(())
    }

    /// Checks that no record holds values beyond the last window.
    fn finish(mut self) -> Result<(), UploadError> {
        let pv = self.config.padded_voxels();
        loop {
            if let Some(mask) = self.mask.take() {
                if (self.bit..pv).any(|b| mask.get(b)) {
                    return corrupt("records hold more values than the windows cover");
                }
            }
            if self.next >= self.buf.tile_data_offsets.len() {
                break;
            }
            self.open_next()?;
        }
        if self.byte != self.buf.data.len() {
            return corrupt(format!("{} trailing payload bytes", self.buf.data.len() - self.byte));
        }
        Ok(())
    }
}

/// Expands `buffer` into a fresh atlas laid out for `page_tables`.
///
/// Values are applied strictly window by window; positions whose occupancy
/// bit is clear keep `empty_value`.
pub fn apply_upload(
    buffer: &UploadBuffer,
    config: &SvtConfig,
    page_tables: &[PageTable],
) -> Result<TileAtlas, UploadError> {
    let cfg = config.for_format(buffer.format);
    if buffer.padded_size != cfg.padded_size() {
        return corrupt(format!(
            "stream tiles are {}³, config expects {}³",
            buffer.padded_size,
            cfg.padded_size()
        ));
    }
    let slots: u64 = page_tables.iter().map(|pt| pt.resident_count()).sum();
    if buffer.tile_count != slots || buffer.tile_data_offsets.len() as u64 != slots {
        return corrupt(format!(
            "stream has {} records, page tables reference {slots} tiles",
            buffer.tile_count
        ));
    }
    if buffer.data.len() as u64 != buffer.total_bytes {
        return corrupt(format!("payload holds {} bytes, header says {}", buffer.data.len(), buffer.total_bytes));
    }
    if buffer.tile_data_offsets.windows(2).any(|w| w[0] >= w[1]) {
        return corrupt("record offsets not strictly increasing");
    }
    let mut expect_start = 0u64;
    for w in &buffer.windows {
        if w.start_element != expect_start || w.element_count == 0 || w.element_count > WINDOW_ELEMENTS {
            return corrupt(format!("bad window {w:?}"));
        }
        expect_start += w.element_count;
    }
    if expect_start != buffer.total_elements {
        return corrupt(format!("windows cover {expect_start} of {} values", buffer.total_elements));
    }

    let slot_dims = atlas_slot_dims(slots, &cfg)
        .map_err(|_| UploadError::CorruptStream(format!("{slots} tiles exceed the atlas limit")))?;
    let mut atlas = TileAtlas::new(slot_dims, cfg.padded_size(), cfg.empty_value);
    let mut cursor = Cursor {
        buf: buffer,
        config: &cfg,
        slot_dims,
        next: 0,
        mask: None,
        bit: 0,
        byte: 0,
    };
    for w in &buffer.windows {
        for _ in 0..w.element_count {
            cursor.write_next(&mut atlas)?;
        }
    }
    cursor.finish()?;
    Ok(atlas)
}
