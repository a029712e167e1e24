//! Closed-form capacity arithmetic for padded, mipmapped tile atlases.
//!
//! Everything exported as a count is computed in integer arithmetic (`u128`
//! intermediates) from exact rational factors: padding `(P/T)³` with
//! `P = T + 2·pad`, and the mip chain `1 + 1/8 + 1/64 + ... = 8/7`.
//! Byte and voxel counts are reported on the power-of-two scale
//! (`Gi = 2³⁰`).

use std::fmt::Write as _;

use thiserror::Error;

use crate::svt::SvtConfig;

pub const GI: f64 = (1u64 << 30) as f64;
/// Upload sizes at or above this overflow a `uint32` byte offset.
pub const UINT32_LIMIT: u64 = 1 << 32;
/// Element counts at or above this overflow an `int32` index.
pub const INT32_LIMIT: u64 = 1 << 31;
/// Geometric mip-chain factor, `Σ (1/8)^n`.
pub const MIP_FACTOR: f64 = 8.0 / 7.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CapacityError {
    #[error("CapacityExceeded: {required_slots} tile slots need a {extent}-voxel atlas edge, limit is {max_extent}")]
    CapacityExceeded {
        required_slots: u64,
        extent: u64,
        max_extent: u32,
    },
}

/// `(P/T)³`.
pub fn padding_factor(config: &SvtConfig) -> f64 {
    let (p, t) = (config.padded_size() as f64, config.tile_size as f64);
    (p / t).powi(3)
}

/// Usable payload voxels of a maximal atlas once padding and the mip chain
/// are paid for: `floor(E³ · T³/P³ · 7/8)`.
pub fn net_payload_voxels(config: &SvtConfig) -> u64 {
    let e = config.max_atlas_extent as u128;
    let t = config.tile_size as u128;
    let p = config.padded_size() as u128;
    let num = e.pow(3) * t.pow(3) * 7;
    let den = p.pow(3) * 8;
    (num / den) as u64
}

/// Same as [`net_payload_voxels`] for an explicit, possibly zero, pad.
pub fn net_payload_voxels_with_pad(max_atlas_extent: u32, tile_size: u32, pad: u32) -> u64 {
    let e = max_atlas_extent as u128;
    let t = tile_size as u128;
    let p = (tile_size + 2 * pad) as u128;
    (e.pow(3) * t.pow(3) * 7 / (p.pow(3) * 8)) as u64
}

/// Estimated upload size: `round(n · P³/T³ · 8/7 · bytes_per_voxel)`.
pub fn upload_buffer_bytes(nonempty_voxels: u64, bytes_per_voxel: u32, config: &SvtConfig) -> u64 {
    let t = config.tile_size as u128;
    let p = config.padded_size() as u128;
    let num = nonempty_voxels as u128 * p.pow(3) * 8 * bytes_per_voxel as u128;
    let den = t.pow(3) * 7;
    ((num + den / 2) / den) as u64
}

/// Exact payload size of a built texture: every stored (non-empty, padded)
/// voxel across all mips times its width. Occupancy masks are not included.
pub fn upload_buffer_bytes_exact(padded_nonempty_voxels: u64, bytes_per_voxel: u32) -> u64 {
    padded_nonempty_voxels
        .checked_mul(bytes_per_voxel as u64)
        .expect("payload byte count overflows u64")
}

/// Smallest `s` with `s³ >= n`.
pub fn ceil_cbrt(n: u64) -> u64 {
    if n == 0 {
        return 0;
    }
    let mut s = (n as f64).cbrt().round() as u64;
    while (s as u128).pow(3) < n as u128 {
        s += 1;
    }
    while s > 1 && ((s - 1) as u128).pow(3) >= n as u128 {
        s -= 1;
    }
    s
}

/// Edge length (voxels) of the smallest padded-tile-aligned cube that holds
/// every tile in `nonempty_tile_counts` (one entry per mip level).
pub fn atlas_extent_estimate(nonempty_tile_counts: &[u64], config: &SvtConfig) -> Result<u64, CapacityError> {
    let slots: u64 = nonempty_tile_counts.iter().sum();
    let extent = ceil_cbrt(slots).max(1) * config.padded_size() as u64;
    if extent > config.max_atlas_extent as u64 {
        return Err(CapacityError::CapacityExceeded {
            required_slots: slots,
            extent,
            max_extent: config.max_atlas_extent,
        });
    }
    Ok(extent)
}

/// Per-mip resident tile counts for a volume with `nonempty_voxels` spread
/// over tiles that are, on average, `mean_tile_occupancy` full. Each coarser
/// level holds an eighth of the tiles (rounded up) until a single tile.
pub fn synthetic_tile_counts(nonempty_voxels: u64, mean_tile_occupancy: f64, config: &SvtConfig) -> Vec<u64> {
    if nonempty_voxels == 0 {
        return Vec::new();
    }
    let occ = mean_tile_occupancy.clamp(f64::MIN_POSITIVE, 1.0);
    let per_tile = occ * (config.tile_size as f64).powi(3);
    let mut level = (nonempty_voxels as f64 / per_tile).ceil().max(1.0) as u64;
    let mut counts = vec![level];
    while level > 1 {
        level = level.div_ceil(8);
        counts.push(level);
    }
    counts
}

/// What the overflow check is run against.
#[derive(Debug, Clone, PartialEq)]
pub struct CapacityInputs {
    pub nonempty_voxels: u64,
    pub bytes_per_voxel: u32,
    /// Used to synthesize tile counts when `tile_counts` is absent.
    pub mean_tile_occupancy: f64,
    /// Exact per-mip resident tile counts, when a build is available.
    pub tile_counts: Option<Vec<u64>>,
    pub config: SvtConfig,
}

impl CapacityInputs {
    pub fn new(nonempty_voxels: u64, bytes_per_voxel: u32, config: SvtConfig) -> Self {
        Self {
            nonempty_voxels,
            bytes_per_voxel,
            mean_tile_occupancy: 1.0,
            tile_counts: None,
            config,
        }
    }

    pub fn with_occupancy(mut self, occupancy: f64) -> Self {
        self.mean_tile_occupancy = occupancy;
        self
    }

    pub fn with_tile_counts(mut self, counts: Vec<u64>) -> Self {
        self.tile_counts = Some(counts);
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CapacityReport {
    pub nonempty_voxels: u64,
    pub bytes_per_voxel: u32,
    pub padding_factor: f64,
    pub mip_factor: f64,
    pub net_payload_voxels: u64,
    pub upload_buffer_bytes: u64,
    pub required_slots: u64,
    pub atlas_extent_estimate: u64,
    pub fits_atlas: bool,
    pub fits_uint32_upload: bool,
    pub fits_int32_index: bool,
    /// Mean tile occupancy below which a 4 GiB upload fills the atlas with
    /// empty voxels before it runs out of payload.
    pub occupancy_breakeven: f64,
}

/// Evaluates every planner quantity and the two integer-width guards.
pub fn check_overflow(inputs: &CapacityInputs) -> CapacityReport {
    let cfg = &inputs.config;
    let padding = padding_factor(cfg);
    let net = net_payload_voxels(cfg);
    let upload = upload_buffer_bytes(inputs.nonempty_voxels, inputs.bytes_per_voxel, cfg);
    let counts = inputs
        .tile_counts
        .clone()
        .unwrap_or_else(|| synthetic_tile_counts(inputs.nonempty_voxels, inputs.mean_tile_occupancy, cfg));
    let required_slots: u64 = counts.iter().sum();
    let (extent, fits_atlas) = match atlas_extent_estimate(&counts, cfg) {
        Ok(e) => (e, true),
        Err(CapacityError::CapacityExceeded { extent, .. }) => (extent, false),
    };
    let max_payload_in_uint32 =
        UINT32_LIMIT as f64 / (padding * MIP_FACTOR * inputs.bytes_per_voxel.max(1) as f64);
    CapacityReport {
        nonempty_voxels: inputs.nonempty_voxels,
        bytes_per_voxel: inputs.bytes_per_voxel,
        padding_factor: padding,
        mip_factor: MIP_FACTOR,
        net_payload_voxels: net,
        upload_buffer_bytes: upload,
        required_slots,
        atlas_extent_estimate: extent,
        fits_atlas,
        fits_uint32_upload: upload < UINT32_LIMIT,
        fits_int32_index: inputs.nonempty_voxels < INT32_LIMIT,
        occupancy_breakeven: if net == 0 {
            f64::INFINITY
        } else {
            max_payload_in_uint32 / net as f64
        },
    }
}

impl CapacityReport {
    pub fn net_payload_gi(&self) -> f64 {
        self.net_payload_voxels as f64 / GI
    }

    pub fn upload_gib(&self) -> f64 {
        self.upload_buffer_bytes as f64 / GI
    }

    /// Human-readable table.
    pub fn render_text(&self) -> String {
        let rows: Vec<(&str, String)> = vec![
            ("non-empty voxels", format!("{} ({:.3} Gi-voxels)", self.nonempty_voxels, self.nonempty_voxels as f64 / GI)),
            ("bytes per voxel", self.bytes_per_voxel.to_string()),
            ("padding factor", format!("{:.6}", self.padding_factor)),
            ("mip factor", format!("{:.6}", self.mip_factor)),
            ("net payload", format!("{} voxels ({:.3} Gi-voxels)", self.net_payload_voxels, self.net_payload_gi())),
            ("upload buffer", format!("{} bytes ({:.3} GiB)", self.upload_buffer_bytes, self.upload_gib())),
            ("required tile slots", self.required_slots.to_string()),
            ("atlas extent estimate", format!("{} voxels/axis", self.atlas_extent_estimate)),
            ("fits atlas", yes_no(self.fits_atlas)),
            ("fits uint32 upload", yes_no(self.fits_uint32_upload)),
            ("fits int32 index", yes_no(self.fits_int32_index)),
            ("occupancy break-even", format!("{:.4}", self.occupancy_breakeven)),
        ];
        let width = rows.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
        let mut out = String::new();
        for (k, v) in rows {
            let _ = writeln!(out, "{k:<width$}  {v}");
        }
        out
    }

    /// One `key: value` per line, raw numbers only.
    pub fn render_kv(&self) -> String {
        let mut out = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(out, "{k}: {v}");
        };
        kv("nonempty_voxels", self.nonempty_voxels.to_string());
        kv("bytes_per_voxel", self.bytes_per_voxel.to_string());
        kv("padding_factor", format!("{}", self.padding_factor));
        kv("mip_factor", format!("{}", self.mip_factor));
        kv("net_payload_voxels", self.net_payload_voxels.to_string());
        kv("net_payload_gi_voxels", format!("{:.6}", self.net_payload_gi()));
        kv("upload_buffer_bytes", self.upload_buffer_bytes.to_string());
        kv("upload_buffer_gib", format!("{:.6}", self.upload_gib()));
        kv("required_slots", self.required_slots.to_string());
        kv("atlas_extent_estimate", self.atlas_extent_estimate.to_string());
        kv("fits_atlas", self.fits_atlas.to_string());
        kv("fits_uint32_upload", self.fits_uint32_upload.to_string());
        kv("fits_int32_index", self.fits_int32_index.to_string());
        kv("occupancy_breakeven", format!("{:.6}", self.occupancy_breakeven));
        out
    }
}

fn yes_no(b: bool) -> String {
    if b { "yes" } else { "no" }.to_string()
}

/// Byte offset of the end of a payload computed two ways.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OffsetProbe {
    pub offset_64: u64,
    /// The same offset in wrap-on-overflow `int32` arithmetic.
    pub offset_32_signed_emulated: i32,
}

impl OffsetProbe {
    pub fn diverges(&self) -> bool {
        self.offset_64 != self.offset_32_signed_emulated as i64 as u64
    }
}

/// End offset of `element_count` elements of `element_size` bytes, in 64-bit
/// and in emulated signed 32-bit arithmetic. Nothing is allocated.
pub fn probe_offsets(element_count: u64, element_size: u32) -> OffsetProbe {
    let offset_64 = element_count
        .checked_mul(element_size as u64)
        .expect("probe offset overflows u64");
    // An int32 index and size, multiplied the way the narrow code path does.
    let index32 = element_count as u32 as i32;
    let offset_32_signed_emulated = index32.wrapping_mul(element_size as i32);
    OffsetProbe {
        offset_64,
        offset_32_signed_emulated,
    }
}

/// [`probe_offsets`] for one-byte payload elements.
pub fn int32_regression_probe(payload_voxels: u64) -> OffsetProbe {
    probe_offsets(payload_voxels, 1)
}
