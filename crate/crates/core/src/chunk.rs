//! Chunked versus unified lighting.
//!
//! A volume cut into slabs and lit per slab ignores the shadow cast by the
//! neighbouring slabs, so faces turned away from the light come out too
//! bright. [`render_chunked`] renders both ways and
//! [`border_artifact_metric`] measures the difference near the cuts.

use crate::par;
use crate::render::{
    build_illumination_cache, raymarch_scene, Camera, Image, Light, RenderError, RenderParams, SceneChunk,
    TransferFunction, Vec3,
};
use crate::svt::{build_svt, SvtConfig, SvtError};
use crate::volume::{DenseVolume, VolumeDims, VolumeError};

/// Floor on the global difference when forming the ratio.
pub const GLOBAL_FLOOR: f64 = 1e-6;

#[derive(Debug, thiserror::Error)]
pub enum ChunkError {
    #[error("invalid split: {0}")]
    InvalidSplit(String),
    #[error("image dimensions differ: {a:?} vs {b:?}")]
    DimMismatch { a: (u32, u32), b: (u32, u32) },
    #[error(transparent)]
    Svt(#[from] SvtError),
    #[error(transparent)]
    Volume(#[from] VolumeError),
    #[error(transparent)]
    Render(#[from] RenderError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub fn index(self) -> usize {
        match self {
            Axis::X => 0,
            Axis::Y => 1,
            Axis::Z => 2,
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        match s.to_ascii_lowercase().as_str() {
            "x" => Some(Axis::X),
            "y" => Some(Axis::Y),
            "z" => Some(Axis::Z),
            _ => None,
        }
    }
}

/// Slabs along one axis. `boundaries` holds `count + 1` increasing voxel
/// coordinates from 0 to the axis extent.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChunkSplit {
    pub axis: Axis,
    pub count: u32,
    pub boundaries: Vec<u32>,
}

impl ChunkSplit {
    /// `count` slabs of near-equal thickness.
    pub fn even(axis: Axis, count: u32, extent: u32) -> Result<Self, ChunkError> {
        if count == 0 || count > extent {
            return Err(ChunkError::InvalidSplit(format!("cannot cut extent {extent} into {count} chunks")));
        }
        let boundaries = (0..=count).map(|i| (i as u64 * extent as u64 / count as u64) as u32).collect();
        Ok(Self { axis, count, boundaries })
    }

    pub fn from_boundaries(axis: Axis, boundaries: Vec<u32>) -> Result<Self, ChunkError> {
        if boundaries.len() < 2 || boundaries[0] != 0 || boundaries.windows(2).any(|w| w[0] >= w[1]) {
            return Err(ChunkError::InvalidSplit(format!("boundaries {boundaries:?} must rise strictly from 0")));
        }
        Ok(Self { axis, count: boundaries.len() as u32 - 1, boundaries })
    }

    pub fn validate_for(&self, dims: VolumeDims) -> Result<(), ChunkError> {
        let extent = dims.as_array()[self.axis.index()];
        if self.boundaries.last() != Some(&extent) || self.boundaries.len() != self.count as usize + 1 {
            return Err(ChunkError::InvalidSplit(format!(
                "boundaries {:?} do not cover extent {extent} in {} chunks",
                self.boundaries, self.count
            )));
        }
        Ok(())
    }

    /// Origin and size of each chunk.
    pub fn chunks(&self, dims: VolumeDims) -> Vec<([u32; 3], VolumeDims)> {
        let a = self.axis.index();
        self.boundaries
            .windows(2)
            .map(|w| {
                let mut origin = [0u32; 3];
                origin[a] = w[0];
                let mut d = dims.as_array();
                d[a] = w[1] - w[0];
                (origin, VolumeDims::from_array(d))
            })
            .collect()
    }

    /// Interior cut planes.
    pub fn interior(&self) -> &[u32] {
        &self.boundaries[1..self.boundaries.len() - 1]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChunkMode {
    /// Each chunk is lit as if the others were absent.
    Independent,
    /// One cache over the whole volume.
    Unified,
}

pub fn render_chunked(
    volume: &DenseVolume,
    split: &ChunkSplit,
    mode: ChunkMode,
    lights: &[Light],
    tf: &TransferFunction,
    params: &RenderParams,
    config: &SvtConfig,
) -> Result<Image, ChunkError> {
    split.validate_for(volume.dims)?;
    tf.validate()?;
    params.validate()?;
    let pieces: Vec<([u32; 3], DenseVolume)> = match mode {
        ChunkMode::Unified => vec![([0; 3], volume.clone())],
        ChunkMode::Independent => split
            .chunks(volume.dims)
            .into_iter()
            .map(|(o, d)| Ok((o, volume.subvolume(o, d)?)))
            .collect::<Result<_, VolumeError>>()?,
    };
    let built = par::map_indexed(pieces.len(), |i| {
        let (o, vol) = &pieces[i];
        let origin = Vec3::new(o[0] as f64, o[1] as f64, o[2] as f64);
        let svt = build_svt(vol, config)?;
        let local: Vec<Light> = lights.iter().map(|l| l.translated(origin)).collect();
        let cache = build_illumination_cache(&svt, tf, &local, params.downsample_factor, params.shadow_steps);
        Ok::<_, SvtError>((origin, svt, cache))
    })
    .into_iter()
    .collect::<Result<Vec<_>, _>>()?;
    let scene: Vec<SceneChunk> =
        built.iter().map(|(origin, svt, cache)| SceneChunk { origin: *origin, svt, cache }).collect();
    Ok(raymarch_scene(&scene, tf, params))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BorderMetric {
    pub band_width_px: u32,
    pub band_pixels: u64,
    pub mean_abs_diff_border: f64,
    pub mean_abs_diff_global: f64,
    pub ratio: f64,
}

impl BorderMetric {
    pub fn render_kv(&self) -> String {
        format!(
            "band_width_px: {}\nband_pixels: {}\nmean_abs_diff_border: {:.9}\nmean_abs_diff_global: {:.9}\nratio: {:.6}\n",
            self.band_width_px, self.band_pixels, self.mean_abs_diff_border, self.mean_abs_diff_global, self.ratio
        )
    }
}

/// Marks pixels whose ray crosses a slab of half-width
/// `band_width_px` pixels around an interior cut plane, inside the volume.
pub fn border_band_mask(split: &ChunkSplit, band_width_px: u32, camera: &Camera, dims: VolumeDims) -> Vec<bool> {
    let a = split.axis.index();
    let ext = dims.as_array().map(|v| v as f64);
    let centre = Vec3::new(ext[0] / 2.0, ext[1] / 2.0, ext[2] / 2.0);
    let half = band_width_px as f64 * camera.pixel_footprint((centre - camera.eye).length());
    let basis = camera.basis();
    let w = camera.width as usize;
    let n = w * camera.height as usize;
    let mut mask = vec![false; n];
    for &b in split.interior() {
        let mut lo = [0.0, 0.0, 0.0];
        let mut hi = ext;
        lo[a] = (b as f64 - half).max(0.0);
        hi[a] = (b as f64 + half).min(ext[a]);
        let (lo, hi) = (Vec3::from_array(lo), Vec3::from_array(hi));
        for (i, m) in mask.iter_mut().enumerate() {
            let ray = camera.ray_with_basis(&basis, (i % w) as u32, (i / w) as u32);
            if ray.intersect_box(lo, hi).is_some_and(|(_, t1)| t1 >= 0.0) {
                *m = true;
            }
        }
    }
    mask
}

/// Mean absolute luminance difference inside the border band and overall.
pub fn border_artifact_metric(
    a: &Image,
    b: &Image,
    split: &ChunkSplit,
    band_width_px: u32,
    camera: &Camera,
    dims: VolumeDims,
) -> Result<BorderMetric, ChunkError> {
    if (a.width, a.height) != (b.width, b.height) || (a.width, a.height) != (camera.width, camera.height) {
        return Err(ChunkError::DimMismatch { a: (a.width, a.height), b: (b.width, b.height) });
    }
    let mask = border_band_mask(split, band_width_px, camera, dims);
    let mut band_sum = 0.0;
    let mut band_n = 0u64;
    let mut total = 0.0;
    for ((pa, pb), in_band) in a.pixels.iter().zip(&b.pixels).zip(&mask) {
        let d = (crate::render::luminance(*pa) - crate::render::luminance(*pb)).abs();
        total += d;
        if *in_band {
            band_sum += d;
            band_n += 1;
        }
    }
    let global = total / a.pixels.len().max(1) as f64;
    let border = if band_n == 0 { 0.0 } else { band_sum / band_n as f64 };
    Ok(BorderMetric {
        band_width_px,
        band_pixels: band_n,
        mean_abs_diff_border: border,
        mean_abs_diff_global: global,
        ratio: border / global.max(GLOBAL_FLOOR),
    })
}
