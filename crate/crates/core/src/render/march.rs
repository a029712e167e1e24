use super::camera::Camera;
use super::image::Image;
use super::light::{IlluminationCache, DEFAULT_DOWNSAMPLE};
use super::transfer::{Normalizer, TransferFunction};
use super::vec3::Vec3;
use super::RenderError;
use crate::par;
use crate::sampling::{sample_trilinear, SamplePos};
use crate::svt::SparseVolumeTexture;

/// Transmittance below which a ray stops.
pub const EARLY_EXIT: f64 = 1e-3;
pub const DEFAULT_STEPS: u32 = 1024;
pub const PREVIEW_STEPS: u32 = 32;
pub const QUALITY_STEPS: u32 = 512;

/// Points with `normal . p > offset` are culled.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CutPlane {
    pub normal: Vec3,
    pub offset: f64,
}

impl CutPlane {
    #[inline]
    pub fn culls(&self, p: Vec3) -> bool {
        self.normal.dot(p) > self.offset
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RenderParams {
    pub camera: Camera,
    pub max_step_count: u32,
    pub background: [f64; 3],
    pub cut_plane: Option<CutPlane>,
    pub shadow_steps: u32,
    /// Cache cell size in voxels.
    pub downsample_factor: u32,
    pub mip_level: u32,
}

impl RenderParams {
    pub fn new(camera: Camera) -> Self {
        Self {
            camera,
            max_step_count: DEFAULT_STEPS,
            background: [0.0; 3],
            cut_plane: None,
            shadow_steps: 64,
            downsample_factor: DEFAULT_DOWNSAMPLE,
            mip_level: 0,
        }
    }

    pub fn validate(&self) -> Result<(), RenderError> {
        if self.max_step_count == 0 {
            return Err(RenderError::InvalidParams("max_step_count must be at least 1".into()));
        }
        if self.downsample_factor == 0 {
            return Err(RenderError::InvalidParams("downsample factor must be at least 1".into()));
        }
        if self.camera.width == 0 || self.camera.height == 0 {
            return Err(RenderError::InvalidParams("image dimensions must be positive".into()));
        }
        Ok(())
    }
}

/// One volume placed in world space with its own lighting.
#[derive(Debug, Clone, Copy)]
pub struct SceneChunk<'a> {
    pub origin: Vec3,
    pub svt: &'a SparseVolumeTexture,
    pub cache: &'a IlluminationCache,
}

struct Placed<'a> {
    lo: Vec3,
    hi: Vec3,
    svt: &'a SparseVolumeTexture,
    cache: &'a IlluminationCache,
    norm: Normalizer,
    mip: u32,
}

pub fn raymarch(
    svt: &SparseVolumeTexture,
    cache: &IlluminationCache,
    tf: &TransferFunction,
    params: &RenderParams,
) -> Image {
    raymarch_scene(&[SceneChunk { origin: Vec3::ZERO, svt, cache }], tf, params)
}

/// Marches every pixel through the union of `chunks`. Each sample reads the
/// first chunk whose closed box contains it.
pub fn raymarch_scene(chunks: &[SceneChunk<'_>], tf: &TransferFunction, params: &RenderParams) -> Image {
    let cam = &params.camera;
    let bg = params.background.map(|c| c as f32);
    if chunks.is_empty() {
        return Image::filled(cam.width, cam.height, bg);
    }
    let placed: Vec<Placed> = chunks
        .iter()
        .map(|c| {
            let d = c.svt.virtual_dims;
            Placed {
                lo: c.origin,
                hi: c.origin + Vec3::new(d.x as f64, d.y as f64, d.z as f64),
                svt: c.svt,
                cache: c.cache,
                norm: Normalizer::for_svt(c.svt),
                mip: params.mip_level.min(c.svt.mip_count() - 1),
            }
        })
        .collect();
    let mut lo = placed[0].lo;
    let mut hi = placed[0].hi;
    for p in &placed[1..] {
        lo = Vec3::new(lo.x.min(p.lo.x), lo.y.min(p.lo.y), lo.z.min(p.lo.z));
        hi = Vec3::new(hi.x.max(p.hi.x), hi.y.max(p.hi.y), hi.z.max(p.hi.z));
    }
    let basis = cam.basis();
    let w = cam.width as usize;
    let steps = params.max_step_count.max(1);
    let pixels = par::map_indexed(w * cam.height as usize, |i| {
        let ray = cam.ray_with_basis(&basis, (i % w) as u32, (i / w) as u32);
        let Some((t0, t1)) = ray.intersect_box(lo, hi) else {
            return bg;
        };
        let t0 = t0.max(0.0);
        if t1 <= t0 {
            return bg;
        }
        let dt = (t1 - t0) / steps as f64;
        let mut trans = 1.0f64;
        let mut acc = [0f64; 3];
        for k in 0..steps {
            let p = ray.at(t0 + (k as f64 + 0.5) * dt);
            if params.cut_plane.is_some_and(|c| c.culls(p)) {
                continue;
            }
            let Some(ch) = placed.iter().find(|c| (0..3).all(|a| p[a] >= c.lo[a] && p[a] <= c.hi[a])) else {
                continue;
            };
            let q = p - ch.lo;
            let v = sample_trilinear(ch.svt, SamplePos::new(q.x, q.y, q.z), ch.mip);
            let Some(s) = tf.classify(ch.norm.apply(v)) else {
                continue;
            };
            let light = if s.sigma > 0.0 { ch.cache.sample(q) } else { [0.0; 3] };
            let half = (-s.sigma * dt * 0.5).exp();
            let w = trans * dt * half;
            for c in 0..3 {
                acc[c] += w * s.color[c] * (tf.emission_scale + s.sigma * light[c]);
            }
            trans *= half * half;
            if trans < EARLY_EXIT {
                break;
            }
        }
        [0, 1, 2].map(|c| (acc[c] + trans * params.background[c]) as f32)
    });
    Image { width: cam.width, height: cam.height, pixels }
}
