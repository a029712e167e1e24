use super::transfer::{Normalizer, TransferFunction};
use super::vec3::{Ray, Vec3};
use crate::par;
use crate::sampling::{lerp, sample_trilinear, SamplePos};
use crate::svt::SparseVolumeTexture;
use crate::volume::VolumeDims;

pub const DEFAULT_DOWNSAMPLE: u32 = 4;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LightKind {
    /// Direction the light travels in.
    Directional(Vec3),
    /// Intensity falls off as `1 / (1 + (d / radius)^2)`.
    Point { position: Vec3, radius: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Light {
    pub kind: LightKind,
    pub intensity: [f64; 3],
}

impl Light {
    pub fn directional(direction: Vec3, intensity: [f64; 3]) -> Self {
        Self { kind: LightKind::Directional(direction.normalized()), intensity }
    }

    pub fn point(position: Vec3, radius: f64, intensity: [f64; 3]) -> Self {
        Self { kind: LightKind::Point { position, radius }, intensity }
    }

    /// The same light seen from a frame whose origin sits at `origin`.
    pub fn translated(&self, origin: Vec3) -> Self {
        let kind = match self.kind {
            LightKind::Directional(d) => LightKind::Directional(d),
            LightKind::Point { position, radius } => LightKind::Point { position: position - origin, radius },
        };
        Self { kind, intensity: self.intensity }
    }

    /// Unit vector towards the light, march length cap and falloff at `p`.
    fn toward(&self, p: Vec3) -> (Vec3, f64, f64) {
        match self.kind {
            LightKind::Directional(d) => (-d, f64::INFINITY, 1.0),
            LightKind::Point { position, radius } => {
                let v = position - p;
                let d = v.length();
                let q = if radius > 0.0 { d / radius } else { f64::INFINITY };
                (v.normalized(), d, 1.0 / (1.0 + q * q))
            }
        }
    }
}

/// Camera-independent incident radiance on a coarse grid.
///
/// Cache voxel `i` covers volume voxels `[i * ds, (i + 1) * ds)` and stores
/// the radiance at that block's centre.
#[derive(Debug, Clone, PartialEq)]
pub struct IlluminationCache {
    pub dims: VolumeDims,
    pub downsample_factor: u32,
    pub values: Vec<[f32; 3]>,
}

impl IlluminationCache {
    pub fn zeros(virtual_dims: VolumeDims, downsample_factor: u32) -> Self {
        let ds = downsample_factor.max(1);
        let dims = virtual_dims.div_ceil(ds);
        Self { dims, downsample_factor: ds, values: vec![[0.0; 3]; dims.voxel_count() as usize] }
    }

    pub fn get(&self, x: u32, y: u32, z: u32) -> [f32; 3] {
        self.values[self.dims.index(x, y, z)]
    }

    /// Trilinear lookup at a mip-0 voxel-space position, clamped to the grid.
    #[inline]
    pub fn sample(&self, p: Vec3) -> [f64; 3] {
        let ds = self.downsample_factor as f64;
        let n = self.dims.as_array();
        let mut lo = [0u32; 3];
        let mut hi = [0u32; 3];
        let mut f = [0f64; 3];
        for i in 0..3 {
            let u = (p[i] / ds - 0.5).clamp(0.0, (n[i] - 1) as f64);
            let b = u.floor();
            lo[i] = b as u32;
            hi[i] = (lo[i] + 1).min(n[i] - 1);
            f[i] = u - b;
        }
        let mut out = [0f64; 3];
        for (c, o) in out.iter_mut().enumerate() {
            let g = |x: u32, y: u32, z: u32| self.values[self.dims.index(x, y, z)][c] as f64;
            let x00 = lerp(g(lo[0], lo[1], lo[2]), g(hi[0], lo[1], lo[2]), f[0]);
            let x10 = lerp(g(lo[0], hi[1], lo[2]), g(hi[0], hi[1], lo[2]), f[0]);
            let x01 = lerp(g(lo[0], lo[1], hi[2]), g(hi[0], lo[1], hi[2]), f[0]);
            let x11 = lerp(g(lo[0], hi[1], hi[2]), g(hi[0], hi[1], hi[2]), f[0]);
            *o = lerp(lerp(x00, x10, f[1]), lerp(x01, x11, f[1]), f[2]);
        }
        out
    }
}

/// Beer-Lambert transmittance from `p` towards a light, stopping at the
/// light or the volume boundary. Midpoint rule with `steps` samples.
pub fn transmittance(
    svt: &SparseVolumeTexture,
    tf: &TransferFunction,
    norm: &Normalizer,
    p: Vec3,
    dir: Vec3,
    max_dist: f64,
    steps: u32,
) -> f64 {
    let d = svt.virtual_dims;
    let hi = Vec3::new(d.x as f64, d.y as f64, d.z as f64);
    let ray = Ray { origin: p, dir };
    let Some((_, t_exit)) = ray.intersect_box(Vec3::ZERO, hi) else {
        return 1.0;
    };
    let len = t_exit.min(max_dist);
    if !(len > 0.0) || steps == 0 {
        return 1.0;
    }
    let dt = len / steps as f64;
    let mut tau = 0.0;
    for k in 0..steps {
        let q = ray.at((k as f64 + 0.5) * dt);
        let v = sample_trilinear(svt, SamplePos::new(q.x, q.y, q.z), 0);
        tau += tf.sigma(norm.apply(v));
    }
    (-tau * dt).exp()
}

/// Sums, per cache voxel, each light's intensity times its transmittance.
pub fn build_illumination_cache(
    svt: &SparseVolumeTexture,
    tf: &TransferFunction,
    lights: &[Light],
    downsample_factor: u32,
    shadow_steps: u32,
) -> IlluminationCache {
    let mut cache = IlluminationCache::zeros(svt.virtual_dims, downsample_factor);
    if lights.is_empty() {
        return cache;
    }
    let norm = Normalizer::for_svt(svt);
    let dims = cache.dims;
    let ds = cache.downsample_factor as f64;
    let plane = dims.x as usize * dims.y as usize;
    cache.values = par::map_indexed(dims.voxel_count() as usize, |i| {
        let x = (i % dims.x as usize) as f64;
        let y = (i / dims.x as usize % dims.y as usize) as f64;
        let z = (i / plane) as f64;
        let c = Vec3::new((x + 0.5) * ds, (y + 0.5) * ds, (z + 0.5) * ds);
        let mut acc = [0f32; 3];
        for l in lights {
            let (dir, max_dist, falloff) = l.toward(c);
            let t = transmittance(svt, tf, &norm, c, dir, max_dist, shadow_steps) * falloff;
            for k in 0..3 {
                acc[k] += (l.intensity[k] * t) as f32;
            }
        }
        acc
    });
    cache
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::svt::{build_svt, SvtConfig};
    use crate::volume::{DenseVolume, VoxelFormat};

    fn uniform(n: u32, v: f32) -> SparseVolumeTexture {
        let vol = DenseVolume::filled(VolumeDims::cube(n), VoxelFormat::Unsigned8Normalized, v).unwrap();
        build_svt(&vol, &SvtConfig::default()).unwrap()
    }

    #[test]
    fn no_lights_gives_zero_cache() {
        let svt = uniform(16, 200.0);
        let c = build_illumination_cache(&svt, &TransferFunction::default(), &[], 4, 8);
        assert_eq!(c.dims, VolumeDims::cube(4));
        assert!(c.values.iter().all(|v| *v == [0.0; 3]));
    }

    #[test]
    fn transparent_volume_passes_full_light() {
        let svt = uniform(16, 0.0);
        let l = Light::directional(Vec3::new(1.0, 0.0, 0.0), [1.0, 1.0, 1.0]);
        let c = build_illumination_cache(&svt, &TransferFunction::default(), &[l], 4, 8);
        assert!(c.values.iter().all(|v| *v == [1.0; 3]));
    }

    #[test]
    fn uniform_extinction_matches_beer_lambert() {
        let svt = uniform(32, 255.0);
        let sigma = 0.05;
        let tf = TransferFunction::constant([1.0; 3], 1.0).with_scales(sigma, 0.0);
        let l = Light::directional(Vec3::new(1.0, 0.0, 0.0), [1.0, 1.0, 1.0]);
        let c = build_illumination_cache(&svt, &tf, &[l], 4, 64);
        for x in 0..c.dims.x {
            let depth = (x as f64 + 0.5) * 4.0;
            let got = c.get(x, 3, 5)[0] as f64;
            let want = (-sigma * depth).exp();
            assert!(((got - want) / want).abs() < 1e-3, "x={x} got {got} want {want}");
        }
    }

    #[test]
    fn point_light_falloff() {
        let svt = uniform(8, 0.0);
        let l = Light::point(Vec3::new(2.0, 2.0, 2.0), 1.0, [2.0, 2.0, 2.0]);
        let c = build_illumination_cache(&svt, &TransferFunction::default(), &[l], 4, 4);
        // Centre (2, 2, 2) coincides with the light.
        assert_eq!(c.get(0, 0, 0), [2.0; 3]);
        // Centre (6, 2, 2) is 4 away: 2 / (1 + 16).
        assert!((c.get(1, 0, 0)[0] as f64 - 2.0 / 17.0).abs() < 1e-6);
    }

    #[test]
    fn sample_is_exact_at_centres_and_clamped() {
        let mut c = IlluminationCache::zeros(VolumeDims::new(8, 4, 4), 4);
        c.values[1] = [4.0, 2.0, 0.0];
        assert_eq!(c.sample(Vec3::new(6.0, 2.0, 2.0)), [4.0, 2.0, 0.0]);
        assert_eq!(c.sample(Vec3::new(4.0, 2.0, 2.0)), [2.0, 1.0, 0.0]);
        assert_eq!(c.sample(Vec3::new(100.0, -5.0, 2.0)), [4.0, 2.0, 0.0]);
    }
}
