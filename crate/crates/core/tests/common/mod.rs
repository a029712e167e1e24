//! Reference implementations written directly from the definitions, shared
//! by the integration tests. Nothing here calls into the code under test
//! except for plain data types.
#![allow(dead_code)]

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use svt_engine::{DenseVolume, SvtConfig, VolumeDims, VoxelFormat};

pub fn rng(seed: u64) -> StdRng {
    StdRng::seed_from_u64(seed)
}

fn lerp(a: f64, b: f64, t: f64) -> f64 {
    a + (b - a) * t
}

/// Dense trilinear filter with clamped edges; voxel centres at `i + 0.5`.
/// Outside the closed box the result is `empty`.
pub fn dense_trilinear(v: &DenseVolume, p: [f64; 3], empty: f32) -> f32 {
    let d = [v.dims.x as i64, v.dims.y as i64, v.dims.z as i64];
    for i in 0..3 {
        if !(p[i] >= 0.0 && p[i] <= d[i] as f64) {
            return empty;
        }
    }
    let mut b = [0i64; 3];
    let mut f = [0f64; 3];
    for i in 0..3 {
        let u = p[i] - 0.5;
        let fl = u.floor();
        b[i] = fl as i64;
        f[i] = u - fl;
    }
    let at = |dx: i64, dy: i64, dz: i64| -> f64 {
        let x = (b[0] + dx).clamp(0, d[0] - 1);
        let y = (b[1] + dy).clamp(0, d[1] - 1);
        let z = (b[2] + dz).clamp(0, d[2] - 1);
        v.data[(x + d[0] * (y + d[1] * z)) as usize] as f64
    };
    let x00 = lerp(at(0, 0, 0), at(1, 0, 0), f[0]);
    let x10 = lerp(at(0, 1, 0), at(1, 1, 0), f[0]);
    let x01 = lerp(at(0, 0, 1), at(1, 0, 1), f[0]);
    let x11 = lerp(at(0, 1, 1), at(1, 1, 1), f[0]);
    lerp(lerp(x00, x10, f[1]), lerp(x01, x11, f[1]), f[2]) as f32
}

/// Value of the voxel containing `p`, `empty` outside `[0, dims)`.
pub fn dense_nearest(v: &DenseVolume, p: [f64; 3], empty: f32) -> f32 {
    let d = v.dims.as_array();
    for i in 0..3 {
        if !(p[i] >= 0.0 && p[i] < d[i] as f64) {
            return empty;
        }
    }
    v.get(p[0] as u32, p[1] as u32, p[2] as u32)
}

/// Next mip level: ceil-halved dims, mean of the children that exist,
/// 8-bit means rounded half up.
pub fn downsample(v: &DenseVolume) -> DenseVolume {
    let s = v.dims;
    let d = VolumeDims::new(s.x.div_ceil(2), s.y.div_ceil(2), s.z.div_ceil(2));
    let mut data = Vec::with_capacity(d.voxel_count() as usize);
    for z in 0..d.z {
        for y in 0..d.y {
            for x in 0..d.x {
                let mut sum = 0.0f64;
                let mut n = 0.0f64;
                for k in 0..8u32 {
                    let (cx, cy, cz) = (2 * x + (k & 1), 2 * y + (k >> 1 & 1), 2 * z + (k >> 2));
                    if cx < s.x && cy < s.y && cz < s.z {
                        sum += v.get(cx, cy, cz) as f64;
                        n += 1.0;
                    }
                }
                let m = sum / n;
                data.push(match v.format {
                    VoxelFormat::Unsigned8Normalized => (m + 0.5).floor() as f32,
                    VoxelFormat::Float32 => m as f32,
                });
            }
        }
    }
    DenseVolume { dims: d, format: v.format, data, value_range: v.value_range }
}

/// Every level until all axes fit in one tile.
pub fn mip_chain(v: &DenseVolume, tile: u32) -> Vec<DenseVolume> {
    let mut out = vec![v.clone()];
    while out.last().unwrap().dims.max_axis() > tile {
        let next = downsample(out.last().unwrap());
        out.push(next);
    }
    out
}

pub fn is_empty_value(cfg: &SvtConfig, format: VoxelFormat, v: f32) -> bool {
    match format {
        VoxelFormat::Unsigned8Normalized => v == cfg.empty_value,
        VoxelFormat::Float32 => (v - cfg.empty_value).abs() <= cfg.empty_threshold,
    }
}

/// Brute-force residency: a tile is resident when any voxel of its logical
/// block is non-empty. Returned in x-fastest tile order.
pub fn brute_residency(v: &DenseVolume, cfg: &SvtConfig) -> Vec<bool> {
    let t = cfg.tile_size;
    let g = [v.dims.x.div_ceil(t), v.dims.y.div_ceil(t), v.dims.z.div_ceil(t)];
    let mut out = vec![false; (g[0] * g[1] * g[2]) as usize];
    for z in 0..v.dims.z {
        for y in 0..v.dims.y {
            for x in 0..v.dims.x {
                if !is_empty_value(cfg, v.format, v.get(x, y, z)) {
                    out[(x / t + g[0] * (y / t + g[1] * (z / t))) as usize] = true;
                }
            }
        }
    }
    out
}

/// Random volume up to `max` per axis: zero background with a few boxes of
/// random values, so some tiles are empty and some boxes straddle seams.
pub fn random_volume(r: &mut StdRng, max: u32, format: VoxelFormat) -> DenseVolume {
    let dims = VolumeDims::new(r.random_range(1..=max), r.random_range(1..=max), r.random_range(1..=max));
    let mut data = vec![0f32; dims.voxel_count() as usize];
    let boxes = r.random_range(0..=4);
    for _ in 0..boxes {
        let lo = [r.random_range(0..dims.x), r.random_range(0..dims.y), r.random_range(0..dims.z)];
        let hi = [
            r.random_range(lo[0]..dims.x) + 1,
            r.random_range(lo[1]..dims.y) + 1,
            r.random_range(lo[2]..dims.z) + 1,
        ];
        let smooth = r.random_bool(0.5);
        let base: f32 = r.random_range(1.0..200.0);
        for z in lo[2]..hi[2] {
            for y in lo[1]..hi[1] {
                for x in lo[0]..hi[0] {
                    let raw = if smooth {
                        base + ((x * 7 + y * 3 + z * 5) % 50) as f32
                    } else {
                        r.random_range(-100.0f32..255.0)
                    };
                    data[dims.index(x, y, z)] = match format {
                        VoxelFormat::Unsigned8Normalized => raw.clamp(0.0, 255.0).round(),
                        VoxelFormat::Float32 => raw,
                    };
                }
            }
        }
    }
    DenseVolume::new(dims, format, data).unwrap()
}

/// A position biased towards tile seams, voxel centres and the outer faces.
pub fn random_position(r: &mut StdRng, dims: VolumeDims, tile: u32) -> [f64; 3] {
    let d = dims.as_array();
    let mut p = [0.0; 3];
    for i in 0..3 {
        let ext = d[i] as f64;
        p[i] = match r.random_range(0..10) {
            0 => {
                let seams = d[i].div_ceil(tile);
                let s = r.random_range(0..=seams) as f64 * tile as f64;
                (s + r.random_range(-1.0..1.0)).clamp(0.0, ext)
            }
            1 => r.random_range(0..d[i]) as f64 + 0.5,
            2 => [0.0, ext, -0.25, ext + 0.25][r.random_range(0..4)],
            _ => r.random_range(0.0..=ext),
        };
    }
    p
}

/// Closed-form radiance of a uniform emitting and absorbing slab.
pub fn slab_radiance(emission: f64, sigma: f64, length: f64) -> f64 {
    emission / sigma * (1.0 - (-sigma * length).exp())
}

/// IBM hexadecimal float, decoded straight from its definition.
pub fn ibm_oracle(word: u32) -> f64 {
    let sign = if word >> 31 == 1 { -1.0 } else { 1.0 };
    let exponent = ((word >> 24) & 0x7f) as i32;
    let fraction = (word & 0x00ff_ffff) as f64 / 16_777_216.0;
    sign * fraction * 16f64.powi(exponent - 64)
}
