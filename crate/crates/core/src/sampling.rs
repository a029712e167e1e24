//! Scalar lookups through the page table.
//!
//! Positions are continuous mip-0 voxel coordinates with voxel centres at
//! `i + 0.5`. A level-`k` lookup scales the position by `2^-k`. Anything
//! outside `[0, dims]` returns the texture's empty value.

use crate::svt::{PageTable, SparseVolumeTexture};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SamplePos {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl SamplePos {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    fn scaled(self, mip: u32) -> [f64; 3] {
        let s = 0.5f64.powi(mip as i32);
        [self.x * s, self.y * s, self.z * s]
    }
}

impl From<[f64; 3]> for SamplePos {
    fn from(a: [f64; 3]) -> Self {
        Self::new(a[0], a[1], a[2])
    }
}

/// Linear blend `a + (b - a) * t`.
#[inline]
pub fn lerp(a: f64, b: f64, t: f64) -> f64 {
    a + (b - a) * t
}

/// Blends eight corners (index bit 0 = +x, bit 1 = +y, bit 2 = +z) along x,
/// then y, then z.
#[inline]
pub fn trilerp(c: [f32; 8], f: [f64; 3]) -> f64 {
    let x00 = lerp(c[0] as f64, c[1] as f64, f[0]);
    let x10 = lerp(c[2] as f64, c[3] as f64, f[0]);
    let x01 = lerp(c[4] as f64, c[5] as f64, f[0]);
    let x11 = lerp(c[6] as f64, c[7] as f64, f[0]);
    let y0 = lerp(x00, x10, f[1]);
    let y1 = lerp(x01, x11, f[1]);
    lerp(y0, y1, f[2])
}

impl SparseVolumeTexture {
    fn level(&self, mip: u32) -> &PageTable {
        assert!(mip < self.mip_count(), "mip {mip} out of range ({} levels)", self.mip_count());
        &self.mips[mip as usize]
    }

    /// Voxel `v` of level `mip`; `v` must be inside the level.
    #[inline]
    pub fn voxel(&self, mip: u32, v: [u32; 3]) -> f32 {
        let pt = self.level(mip);
        let t = self.config.tile_size;
        match pt.entry(v[0] / t, v[1] / t, v[2] / t).slot_coord() {
            None => self.config.empty_value,
            Some(slot) => {
                let p = self.config.padded_size();
                let pad = self.config.pad;
                let a = self.atlas.dims.index(
                    slot[0] * p + v[0] % t + pad,
                    slot[1] * p + v[1] % t + pad,
                    slot[2] * p + v[2] % t + pad,
                );
                self.atlas.data[a]
            }
        }
    }
}

/// Value of the voxel containing `pos`.
pub fn sample_nearest(svt: &SparseVolumeTexture, pos: SamplePos, mip: u32) -> f32 {
    let d = svt.level(mip).level_dims;
    let p = pos.scaled(mip);
    let ext = [d.x as f64, d.y as f64, d.z as f64];
    // `!(a < b)` also rejects NaN.
    if (0..3).any(|i| !(p[i] >= 0.0 && p[i] < ext[i])) {
        return svt.config.empty_value;
    }
    svt.voxel(mip, [p[0] as u32, p[1] as u32, p[2] as u32])
}

/// Trilinear filter over voxel centres with clamped edges.
///
/// When the tile holding the lower corner is resident all eight taps come
/// from its padded block in the atlas. When it is empty the taps are fetched
/// one by one, since a resident neighbour may still contribute.
pub fn sample_trilinear(svt: &SparseVolumeTexture, pos: SamplePos, mip: u32) -> f32 {
    let pt = svt.level(mip);
    let d = pt.level_dims;
    let p = pos.scaled(mip);
    let ext = [d.x as f64, d.y as f64, d.z as f64];
    if (0..3).any(|i| !(p[i] >= 0.0 && p[i] <= ext[i])) {
        return svt.config.empty_value;
    }
    let mut base = [0i64; 3];
    let mut frac = [0f64; 3];
    for i in 0..3 {
        let u = p[i] - 0.5;
        let b = u.floor();
        base[i] = b as i64;
        frac[i] = u - b;
    }
    let dims = [d.x as i64, d.y as i64, d.z as i64];
    let clamped = [0, 1, 2].map(|i| base[i].clamp(0, dims[i] - 1) as u32);
    let t = svt.config.tile_size;
    let tile = clamped.map(|c| c / t);

    let corners = match pt.entry(tile[0], tile[1], tile[2]).slot_coord() {
        Some(slot) => {
            let ps = svt.config.padded_size() as i64;
            let pad = svt.config.pad as i64;
            let ad = svt.atlas.dims;
            let local = [0, 1, 2].map(|i| (slot[i] as i64 * ps + base[i] - (tile[i] * t) as i64 + pad) as u32);
            let a = ad.index(local[0], local[1], local[2]);
            let sx = 1;
            let sy = ad.x as usize;
            let sz = ad.x as usize * ad.y as usize;
            let data = &svt.atlas.data;
            [
                data[a],
                data[a + sx],
                data[a + sy],
                data[a + sy + sx],
                data[a + sz],
                data[a + sz + sx],
                data[a + sz + sy],
                data[a + sz + sy + sx],
            ]
        }
        None => {
            let mut c = [0f32; 8];
            for (k, v) in c.iter_mut().enumerate() {
                let v3 = [0, 1, 2].map(|i| (base[i] + ((k >> i) & 1) as i64).clamp(0, dims[i] - 1) as u32);
                *v = svt.voxel(mip, v3);
            }
            c
        }
    };
    trilerp(corners, frac) as f32
}
