use crate::par;
use crate::volume::{DenseVolume, VolumeDims, VoxelFormat};

/// Halves each axis (rounding up) by averaging up to eight children.
///
/// Children past the volume edge are left out of the mean rather than
/// clamped. 8-bit volumes round the mean half up so the level stays integral.
pub fn build_mip_level(volume: &DenseVolume) -> DenseVolume {
    let src = volume.dims;
    let dims = src.div_ceil(2);
    let round = volume.format == VoxelFormat::Unsigned8Normalized;
    let slice = dims.x as usize * dims.y as usize;
    let mut data = vec![0f32; dims.voxel_count() as usize];
    par::for_each_chunk_mut(&mut data, slice, |z, out| {
        let z = z as u32;
        for y in 0..dims.y {
            for x in 0..dims.x {
                let mut sum = 0f64;
                let mut n = 0u32;
                for cz in 2 * z..(2 * z + 2).min(src.z) {
                    for cy in 2 * y..(2 * y + 2).min(src.y) {
                        for cx in 2 * x..(2 * x + 2).min(src.x) {
                            sum += volume.get(cx, cy, cz) as f64;
                            n += 1;
                        }
                    }
                }
                let mean = sum / n as f64;
                out[(x + dims.x * y) as usize] = if round {
                    (mean + 0.5).floor() as f32
                } else {
                    mean as f32
                };
            }
        }
    });
    DenseVolume {
        dims,
        format: volume.format,
        data,
        value_range: volume.value_range,
    }
}

/// Number of levels in a chain that halves until every axis fits in one tile.
pub fn mip_count(dims: VolumeDims, tile_size: u32) -> u32 {
    let mut d = dims;
    let mut n = 1;
    while d.max_axis() > tile_size {
        d = d.div_ceil(2);
        n += 1;
    }
    n
}
