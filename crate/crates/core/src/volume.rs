//! Dense scalar volumes and their metadata.

use std::fmt;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum VolumeError {
    #[error("volume dimensions must be positive, got {0}")]
    ZeroDimension(VolumeDims),
    #[error("voxel count of {0} overflows 64-bit")]
    VoxelCountOverflow(VolumeDims),
    #[error("data length {len} does not match {dims} ({expected} voxels)")]
    LengthMismatch {
        dims: VolumeDims,
        len: usize,
        expected: u64,
    },
}

/// Voxel counts along x, y, z.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct VolumeDims {
    pub x: u32,
    pub y: u32,
    pub z: u32,
}

impl VolumeDims {
    pub const fn new(x: u32, y: u32, z: u32) -> Self {
        Self { x, y, z }
    }

    pub const fn cube(n: u32) -> Self {
        Self { x: n, y: n, z: n }
    }

    pub fn validate(self) -> Result<Self, VolumeError> {
        if self.x == 0 || self.y == 0 || self.z == 0 {
            return Err(VolumeError::ZeroDimension(self));
        }
        Ok(self)
    }

    /// Total voxel count.
    ///
    /// # Panics
    /// If the product overflows `u64`; use [`VolumeDims::checked_voxel_count`]
    /// for untrusted dimensions.
    pub fn voxel_count(self) -> u64 {
        self.checked_voxel_count().expect("voxel count overflows u64")
    }

    pub fn checked_voxel_count(self) -> Option<u64> {
        (self.x as u64)
            .checked_mul(self.y as u64)?
            .checked_mul(self.z as u64)
    }

    pub fn as_array(self) -> [u32; 3] {
        [self.x, self.y, self.z]
    }

    pub fn from_array(a: [u32; 3]) -> Self {
        Self::new(a[0], a[1], a[2])
    }

    /// Per-axis `ceil(self / d)`.
    pub fn div_ceil(self, d: u32) -> Self {
        Self::new(self.x.div_ceil(d), self.y.div_ceil(d), self.z.div_ceil(d))
    }

    /// Raster index with x fastest.
    #[inline]
    pub fn index(self, x: u32, y: u32, z: u32) -> usize {
        (x as usize) + self.x as usize * ((y as usize) + self.y as usize * z as usize)
    }

    pub fn contains(self, x: u32, y: u32, z: u32) -> bool {
        x < self.x && y < self.y && z < self.z
    }

    pub fn max_axis(self) -> u32 {
        self.x.max(self.y).max(self.z)
    }
}

impl fmt::Display for VolumeDims {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}x{}", self.x, self.y, self.z)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum VoxelFormat {
    /// One byte per voxel, values 0..=255.
    Unsigned8Normalized,
    Float32,
}

impl VoxelFormat {
    pub fn bytes_per_voxel(self) -> u32 {
        match self {
            VoxelFormat::Unsigned8Normalized => 1,
            VoxelFormat::Float32 => 4,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            VoxelFormat::Unsigned8Normalized => "u8",
            VoxelFormat::Float32 => "f32",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "u8" | "uint8" | "unsigned8" | "unsigned8normalized" => {
                Some(VoxelFormat::Unsigned8Normalized)
            }
            "f32" | "float" | "float32" => Some(VoxelFormat::Float32),
            _ => None,
        }
    }

    pub(crate) fn code(self) -> u8 {
        match self {
            VoxelFormat::Unsigned8Normalized => 1,
            VoxelFormat::Float32 => 2,
        }
    }

    pub(crate) fn from_code(c: u8) -> Option<Self> {
        match c {
            1 => Some(VoxelFormat::Unsigned8Normalized),
            2 => Some(VoxelFormat::Float32),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Endianness {
    Little,
    Big,
}

impl Endianness {
    pub fn from_name(s: &str) -> Option<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "little" | "le" => Some(Endianness::Little),
            "big" | "be" => Some(Endianness::Big),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Endianness::Little => "little",
            Endianness::Big => "big",
        }
    }
}

/// A scalar grid in x-fastest raster order.
///
/// Samples are held as `f32` for both formats; an `Unsigned8Normalized`
/// volume holds integral values in `0..=255`. `value_range` is the range of
/// the source values, which for normalized volumes is the range that was
/// mapped onto `0..=255`.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseVolume {
    pub dims: VolumeDims,
    pub format: VoxelFormat,
    pub data: Vec<f32>,
    pub value_range: (f64, f64),
}

impl DenseVolume {
    /// Wraps `data`, computing `value_range` from it.
    pub fn new(dims: VolumeDims, format: VoxelFormat, data: Vec<f32>) -> Result<Self, VolumeError> {
        let dims = dims.validate()?;
        let expected = dims
            .checked_voxel_count()
            .ok_or(VolumeError::VoxelCountOverflow(dims))?;
        if data.len() as u64 != expected {
            return Err(VolumeError::LengthMismatch {
                dims,
                len: data.len(),
                expected,
            });
        }
        let value_range = compute_range(&data);
        Ok(Self {
            dims,
            format,
            data,
            value_range,
        })
    }

    pub fn filled(dims: VolumeDims, format: VoxelFormat, value: f32) -> Result<Self, VolumeError> {
        let n = dims
            .validate()?
            .checked_voxel_count()
            .ok_or(VolumeError::VoxelCountOverflow(dims))?;
        Self::new(dims, format, vec![value; n as usize])
    }

    /// Builds a volume by evaluating `f(x, y, z)` at every voxel.
    pub fn from_fn(
        dims: VolumeDims,
        format: VoxelFormat,
        mut f: impl FnMut(u32, u32, u32) -> f32,
    ) -> Result<Self, VolumeError> {
        let dims = dims.validate()?;
        let mut data = Vec::with_capacity(dims.voxel_count() as usize);
        for z in 0..dims.z {
            for y in 0..dims.y {
                for x in 0..dims.x {
                    data.push(f(x, y, z));
                }
            }
        }
        Self::new(dims, format, data)
    }

    #[inline]
    pub fn get(&self, x: u32, y: u32, z: u32) -> f32 {
        self.data[self.dims.index(x, y, z)]
    }

    /// Voxel lookup with coordinates clamped to the volume.
    #[inline]
    pub fn get_clamped(&self, x: i64, y: i64, z: i64) -> f32 {
        let cx = x.clamp(0, self.dims.x as i64 - 1) as u32;
        let cy = y.clamp(0, self.dims.y as i64 - 1) as u32;
        let cz = z.clamp(0, self.dims.z as i64 - 1) as u32;
        self.get(cx, cy, cz)
    }

    pub fn mean(&self) -> f64 {
        self.data.iter().map(|&v| v as f64).sum::<f64>() / self.data.len() as f64
    }

    /// Copies out the box `[origin, origin + dims)`.
    pub fn subvolume(&self, origin: [u32; 3], dims: VolumeDims) -> Result<Self, VolumeError> {
        let dims = dims.validate()?;
        let mut data = Vec::with_capacity(dims.voxel_count() as usize);
        for z in 0..dims.z {
            for y in 0..dims.y {
                let row = self.dims.index(origin[0], origin[1] + y, origin[2] + z);
                data.extend_from_slice(&self.data[row..row + dims.x as usize]);
            }
        }
        Ok(Self {
            dims,
            format: self.format,
            data,
            value_range: self.value_range,
        })
    }
}

pub(crate) fn compute_range(data: &[f32]) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &v in data {
        if v.is_nan() {
            continue;
        }
        lo = lo.min(v as f64);
        hi = hi.max(v as f64);
    }
    if lo > hi {
        (0.0, 0.0)
    } else {
        (lo, hi)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_zero_dims() {
        assert!(matches!(
            DenseVolume::new(VolumeDims::new(0, 1, 1), VoxelFormat::Float32, vec![]),
            Err(VolumeError::ZeroDimension(_))
        ));
    }

    #[test]
    fn rejects_wrong_length() {
        let err = DenseVolume::new(VolumeDims::cube(2), VoxelFormat::Float32, vec![0.0; 7]);
        assert!(matches!(err, Err(VolumeError::LengthMismatch { expected: 8, .. })));
    }

    #[test]
    fn huge_dims_count_in_64_bit() {
        let d = VolumeDims::new(4211, 935, 1501);
        assert_eq!(d.voxel_count(), 4211 * 935 * 1501);
        assert!(VolumeDims::cube(u32::MAX).checked_voxel_count().is_none());
    }

    #[test]
    fn raster_order_is_x_fastest() {
        let v = DenseVolume::from_fn(VolumeDims::new(3, 2, 2), VoxelFormat::Float32, |x, y, z| {
            (x + 10 * y + 100 * z) as f32
        })
        .unwrap();
        assert_eq!(v.data[1], 1.0);
        assert_eq!(v.data[3], 10.0);
        assert_eq!(v.data[6], 100.0);
        assert_eq!(v.value_range, (0.0, 112.0));
    }

    #[test]
    fn subvolume_copies_box() {
        let v = DenseVolume::from_fn(VolumeDims::cube(4), VoxelFormat::Float32, |x, y, z| {
            (x + 4 * y + 16 * z) as f32
        })
        .unwrap();
        let s = v.subvolume([2, 1, 3], VolumeDims::new(2, 2, 1)).unwrap();
        assert_eq!(s.data, vec![54.0, 55.0, 58.0, 59.0]);
    }
}
