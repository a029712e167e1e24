use thiserror::Error;

/// Largest slot index per axis that fits a packed page-table entry.
pub const MAX_SLOTS_PER_AXIS: u32 = 1 << 10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("InvalidConfig: tile_size must be >= 2, got {0}")]
    TileTooSmall(u32),
    #[error("InvalidConfig: pad must be >= 1, got {0}")]
    PadTooSmall(u32),
    #[error("InvalidConfig: max_atlas_extent {extent} is smaller than one padded tile ({padded})")]
    ExtentTooSmall { extent: u32, padded: u32 },
    #[error("InvalidConfig: max_atlas_extent {extent} allows more than {MAX_SLOTS_PER_AXIS} slots per axis")]
    ExtentTooLarge { extent: u32 },
    #[error("InvalidConfig: pad {pad} must not exceed tile_size {tile}")]
    PadTooLarge { pad: u32, tile: u32 },
    #[error("InvalidConfig: empty_threshold must be finite and >= 0")]
    BadThreshold,
}

/// Tiling parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SvtConfig {
    /// Logical tile edge in voxels.
    pub tile_size: u32,
    /// Border voxels added on each face.
    pub pad: u32,
    /// Largest atlas edge in voxels.
    pub max_atlas_extent: u32,
    pub empty_value: f32,
    /// Float32 only: values within this absolute distance of `empty_value`
    /// count as empty. Ignored for 8-bit volumes.
    pub empty_threshold: f32,
}

impl Default for SvtConfig {
    fn default() -> Self {
        Self {
            tile_size: 16,
            pad: 1,
            max_atlas_extent: 2048,
            empty_value: 0.0,
            empty_threshold: 0.0,
        }
    }
}

impl SvtConfig {
    pub fn new(tile_size: u32, pad: u32, max_atlas_extent: u32) -> Result<Self, ConfigError> {
        Self {
            tile_size,
            pad,
            max_atlas_extent,
            ..Self::default()
        }
        .validated()
    }

    pub fn validated(self) -> Result<Self, ConfigError> {
        if self.tile_size < 2 {
            return Err(ConfigError::TileTooSmall(self.tile_size));
        }
        if self.pad < 1 {
            return Err(ConfigError::PadTooSmall(self.pad));
        }
        if self.pad > self.tile_size {
            return Err(ConfigError::PadTooLarge {
                pad: self.pad,
                tile: self.tile_size,
            });
        }
        let padded = self.padded_size();
        if self.max_atlas_extent < padded {
            return Err(ConfigError::ExtentTooSmall {
                extent: self.max_atlas_extent,
                padded,
            });
        }
        if self.max_slots_per_axis() > MAX_SLOTS_PER_AXIS {
            return Err(ConfigError::ExtentTooLarge {
                extent: self.max_atlas_extent,
            });
        }
        if !(self.empty_threshold >= 0.0 && self.empty_threshold.is_finite()) {
            return Err(ConfigError::BadThreshold);
        }
        Ok(self)
    }

    /// `tile_size + 2 * pad`.
    #[inline]
    pub fn padded_size(&self) -> u32 {
        self.tile_size + 2 * self.pad
    }

    /// Voxels in one padded tile.
    #[inline]
    pub fn padded_voxels(&self) -> usize {
        let p = self.padded_size() as usize;
        p * p * p
    }

    /// Bytes in one padded tile's occupancy mask.
    #[inline]
    pub fn mask_bytes(&self) -> usize {
        self.padded_voxels().div_ceil(8)
    }

    pub fn max_slots_per_axis(&self) -> u32 {
        self.max_atlas_extent / self.padded_size()
    }

    /// Slots in the largest allowed atlas.
    pub fn slot_capacity(&self) -> u64 {
        (self.max_slots_per_axis() as u64).pow(3)
    }

    /// Emptiness test for one value.
    #[inline]
    pub fn is_empty_value(&self, v: f32) -> bool {
        if self.empty_threshold > 0.0 {
            (v - self.empty_value).abs() <= self.empty_threshold
        } else {
            v == self.empty_value
        }
    }

    /// Config with the Float32 threshold dropped, for integer volumes.
    pub(crate) fn for_format(mut self, format: crate::volume::VoxelFormat) -> Self {
        if format == crate::volume::VoxelFormat::Unsigned8Normalized {
            self.empty_threshold = 0.0;
        }
        self
    }
}
