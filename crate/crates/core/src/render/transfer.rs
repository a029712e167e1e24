use std::path::Path;

use super::RenderError;
use crate::svt::SparseVolumeTexture;
use crate::volume::VoxelFormat;

pub const LUT_SIZE: usize = 256;

/// Colour and extinction of one classified sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Classified {
    pub color: [f64; 3],
    pub sigma: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransferFunction {
    /// RGBA in `[0, 1]`.
    pub lut: Vec<[f64; 4]>,
    pub density_scale: f64,
    pub emission_scale: f64,
    /// Visible normalized range; samples outside it are skipped.
    pub window: (f64, f64),
}

impl Default for TransferFunction {
    /// Grey ramp with opacity rising linearly from zero.
    fn default() -> Self {
        let lut = (0..LUT_SIZE)
            .map(|i| {
                let t = i as f64 / (LUT_SIZE - 1) as f64;
                [t, t, t, t]
            })
            .collect();
        Self { lut, density_scale: 1.0, emission_scale: 0.0, window: (0.0, 1.0) }
    }
}

impl TransferFunction {
    /// Every entry has the same colour and opacity.
    pub fn constant(color: [f64; 3], opacity: f64) -> Self {
        Self {
            lut: vec![[color[0], color[1], color[2], opacity]; LUT_SIZE],
            ..Self::default()
        }
    }

    pub fn with_scales(mut self, density_scale: f64, emission_scale: f64) -> Self {
        self.density_scale = density_scale;
        self.emission_scale = emission_scale;
        self
    }

    pub fn with_window(mut self, lo: f64, hi: f64) -> Self {
        self.window = (lo, hi);
        self
    }

    pub fn validate(&self) -> Result<(), RenderError> {
        if self.lut.len() != LUT_SIZE {
            return Err(RenderError::InvalidTransfer(format!("lut has {} entries, expected {LUT_SIZE}", self.lut.len())));
        }
        if self.lut.iter().flatten().any(|c| !(0.0..=1.0).contains(c)) {
            return Err(RenderError::InvalidTransfer("lut component outside [0, 1]".into()));
        }
        if !(self.density_scale >= 0.0 && self.emission_scale >= 0.0) {
            return Err(RenderError::InvalidTransfer("negative scale".into()));
        }
        let (lo, hi) = self.window;
        if !(lo < hi) {
            return Err(RenderError::InvalidTransfer(format!("window lo {lo} must be below hi {hi}")));
        }
        Ok(())
    }

    /// Parses 256 lines of `r g b a` integers in 0..=255.
    pub fn parse_lut(text: &str) -> Result<Vec<[f64; 4]>, RenderError> {
        let mut lut = Vec::with_capacity(LUT_SIZE);
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let vals: Vec<&str> = line.split(|c: char| c.is_whitespace() || c == ',').filter(|s| !s.is_empty()).collect();
            if vals.len() != 4 {
                return Err(RenderError::InvalidTransfer(format!("line {}: expected 4 values, got {}", n + 1, vals.len())));
            }
            let mut e = [0f64; 4];
            for (slot, v) in e.iter_mut().zip(vals) {
                let i: u8 = v
                    .parse()
                    .map_err(|_| RenderError::InvalidTransfer(format!("line {}: `{v}` is not an integer in 0..=255", n + 1)))?;
                *slot = i as f64 / 255.0;
            }
            lut.push(e);
        }
        if lut.len() != LUT_SIZE {
            return Err(RenderError::InvalidTransfer(format!("lut has {} entries, expected {LUT_SIZE}", lut.len())));
        }
        Ok(lut)
    }

    pub fn load_lut(path: &Path) -> Result<Vec<[f64; 4]>, RenderError> {
        let text = std::fs::read_to_string(path).map_err(|source| RenderError::Io { path: path.display().to_string(), source })?;
        Self::parse_lut(&text)
    }

    /// Window test and LUT lookup, linear between entries.
    #[inline]
    pub fn classify(&self, t: f64) -> Option<Classified> {
        if !(t >= self.window.0 && t <= self.window.1) {
            return None;
        }
        let u = t.clamp(0.0, 1.0) * (LUT_SIZE - 1) as f64;
        let i = (u.floor() as usize).min(LUT_SIZE - 2);
        let f = u - i as f64;
        let (a, b) = (&self.lut[i], &self.lut[i + 1]);
        let c = |k: usize| a[k] + (b[k] - a[k]) * f;
        Some(Classified { color: [c(0), c(1), c(2)], sigma: c(3) * self.density_scale })
    }

    /// Extinction only, zero outside the window.
    #[inline]
    pub fn sigma(&self, t: f64) -> f64 {
        self.classify(t).map_or(0.0, |c| c.sigma)
    }
}

/// Maps a stored scalar to `[0, 1]`: `v / 255` for 8-bit data, the value
/// range for float data.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Normalizer {
    offset: f64,
    scale: f64,
}

impl Normalizer {
    pub fn for_svt(svt: &SparseVolumeTexture) -> Self {
        match svt.format {
            VoxelFormat::Unsigned8Normalized => Self { offset: 0.0, scale: 1.0 / 255.0 },
            VoxelFormat::Float32 => {
                let (lo, hi) = svt.value_range;
                let span = hi - lo;
                let scale = if span > 0.0 { 1.0 / span } else { 0.0 };
                Self { offset: lo, scale }
            }
        }
    }

    #[inline]
    pub fn apply(&self, v: f32) -> f64 {
        (v as f64 - self.offset) * self.scale
    }
}
