//! Emission/absorption raymarcher with a precomputed lighting cache.
//!
//! Radiance along a ray is accumulated front to back with midpoint samples.
//! Each sample contributes `T * dt * exp(-sigma * dt / 2) * color *
//! (emission_scale + sigma * L)` where `L` is the cached incident light, and
//! then attenuates `T` by `exp(-sigma * dt)`.

mod camera;
mod image;
mod light;
mod march;
mod transfer;
mod vec3;

pub use camera::{Camera, Projection};
pub use image::{luminance, write_image, Image};
pub use light::{build_illumination_cache, transmittance, IlluminationCache, Light, LightKind, DEFAULT_DOWNSAMPLE};
pub use march::{
    raymarch, raymarch_scene, CutPlane, RenderParams, SceneChunk, DEFAULT_STEPS, EARLY_EXIT, PREVIEW_STEPS,
    QUALITY_STEPS,
};
pub use transfer::{Classified, Normalizer, TransferFunction, LUT_SIZE};
pub use vec3::{Ray, Vec3};

#[derive(Debug, thiserror::Error)]
pub enum RenderError {
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid transfer function: {0}")]
    InvalidTransfer(String),
    #[error("invalid render parameters: {0}")]
    InvalidParams(String),
}
