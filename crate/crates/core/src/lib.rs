//! Sparse volume texture engine.
//!
//! Pipeline: ingest a dense volume ([`ingest`]), tile it into a page-table
//! indexed atlas ([`svt`]), size it against hard limits ([`capacity`]),
//! stream it through an occupancy-compressed upload buffer ([`upload`]),
//! sample it ([`sampling`]) and raymarch it with a precomputed illumination
//! cache ([`render`]). [`chunk`] compares chunked against unified lighting.

pub mod capacity;
pub mod chunk;
pub mod container;
pub mod ingest;
pub mod par;
pub mod render;
pub mod sampling;
pub mod svt;
pub mod upload;
pub mod volume;

pub use sampling::{sample_nearest, sample_trilinear, SamplePos};
pub use svt::{build_svt, SparseVolumeTexture, SvtConfig};
pub use volume::{DenseVolume, Endianness, VolumeDims, VoxelFormat};
