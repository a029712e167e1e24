mod common;

use svt_engine::chunk::{render_chunked, Axis, ChunkMode, ChunkSplit};
use svt_engine::render::{
    build_illumination_cache, raymarch, Camera, CutPlane, IlluminationCache, Image, Light, RenderParams,
    TransferFunction, Vec3,
};
use svt_engine::{build_svt, DenseVolume, SvtConfig, VolumeDims, VoxelFormat};

fn blob(n: u32) -> DenseVolume {
    let c = n as f32 / 2.0;
    DenseVolume::from_fn(VolumeDims::cube(n), VoxelFormat::Unsigned8Normalized, |x, y, z| {
        let d = ((x as f32 + 0.5 - c).powi(2) + (y as f32 + 0.5 - c).powi(2) + (z as f32 + 0.5 - c).powi(2)).sqrt();
        (255.0 * (1.0 - d / c)).clamp(0.0, 255.0).round()
    })
    .unwrap()
}

fn front_ortho(n: u32, px: u32) -> Camera {
    let c = n as f64 / 2.0;
    Camera::orthographic(Vec3::new(c, c, -4.0), Vec3::new(c, c, 0.0), n as f64, px, px)
}

fn max_abs_diff(a: &Image, b: &Image) -> f64 {
    a.pixels
        .iter()
        .zip(&b.pixels)
        .flat_map(|(p, q)| (0..3).map(move |c| (p[c] as f64 - q[c] as f64).abs()))
        .fold(0.0, f64::max)
}

#[test]
fn light_contributions_add_exactly() {
    let svt = build_svt(&blob(32), &SvtConfig::default()).unwrap();
    let tf = TransferFunction::default().with_scales(0.2, 0.0);
    let a = Light::directional(Vec3::new(1.0, 0.3, 0.0), [0.8, 0.5, 0.2]);
    let b = Light::point(Vec3::new(40.0, 10.0, -5.0), 12.0, [0.1, 0.4, 0.9]);
    let ca = build_illumination_cache(&svt, &tf, &[a], 4, 32);
    let cb = build_illumination_cache(&svt, &tf, &[b], 4, 32);
    let both = build_illumination_cache(&svt, &tf, &[a, b], 4, 32);
    for (i, v) in both.values.iter().enumerate() {
        for c in 0..3 {
            assert_eq!(v[c], ca.values[i][c] + cb.values[i][c], "cell {i} channel {c}");
        }
    }
}

#[test]
fn render_is_deterministic() {
    let svt = build_svt(&blob(32), &SvtConfig::default()).unwrap();
    let tf = TransferFunction::default().with_scales(0.3, 0.5);
    let cache = build_illumination_cache(&svt, &tf, &[Light::directional(Vec3::new(0.0, -1.0, 0.0), [1.0; 3])], 4, 32);
    let cam = Camera::perspective(Vec3::new(50.0, 40.0, -30.0), Vec3::new(16.0, 16.0, 16.0), 35.0, 48, 40);
    let params = RenderParams::new(cam);
    let a = raymarch(&svt, &cache, &tf, &params);
    let b = raymarch(&svt, &cache, &tf, &params);
    assert_eq!(a, b);
}

#[test]
fn slab_error_shrinks_with_step_count() {
    let n = 32u32;
    let vol = DenseVolume::filled(VolumeDims::cube(n), VoxelFormat::Unsigned8Normalized, 255.0).unwrap();
    let svt = build_svt(&vol, &SvtConfig::default()).unwrap();
    let (sigma, e) = (0.08, 0.6);
    let tf = TransferFunction::constant([1.0; 3], 1.0).with_scales(sigma, e);
    let cache = IlluminationCache::zeros(svt.virtual_dims, 4);
    let want = common::slab_radiance(e, sigma, n as f64);
    let mut last = f64::INFINITY;
    for steps in [32, 64, 128, 256, 512] {
        let mut params = RenderParams::new(front_ortho(n, 8));
        params.max_step_count = steps;
        let img = raymarch(&svt, &cache, &tf, &params);
        let err = img.pixels.iter().map(|p| (p[0] as f64 - want).abs() / want).fold(0.0, f64::max);
        assert!(err <= last, "{steps} steps: error {err} grew from {last}");
        last = err;
    }
    assert!(last < 0.01);
}

#[test]
fn full_cut_matches_empty_volume() {
    let n = 24u32;
    let tf = TransferFunction::default().with_scales(0.5, 1.0);
    let mut params = RenderParams::new(front_ortho(n, 16));
    params.background = [0.1, 0.2, 0.3];
    let empty = DenseVolume::filled(VolumeDims::cube(n), VoxelFormat::Unsigned8Normalized, 0.0).unwrap();
    let esvt = build_svt(&empty, &SvtConfig::default()).unwrap();
    let reference = raymarch(&esvt, &IlluminationCache::zeros(esvt.virtual_dims, 4), &tf, &params);

    let svt = build_svt(&blob(n), &SvtConfig::default()).unwrap();
    let cache = IlluminationCache::zeros(svt.virtual_dims, 4);
    params.cut_plane = Some(CutPlane { normal: Vec3::new(0.3, -0.5, 0.8), offset: -1e9 });
    assert_eq!(raymarch(&svt, &cache, &tf, &params), reference);
    params.cut_plane = Some(CutPlane { normal: Vec3::new(0.0, 0.0, 1.0), offset: 1e9 });
    assert_ne!(raymarch(&svt, &cache, &tf, &params), reference);
}

fn chunk_setup(n: u32) -> (TransferFunction, Vec<Light>, RenderParams) {
    let tf = TransferFunction::default().with_scales(0.25, 0.1);
    let lights = vec![
        Light::directional(Vec3::new(1.0, 0.2, 0.1), [1.0, 0.9, 0.8]),
        Light::point(Vec3::new(n as f64 * 0.8, n as f64 * 1.2, -3.0), 10.0, [0.3, 0.3, 0.6]),
    ];
    let mut params = RenderParams::new(front_ortho(n, 32));
    params.max_step_count = 96;
    params.shadow_steps = 32;
    (tf, lights, params)
}

#[test]
fn unified_image_ignores_the_split() {
    let n = 32u32;
    let vol = blob(n);
    let (tf, lights, mut params) = chunk_setup(n);
    params.camera = Camera::perspective(Vec3::new(60.0, 45.0, -40.0), Vec3::new(16.0, 16.0, 16.0), 40.0, 32, 32);
    let cfg = SvtConfig::default();
    let reference = render_chunked(&vol, &ChunkSplit::even(Axis::X, 1, n).unwrap(), ChunkMode::Unified, &lights, &tf, &params, &cfg)
        .unwrap();
    for split in [
        ChunkSplit::even(Axis::Y, 3, n).unwrap(),
        ChunkSplit::from_boundaries(Axis::Z, vec![0, 5, 19, 32]).unwrap(),
    ] {
        let img = render_chunked(&vol, &split, ChunkMode::Unified, &lights, &tf, &params, &cfg).unwrap();
        assert_eq!(img, reference, "{split:?}");
    }
}

#[test]
fn single_independent_chunk_is_a_plain_render() {
    let n = 32u32;
    let vol = blob(n);
    let (tf, lights, params) = chunk_setup(n);
    let cfg = SvtConfig::default();
    let svt = build_svt(&vol, &cfg).unwrap();
    let cache = build_illumination_cache(&svt, &tf, &lights, params.downsample_factor, params.shadow_steps);
    let plain = raymarch(&svt, &cache, &tf, &params);
    let split = ChunkSplit::even(Axis::Z, 1, n).unwrap();
    let ind = render_chunked(&vol, &split, ChunkMode::Independent, &lights, &tf, &params, &cfg).unwrap();
    assert_eq!(ind, plain);
}

#[test]
fn independent_chunk_lights_itself_alone() {
    // Right half empty: the left chunk must render as if nothing else existed.
    let n = 32u32;
    let half = n / 2;
    let full = blob(n);
    let vol = DenseVolume::from_fn(full.dims, full.format, |x, y, z| if x < half { full.get(x, y, z) } else { 0.0 })
        .unwrap();
    let (tf, lights, params) = chunk_setup(n);
    let cfg = SvtConfig::default();
    let split = ChunkSplit::even(Axis::X, 2, n).unwrap();
    let ind = render_chunked(&vol, &split, ChunkMode::Independent, &lights, &tf, &params, &cfg).unwrap();

    let left = vol.subvolume([0; 3], VolumeDims::new(half, n, n)).unwrap();
    let svt = build_svt(&left, &cfg).unwrap();
    let cache = build_illumination_cache(&svt, &tf, &lights, params.downsample_factor, params.shadow_steps);
    let alone = raymarch(&svt, &cache, &tf, &params);
    assert!(max_abs_diff(&ind, &alone) < 1e-6);
}

#[test]
fn independent_chunks_miss_upstream_shadow() {
    let n = 32u32;
    let vol = DenseVolume::filled(VolumeDims::cube(n), VoxelFormat::Unsigned8Normalized, 255.0).unwrap();
    let tf = TransferFunction::constant([1.0; 3], 1.0).with_scales(0.2, 0.0);
    let lights = [Light::directional(Vec3::new(1.0, 0.0, 0.0), [1.0; 3])];
    let mut params = RenderParams::new(front_ortho(n, 32));
    params.max_step_count = 64;
    let cfg = SvtConfig::default();
    let split = ChunkSplit::even(Axis::X, 2, n).unwrap();
    let ind = render_chunked(&vol, &split, ChunkMode::Independent, &lights, &tf, &params, &cfg).unwrap();
    let uni = render_chunked(&vol, &split, ChunkMode::Unified, &lights, &tf, &params, &cfg).unwrap();
    let (mut ind_far, mut uni_far) = (0.0, 0.0);
    for y in 0..32 {
        // Column i sits at world x = n - (i + 0.5), so columns below 16 are the far chunk.
        for x in 0..16 {
            let (a, b) = (ind.luminance(x, y), uni.luminance(x, y));
            assert!(a >= b - 1e-6, "pixel {x},{y}: independent {a} below unified {b}");
            ind_far += a;
            uni_far += b;
        }
    }
    assert!(ind_far > 2.0 * uni_far);
}
