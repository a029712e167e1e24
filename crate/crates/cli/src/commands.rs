use std::fmt::Write as _;
use std::path::Path;
use std::time::Instant;

use svt_engine::capacity::{check_overflow, int32_regression_probe, CapacityInputs};
use svt_engine::chunk::{border_artifact_metric, render_chunked, Axis, ChunkMode, ChunkSplit};
use svt_engine::container::{read_svt, write_svt};
use svt_engine::ingest::{parse_segy_bytes, AxisMapping, SegyFormatCode};
use svt_engine::ingest::{normalize_to_u8, read_raw, read_raw_with_sidecar, sidecar_path, write_raw, RawSidecar};
use svt_engine::render::{
    build_illumination_cache, raymarch, write_image, Camera, CutPlane, Light, RenderParams, TransferFunction, Vec3,
};
use svt_engine::upload::{apply_upload, serialize_upload, UploadBuffer, UploadError};
use svt_engine::{build_svt, sample_nearest, sample_trilinear, DenseVolume, Endianness, SparseVolumeTexture};
use svt_engine::{SvtConfig, VolumeDims, VoxelFormat};

use crate::args::*;
use crate::error::CliError;
use crate::Ctx;

type Result<T = ()> = std::result::Result<T, CliError>;

pub(crate) fn dispatch(cmd: Command, ctx: &mut Ctx) -> Result {
    match cmd {
        Command::ImportSegy(a) => import_segy(a, ctx),
        Command::ImportRaw(a) => import_raw(a, ctx),
        Command::Normalize(a) => normalize(a, ctx),
        Command::Build(a) => build(a, ctx),
        Command::Plan(a) => plan(a, ctx),
        Command::DumpUpload(a) => dump_upload(a, ctx),
        Command::ApplyUpload(a) => apply(a, ctx),
        Command::Probe(a) => probe(a, ctx),
        Command::Render(a) => render(a, ctx),
        Command::ChunkCompare(a) => chunk_compare(a, ctx),
        Command::Inspect(a) => inspect(a, ctx),
    }
}

fn emit(ctx: &mut Ctx, text: &str) -> Result {
    ctx.out
        .write_all(text.as_bytes())
        .map_err(|source| CliError::Io { path: "<stdout>".into(), source })
}

fn read_file(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|source| CliError::Io { path: path.display().to_string(), source })
}

fn write_file(path: &Path, bytes: &[u8]) -> Result {
    std::fs::write(path, bytes).map_err(|source| CliError::Io { path: path.display().to_string(), source })
}

fn parse_floats<const N: usize>(s: &str, what: &str) -> Result<[f64; N]> {
    let vals: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| CliError::usage(format!("{what}: `{s}` is not a list of numbers")))?;
    let n = vals.len();
    vals.try_into()
        .map_err(|_| CliError::usage(format!("{what}: expected {N} comma-separated numbers, got {n}")))
}

fn parse_vec3(s: &str, what: &str) -> Result<Vec3> {
    parse_floats::<3>(s, what).map(Vec3::from_array)
}

fn parse_dims(s: &str) -> Result<VolumeDims> {
    let v: Vec<u32> = s
        .split([',', 'x'])
        .map(|p| p.trim().parse::<u32>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| CliError::usage(format!("dims: `{s}` is not X,Y,Z")))?;
    let a: [u32; 3] = v.try_into().map_err(|_| CliError::usage(format!("dims: `{s}` is not X,Y,Z")))?;
    Ok(VolumeDims::from_array(a))
}

fn tiling_config(t: &TilingArgs) -> Result<SvtConfig> {
    let mut cfg = SvtConfig::new(t.tile, t.pad, t.extent).map_err(|e| CliError::usage(e.to_string()))?;
    cfg.empty_threshold = t.empty_threshold;
    Ok(cfg)
}

fn volume_kv(v: &DenseVolume) -> String {
    format!(
        "dims: {},{},{}\nformat: {}\nvalue_range: {},{}\n",
        v.dims.x,
        v.dims.y,
        v.dims.z,
        v.format.name(),
        v.value_range.0,
        v.value_range.1
    )
}

fn import_segy(a: ImportSegyArgs, ctx: &mut Ctx) -> Result {
    let t = Instant::now();
    let axes = AxisMapping::parse(&a.axes).ok_or_else(|| CliError::usage(format!("axes: cannot parse `{}`", a.axes)))?;
    let bytes = read_file(&a.input)?;
    let seg = parse_segy_bytes(&bytes, axes)?;
    write_raw(&a.output, &seg.volume)?;
    ctx.timing("import", t);
    let h = &seg.header;
    let fmt = match h.format_code {
        SegyFormatCode::IbmFloat => "ibm-float",
        SegyFormatCode::IeeeFloat => "ieee-float",
    };
    let mut s = volume_kv(&seg.volume);
    let _ = write!(
        s,
        "segy_format: {fmt}\nsamples_per_trace: {}\nsample_interval_us: {}\ntraces: {}\ninline_range: {},{}\ncrossline_range: {},{}\nmissing_traces: {}\n",
        h.samples_per_trace,
        h.sample_interval,
        h.trace_count,
        h.inline_range.0,
        h.inline_range.1,
        h.crossline_range.0,
        h.crossline_range.1,
        seg.missing.len()
    );
    emit(ctx, &s)
}

fn import_raw(a: ImportRawArgs, ctx: &mut Ctx) -> Result {
    let vol = match (&a.dims, a.format) {
        (Some(d), Some(f)) => {
            let format = match f {
                FormatArg::U8 => VoxelFormat::Unsigned8Normalized,
                FormatArg::F32 => VoxelFormat::Float32,
            };
            let endian = match a.endian {
                EndianArg::Little => Endianness::Little,
                EndianArg::Big => Endianness::Big,
            };
            read_raw(&a.input, parse_dims(d)?, format, endian)?
        }
        (None, None) => read_raw_with_sidecar(&a.input)?,
        _ => return Err(CliError::usage("--dims and --format go together")),
    };
    write_raw(&a.output, &vol)?;
    emit(ctx, &volume_kv(&vol))
}

fn normalize(a: NormalizeArgs, ctx: &mut Ctx) -> Result {
    let vol = read_raw_with_sidecar(&a.input)?;
    let range = match &a.range {
        Some(r) => {
            let [lo, hi] = parse_floats::<2>(r, "range")?;
            (lo, hi)
        }
        None => vol.value_range,
    };
    let out = normalize_to_u8(&vol, range)?;
    write_raw(&a.output, &out)?;
    emit(ctx, &volume_kv(&out))
}

fn svt_kv(svt: &SparseVolumeTexture) -> String {
    let d = svt.virtual_dims;
    let ad = svt.atlas.dims;
    let st = &svt.stats;
    let tiles: Vec<String> = st.nonempty_tile_count.iter().map(u64::to_string).collect();
    format!(
        "virtual_dims: {},{},{}\nformat: {}\nvalue_range: {},{}\ntile_size: {}\npad: {}\nmip_count: {}\nresident_tiles: {}\nresident_tiles_total: {}\natlas_dims: {},{},{}\nnonempty_voxels: {}\npadded_nonempty_voxels: {}\nmean_tile_occupancy: {:.6}\n",
        d.x,
        d.y,
        d.z,
        svt.format.name(),
        svt.value_range.0,
        svt.value_range.1,
        svt.config.tile_size,
        svt.config.pad,
        svt.mip_count(),
        tiles.join(","),
        st.nonempty_tile_count.iter().sum::<u64>(),
        ad.x,
        ad.y,
        ad.z,
        st.nonempty_voxel_count,
        st.padded_nonempty_voxel_count,
        st.mean_tile_occupancy
    )
}

fn build(a: BuildArgs, ctx: &mut Ctx) -> Result {
    let cfg = tiling_config(&a.tiling)?;
    let vol = read_raw_with_sidecar(&a.input)?;
    let t = Instant::now();
    let svt = build_svt(&vol, &cfg)?;
    ctx.timing("build", t);
    write_svt(&a.output, &svt)?;
    emit(ctx, &svt_kv(&svt))
}

fn plan(a: PlanArgs, ctx: &mut Ctx) -> Result {
    let cfg = tiling_config(&a.tiling)?;
    let inputs = match &a.from {
        Some(p) => {
            let svt = read_svt(p)?;
            CapacityInputs::new(svt.stats.nonempty_voxel_count, svt.format.bytes_per_voxel(), cfg)
                .with_occupancy(svt.stats.mean_tile_occupancy)
                .with_tile_counts(svt.stats.nonempty_tile_count.clone())
        }
        None => {
            if !(a.nonempty >= 0.0 && a.nonempty < u64::MAX as f64) {
                return Err(CliError::usage(format!("nonempty: {} is out of range", a.nonempty)));
            }
            if !(a.occupancy > 0.0 && a.occupancy <= 1.0) {
                return Err(CliError::usage(format!("occupancy: {} is not in (0, 1]", a.occupancy)));
            }
            CapacityInputs::new(a.nonempty.round() as u64, a.bytes_per_voxel, cfg).with_occupancy(a.occupancy)
        }
    };
    let report = check_overflow(&inputs);
    let mut s = String::new();
    if !a.kv {
        s.push_str(&report.render_text());
        s.push('\n');
    }
    s.push_str(&report.render_kv());
    if let Some(n) = a.probe_payload {
        let p = int32_regression_probe(n);
        let _ = write!(
            s,
            "probe_offset_64: {}\nprobe_offset_32_signed: {}\nprobe_diverges: {}\n",
            p.offset_64,
            p.offset_32_signed_emulated,
            p.diverges()
        );
    }
    emit(ctx, &s)?;
    if a.strict {
        if !report.fits_atlas {
            return Err(CliError::DoesNotFit(
                "AtlasCapacityExceeded",
                format!("{} tile slots, atlas extent estimate {}", report.required_slots, report.atlas_extent_estimate),
            ));
        }
        if !report.fits_uint32_upload {
            return Err(CliError::DoesNotFit(
                "Uint32OverflowFlagged",
                format!("upload buffer {} bytes", report.upload_buffer_bytes),
            ));
        }
    }
    Ok(())
}

fn upload_kv(b: &UploadBuffer) -> String {
    format!(
        "tile_count: {}\nwindows: {}\ntotal_elements: {}\ntotal_bytes: {}\nexceeds_uint32: {}\n",
        b.tile_count,
        b.windows.len(),
        b.total_elements,
        b.total_bytes,
        b.exceeds_uint32
    )
}

fn dump_upload(a: DumpUploadArgs, ctx: &mut Ctx) -> Result {
    let svt = read_svt(&a.input)?;
    let t = Instant::now();
    let buf = serialize_upload(&svt);
    ctx.timing("serialize", t);
    if buf.exceeds_uint32 && !a.allow_overflow {
        return Err(UploadError::Uint32OverflowFlagged { total_bytes: buf.total_bytes }.into());
    }
    write_file(&a.output, &buf.to_bytes())?;
    emit(ctx, &upload_kv(&buf))
}

fn apply(a: ApplyUploadArgs, ctx: &mut Ctx) -> Result {
    let buf = UploadBuffer::from_bytes(&read_file(&a.input)?)?;
    let template = read_svt(&a.svt)?;
    let t = Instant::now();
    let atlas = apply_upload(&buf, &template.config, &template.mips)?;
    ctx.timing("apply", t);
    let matches = atlas == template.atlas;
    let mut svt = template;
    svt.atlas = atlas;
    svt.validate()?;
    write_svt(&a.output, &svt)?;
    let mut s = upload_kv(&buf);
    let _ = writeln!(s, "atlas_matches_template: {matches}");
    emit(ctx, &s)
}

fn probe(a: ProbeArgs, ctx: &mut Ctx) -> Result {
    let svt = read_svt(&a.input)?;
    let p = parse_floats::<3>(&a.pos, "pos")?;
    if a.mip >= svt.mip_count() {
        return Err(CliError::usage(format!("mip {} out of range ({} levels)", a.mip, svt.mip_count())));
    }
    let v = match a.filter {
        FilterArg::Nearest => sample_nearest(&svt, p.into(), a.mip),
        FilterArg::Trilinear => sample_trilinear(&svt, p.into(), a.mip),
    };
    emit(ctx, &format!("pos: {},{},{}\nmip: {}\nvalue: {v}\n", p[0], p[1], p[2], a.mip))
}

fn parse_light(s: &str) -> Result<Light> {
    let parts: Vec<&str> = s.split(':').collect();
    let bad = || CliError::usage(format!("light: cannot parse `{s}`"));
    let rgb = |p: &str| -> Result<[f64; 3]> {
        let c = parse_floats::<3>(p, "light intensity")?;
        if c.iter().any(|v| *v < 0.0) {
            return Err(CliError::usage("light intensity must be non-negative"));
        }
        Ok(c)
    };
    match parts.as_slice() {
        ["dir", d, i] => {
            let d = parse_vec3(d, "light direction")?;
            if d.length() == 0.0 {
                return Err(CliError::usage("light direction is zero"));
            }
            Ok(Light::directional(d, rgb(i)?))
        }
        ["point", p, r, i] => {
            let r: f64 = r.parse().map_err(|_| bad())?;
            Ok(Light::point(parse_vec3(p, "light position")?, r, rgb(i)?))
        }
        _ => Err(bad()),
    }
}

struct View {
    tf: TransferFunction,
    lights: Vec<Light>,
    params: RenderParams,
}

fn view(v: &ViewArgs, dims: VolumeDims, ortho_default: bool) -> Result<View> {
    let ext = dims.as_array().map(|c| c as f64);
    let centre = Vec3::new(ext[0] / 2.0, ext[1] / 2.0, ext[2] / 2.0);
    let target = v.target.as_deref().map(|s| parse_vec3(s, "target")).transpose()?.unwrap_or(centre);
    let reach = ext[0].max(ext[1]).max(ext[2]);
    let eye = match &v.eye {
        Some(s) => parse_vec3(s, "eye")?,
        None if ortho_default || v.ortho.is_some() => Vec3::new(target.x, target.y, -1.0),
        None => Vec3::new(target.x, target.y, target.z - 2.5 * reach),
    };
    let up = parse_vec3(&v.up, "up")?;
    let camera = match v.ortho {
        Some(h) => Camera::orthographic(eye, target, h, v.width, v.height),
        None if ortho_default => Camera::orthographic(eye, target, ext[0].max(ext[1]), v.width, v.height),
        None => Camera::perspective(eye, target, v.fov, v.width, v.height),
    }
    .with_up(up);

    let [lo, hi] = parse_floats::<2>(&v.window, "window")?;
    let mut tf = TransferFunction::default().with_scales(v.density_scale, v.emission_scale).with_window(lo, hi);
    if let Some(p) = &v.lut {
        tf.lut = TransferFunction::load_lut(p).map_err(CliError::Lut)?;
    }
    tf.validate()?;

    let mut params = RenderParams::new(camera);
    params.max_step_count = v.steps;
    params.downsample_factor = v.downsample;
    params.shadow_steps = v.shadow_steps;
    params.mip_level = v.mip;
    let bg = parse_floats::<3>(&v.background, "background")?;
    params.background = bg;
    if let Some(c) = &v.cut {
        let [nx, ny, nz, d] = parse_floats::<4>(c, "cut")?;
        params.cut_plane = Some(CutPlane { normal: Vec3::new(nx, ny, nz), offset: d });
    }
    params.validate()?;
    let lights = v.lights.iter().map(|s| parse_light(s)).collect::<Result<Vec<_>>>()?;
    Ok(View { tf, lights, params })
}

fn render(a: RenderArgs, ctx: &mut Ctx) -> Result {
    let svt = read_svt(&a.input)?;
    let View { tf, lights, params } = view(&a.view, svt.virtual_dims, false)?;
    if params.mip_level >= svt.mip_count() {
        return Err(CliError::usage(format!("mip {} out of range ({} levels)", params.mip_level, svt.mip_count())));
    }
    let t = Instant::now();
    let cache = build_illumination_cache(&svt, &tf, &lights, params.downsample_factor, params.shadow_steps);
    ctx.timing("illumination cache", t);
    let t = Instant::now();
    let img = raymarch(&svt, &cache, &tf, &params);
    ctx.timing("raymarch", t);
    write_image(&img, &a.output)?;
    let c = cache.dims;
    emit(
        ctx,
        &format!(
            "image: {}x{}\nsteps: {}\ncache_dims: {},{},{}\nlights: {}\noutput: {}\n",
            img.width,
            img.height,
            params.max_step_count,
            c.x,
            c.y,
            c.z,
            lights.len(),
            a.output.display()
        ),
    )
}

fn chunk_compare(a: ChunkCompareArgs, ctx: &mut Ctx) -> Result {
    let cfg = tiling_config(&a.tiling)?;
    let vol = read_raw_with_sidecar(&a.input)?;
    let View { tf, mut lights, params } = view(&a.view, vol.dims, true)?;
    let axis = match a.axis {
        AxisArg::X => Axis::X,
        AxisArg::Y => Axis::Y,
        AxisArg::Z => Axis::Z,
    };
    if lights.is_empty() {
        let mut d = [0.0; 3];
        d[axis.index()] = 1.0;
        lights.push(Light::directional(Vec3::from_array(d), [1.0; 3]));
        ctx.note("no --light given; lighting along the split axis");
    }
    let extent = vol.dims.as_array()[axis.index()];
    let split = ChunkSplit::even(axis, a.count, extent)?;
    std::fs::create_dir_all(&a.out_dir)
        .map_err(|source| CliError::Io { path: a.out_dir.display().to_string(), source })?;
    let t = Instant::now();
    let ind = render_chunked(&vol, &split, ChunkMode::Independent, &lights, &tf, &params, &cfg)?;
    ctx.timing("independent", t);
    let t = Instant::now();
    let uni = render_chunked(&vol, &split, ChunkMode::Unified, &lights, &tf, &params, &cfg)?;
    ctx.timing("unified", t);
    let pi = a.out_dir.join("independent.ppm");
    let pu = a.out_dir.join("unified.ppm");
    write_image(&ind, &pi)?;
    write_image(&uni, &pu)?;
    let m = border_artifact_metric(&ind, &uni, &split, a.band, &params.camera, vol.dims)?;
    let b: Vec<String> = split.boundaries.iter().map(u32::to_string).collect();
    let mut s = format!(
        "independent: {}\nunified: {}\naxis: {:?}\ncount: {}\nboundaries: {}\n",
        pi.display(),
        pu.display(),
        axis,
        split.count,
        b.join(",")
    )
    .to_lowercase();
    s.push_str(&m.render_kv());
    emit(ctx, &s)
}

fn inspect(a: InspectArgs, ctx: &mut Ctx) -> Result {
    let bytes = read_file(&a.input)?;
    let s = match bytes.get(..4) {
        Some(b"SVTF") => {
            let svt = svt_engine::container::decode(&bytes)?;
            format!("kind: svt-container\nbytes: {}\n{}", bytes.len(), svt_kv(&svt))
        }
        Some(b"SVTU") => {
            let buf = UploadBuffer::from_bytes(&bytes)?;
            format!("kind: upload-stream\nformat: {}\n{}", buf.format.name(), upload_kv(&buf))
        }
        _ if sidecar_path(&a.input).exists() => {
            let side = sidecar_path(&a.input);
            let text = std::fs::read_to_string(&side)
                .map_err(|source| CliError::Io { path: side.display().to_string(), source })?;
            let meta = RawSidecar::parse(&text)?;
            let vol = read_raw(&a.input, meta.dims, meta.format, meta.endianness)?;
            let range = meta.value_range.unwrap_or(vol.value_range);
            format!(
                "kind: raw\ndims: {},{},{}\nformat: {}\nendianness: {}\nvalue_range: {},{}\nmean: {}\n",
                meta.dims.x,
                meta.dims.y,
                meta.dims.z,
                meta.format.name(),
                meta.endianness.name(),
                range.0,
                range.1,
                vol.mean()
            )
        }
        _ if bytes.len() >= 3600 => {
            let seg = parse_segy_bytes(&bytes, AxisMapping::default())?;
            let h = &seg.header;
            format!(
                "kind: segy\nsamples_per_trace: {}\ntraces: {}\ninline_range: {},{}\ncrossline_range: {},{}\nmissing_traces: {}\n{}",
                h.samples_per_trace,
                h.trace_count,
                h.inline_range.0,
                h.inline_range.1,
                h.crossline_range.0,
                h.crossline_range.1,
                seg.missing.len(),
                volume_kv(&seg.volume)
            )
        }
        _ => return Err(CliError::UnknownFile(a.input.display().to_string())),
    };
    emit(ctx, &s)
}
