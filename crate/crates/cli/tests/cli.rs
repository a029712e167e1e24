use std::path::{Path, PathBuf};
use std::process::Command;

use svt_cli::{run, EXIT_CAPACITY, EXIT_DATA, EXIT_OK, EXIT_USAGE};

struct Out {
    code: i32,
    stdout: String,
    stderr: String,
}

fn svtf(args: &[&str]) -> Out {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("svtf").chain(args.iter().copied());
    let code = run(argv, &mut out, &mut err);
    Out { code, stdout: String::from_utf8(out).unwrap(), stderr: String::from_utf8(err).unwrap() }
}

fn kv<'a>(text: &'a str, key: &str) -> &'a str {
    text.lines()
        .find_map(|l| l.strip_prefix(key).and_then(|r| r.strip_prefix(": ")))
        .unwrap_or_else(|| panic!("no `{key}` in:\n{text}"))
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

/// A 32³ u8 ball of radius 10 written as raw plus sidecar.
fn ball(dir: &Path) -> PathBuf {
    let n = 32i32;
    let mut bytes = Vec::with_capacity((n * n * n) as usize);
    for z in 0..n {
        for y in 0..n {
            for x in 0..n {
                let r2 = (x - 16).pow(2) + (y - 16).pow(2) + (z - 16).pow(2);
                bytes.push(if r2 < 100 { 200u8 } else { 0 });
            }
        }
    }
    let raw = dir.join("ball.raw");
    std::fs::write(&raw, bytes).unwrap();
    std::fs::write(dir.join("ball.raw.txt"), "dims: 32,32,32\nformat: u8\nendianness: little\n").unwrap();
    raw
}

#[test]
fn no_arguments_prints_usage_and_fails() {
    let o = svtf(&[]);
    assert_eq!(o.code, EXIT_USAGE);
    assert!(o.stderr.contains("Usage: svtf"));
}

#[test]
fn help_succeeds() {
    let o = svtf(&["--help"]);
    assert_eq!(o.code, EXIT_OK);
    assert!(o.stdout.contains("chunk-compare"));
}

#[test]
fn unknown_flag_is_usage_error() {
    let o = svtf(&["plan", "--bogus"]);
    assert_eq!(o.code, EXIT_USAGE);
    assert!(o.stderr.starts_with("error: unexpected argument '--bogus'"));
}

#[test]
fn plan_at_defaults_reports_net_payload() {
    let o = svtf(&["plan", "--extent", "2048", "--tile", "16", "--pad", "1"]);
    assert_eq!(o.code, EXIT_OK);
    assert_eq!(kv(&o.stdout, "net_payload_voxels"), "5278862410");
    let gi: f64 = kv(&o.stdout, "net_payload_gi_voxels").parse().unwrap();
    assert!((gi - 4.9).abs() < 0.05);
    assert!(o.stdout.contains("net payload            5278862410 voxels (4.916 Gi-voxels)"));
    assert_eq!(kv(&o.stdout, "occupancy_breakeven"), "0.500000");
}

#[test]
fn plan_kolumbo_and_probe() {
    let o = svtf(&["plan", "--kv", "--nonempty", "2.6e9", "--occupancy", "0.7", "--probe-payload", "2147483648"]);
    assert_eq!(o.code, EXIT_OK, "{}", o.stderr);
    assert!(!o.stdout.contains("padding factor "));
    assert_eq!(kv(&o.stdout, "fits_int32_index"), "false");
    assert_eq!(kv(&o.stdout, "fits_uint32_upload"), "true");
    assert_eq!(kv(&o.stdout, "probe_offset_32_signed"), "-2147483648");
    assert_eq!(kv(&o.stdout, "probe_diverges"), "true");
}

#[test]
fn strict_plan_fails_on_overflow() {
    let o = svtf(&["plan", "--strict", "--nonempty", "969181200", "--bytes-per-voxel", "4"]);
    assert_eq!(o.code, EXIT_CAPACITY);
    assert_eq!(o.stderr, "error: Uint32OverflowFlagged: upload buffer 6308331204 bytes\n");
}

#[test]
fn pipeline_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let raw = ball(dir.path());
    let svt = dir.path().join("ball.svtf");
    let o = svtf(&["build", p(&raw), "-o", p(&svt)]);
    assert_eq!(o.code, EXIT_OK, "{}", o.stderr);
    assert_eq!(kv(&o.stdout, "resident_tiles"), "8,1");

    let o = svtf(&["probe", p(&svt), "--pos", "16,16,16"]);
    assert_eq!(kv(&o.stdout, "value"), "200");
    let o = svtf(&["probe", p(&svt), "--pos", "-1,0,0", "--filter", "nearest"]);
    assert_eq!(kv(&o.stdout, "value"), "0");

    let up = dir.path().join("ball.svtu");
    assert_eq!(svtf(&["dump-upload", p(&svt), "-o", p(&up)]).code, EXIT_OK);
    let back = dir.path().join("back.svtf");
    let o = svtf(&["apply-upload", p(&up), "--svt", p(&svt), "-o", p(&back)]);
    assert_eq!(o.code, EXIT_OK, "{}", o.stderr);
    assert_eq!(kv(&o.stdout, "atlas_matches_template"), "true");
    assert_eq!(std::fs::read(&svt).unwrap(), std::fs::read(&back).unwrap());

    let o = svtf(&["inspect", p(&up)]);
    assert_eq!(kv(&o.stdout, "kind"), "upload-stream");
    let o = svtf(&["inspect", p(&svt)]);
    assert_eq!(kv(&o.stdout, "kind"), "svt-container");
    let o = svtf(&["inspect", p(&raw)]);
    assert_eq!(kv(&o.stdout, "kind"), "raw");

    let o = svtf(&["plan", "--from", p(&svt), "--kv"]);
    assert_eq!(kv(&o.stdout, "required_slots"), "9");
}

#[test]
fn build_over_capacity_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let raw = ball(dir.path());
    let o = svtf(&["build", p(&raw), "-o", p(&dir.path().join("x.svtf")), "--extent", "36"]);
    assert_eq!(o.code, EXIT_CAPACITY);
    assert_eq!(o.stderr, "error: AtlasCapacityExceeded: 9 tile slots required, atlas holds 8\n");
}

#[test]
fn render_and_chunk_compare() {
    let dir = tempfile::tempdir().unwrap();
    let raw = ball(dir.path());
    let svt = dir.path().join("ball.svtf");
    svtf(&["build", p(&raw), "-o", p(&svt)]);
    let img = dir.path().join("ball.ppm");
    let o = svtf(&[
        "render", p(&svt), "-o", p(&img), "--width", "24", "--height", "16", "--steps", "64",
        "--light", "dir:1,0,0:1,1,1", "--light", "point:16,40,16:8:0,0,1", "--emission-scale", "0.5",
        "--cut", "0,0,1,20",
    ]);
    assert_eq!(o.code, EXIT_OK, "{}", o.stderr);
    let bytes = std::fs::read(&img).unwrap();
    assert!(bytes.starts_with(b"P6\n24 16\n255\n"));
    assert_eq!(bytes.len(), 13 + 24 * 16 * 3);

    let out = dir.path().join("cc");
    let o = svtf(&[
        "chunk-compare", p(&raw), "--out-dir", p(&out), "--width", "32", "--height", "32", "--steps", "64",
        "--density-scale", "0.3",
    ]);
    assert_eq!(o.code, EXIT_OK, "{}", o.stderr);
    assert!(out.join("independent.ppm").exists() && out.join("unified.ppm").exists());
    assert_eq!(kv(&o.stdout, "boundaries"), "0,16,32");
    let ratio: f64 = kv(&o.stdout, "ratio").parse().unwrap();
    assert!(ratio > 1.0);
}

/// Every error path and its stable first line.
#[test]
fn error_reason_snapshots() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let raw = ball(d);
    let svt = d.join("ball.svtf");
    svtf(&["build", p(&raw), "-o", p(&svt)]);
    std::fs::write(d.join("junk.bin"), b"hello").unwrap();
    std::fs::write(d.join("bad.svtf"), b"SVTF\x09\0\0\0").unwrap();
    std::fs::write(d.join("bad.svtu"), b"SVTU\x01\0\0\0").unwrap();
    std::fs::write(d.join("short.raw"), [0u8; 10]).unwrap();
    std::fs::write(d.join("short.raw.txt"), "dims: 4,4,4\nformat: u8\nendianness: little\n").unwrap();
    std::fs::write(d.join("side.raw"), [0u8; 8]).unwrap();
    std::fs::write(d.join("side.raw.txt"), "dims: 2,2\n").unwrap();
    std::fs::write(d.join("lut.txt"), "1 2 3 4\n").unwrap();
    let mut segy = vec![0u8; 3600];
    segy[3225] = 3;
    std::fs::write(d.join("fmt3.sgy"), &segy).unwrap();
    std::fs::write(d.join("trunc.sgy"), [0u8; 100]).unwrap();

    let s = |x: &str| d.join(x).to_str().unwrap().to_string();
    let cases: Vec<(Vec<String>, i32, &str)> = vec![
        (vec!["inspect".into(), s("junk.bin")], EXIT_DATA, "error: UnknownFile: unrecognized file: <d>/junk.bin"),
        (vec!["inspect".into(), s("bad.svtf")], EXIT_DATA, "error: CorruptContainer: unsupported version 9"),
        (vec!["inspect".into(), s("bad.svtu")], EXIT_DATA, "error: CorruptStream: "),
        (vec!["build".into(), s("short.raw"), "-o".into(), s("o.svtf")], EXIT_DATA, "error: SizeMismatch: expected 64 bytes, found 10"),
        (vec!["build".into(), s("side.raw"), "-o".into(), s("o.svtf")], EXIT_DATA, "error: BadSidecar: "),
        (vec!["build".into(), s("missing.raw"), "-o".into(), s("o.svtf")], EXIT_DATA, "error: IoError: io error on <d>/missing.raw.txt"),
        (vec!["build".into(), p(&raw).into(), "-o".into(), s("o.svtf"), "--tile".into(), "0".into()], EXIT_USAGE, "error: UsageError: "),
        (vec!["import-segy".into(), s("fmt3.sgy"), "-o".into(), s("o.raw")], EXIT_DATA, "error: UnsupportedFormatCode: 3 (only 1 = IBM float and 5 = IEEE float are accepted)"),
        (vec!["import-segy".into(), s("trunc.sgy"), "-o".into(), s("o.raw")], EXIT_DATA, "error: TruncatedHeader: file is 100 bytes, SEG-Y headers need 3600"),
        (vec!["import-segy".into(), s("trunc.sgy"), "-o".into(), s("o.raw"), "--axes".into(), "abc".into()], EXIT_USAGE, "error: UsageError: axes: cannot parse `abc`"),
        (vec!["normalize".into(), p(&raw).into(), "-o".into(), s("n.raw"), "--range".into(), "5,5".into()], EXIT_DATA, "error: DegenerateRange: normalization range [5, 5] is empty"),
        (vec!["probe".into(), p(&svt).into(), "--pos".into(), "1,2".into()], EXIT_USAGE, "error: UsageError: pos: expected 3 comma-separated numbers, got 2"),
        (vec!["probe".into(), p(&svt).into(), "--pos".into(), "1,2,3".into(), "--mip".into(), "5".into()], EXIT_USAGE, "error: UsageError: mip 5 out of range (2 levels)"),
        (vec!["render".into(), p(&svt).into(), "-o".into(), s("r.ppm"), "--lut".into(), s("lut.txt")], EXIT_DATA, "error: BadLut: cannot read transfer function: invalid transfer function: lut has 1 entries, expected 256"),
        (vec!["render".into(), p(&svt).into(), "-o".into(), s("r.ppm"), "--window".into(), "0.5,0.2".into()], EXIT_USAGE, "error: InvalidTransfer: invalid transfer function: window lo 0.5 must be below hi 0.2"),
        (vec!["render".into(), p(&svt).into(), "-o".into(), s("r.ppm"), "--steps".into(), "0".into()], EXIT_USAGE, "error: InvalidParams: invalid render parameters: max_step_count must be at least 1"),
        (vec!["render".into(), p(&svt).into(), "-o".into(), s("r.ppm"), "--light".into(), "sun".into()], EXIT_USAGE, "error: UsageError: light: cannot parse `sun`"),
        (vec!["render".into(), p(&svt).into(), "-o".into(), s("nodir/r.ppm"), "--width".into(), "2".into(), "--height".into(), "2".into(), "--steps".into(), "2".into()], EXIT_DATA, "error: IoError: io error on <d>/nodir/r.ppm"),
        (vec!["chunk-compare".into(), p(&raw).into(), "--out-dir".into(), s("cc"), "--count".into(), "0".into()], EXIT_USAGE, "error: InvalidSplit: invalid split: cannot cut extent 32 into 0 chunks"),
        (vec!["apply-upload".into(), s("bad.svtu"), "--svt".into(), p(&svt).into(), "-o".into(), s("o.svtf")], EXIT_DATA, "error: CorruptStream: "),
        (vec!["import-raw".into(), p(&raw).into(), "-o".into(), s("o.raw"), "--dims".into(), "4,4,4".into()], EXIT_USAGE, "error: UsageError: --dims and --format go together"),
    ];
    let dstr = d.to_str().unwrap();
    for (args, code, prefix) in cases {
        let argv: Vec<&str> = args.iter().map(String::as_str).collect();
        let o = svtf(&argv);
        let line = o.stderr.replace(dstr, "<d>");
        assert_eq!(o.code, code, "{argv:?}: {line}");
        assert!(line.starts_with(prefix), "{argv:?}:\n got  {line}\n want {prefix}");
        assert_eq!(line.lines().count(), 1, "{line}");
    }
}

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_svtf"))
}

#[test]
fn binary_exit_codes() {
    assert_eq!(bin().status().unwrap().code(), Some(EXIT_USAGE));
    let out = bin().args(["plan", "--kv"]).output().unwrap();
    assert_eq!(out.status.code(), Some(EXIT_OK));
    assert!(String::from_utf8_lossy(&out.stdout).contains("net_payload_voxels: 5278862410"));
}

#[test]
fn deterministic_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let raw = ball(dir.path());
    let svt = dir.path().join("ball.svtf");
    assert!(bin().args(["build", p(&raw), "-o", p(&svt)]).status().unwrap().success());
    let mut images = Vec::new();
    let mut logs = Vec::new();
    for threads in ["1", "3"] {
        let img = dir.path().join(format!("t{threads}.ppm"));
        let svt2 = dir.path().join(format!("t{threads}.svtf"));
        let b = bin()
            .env("SVTF_THREADS", threads)
            .args(["--deterministic", "-v", "build", p(&raw), "-o", p(&svt2)])
            .output()
            .unwrap();
        let r = bin()
            .env("SVTF_THREADS", threads)
            .args([
                "--deterministic", "-v", "render", p(&svt2), "-o", p(&img), "--width", "32", "--height", "32",
                "--steps", "64", "--light", "dir:1,-1,0:1,0.5,0.2", "--emission-scale", "0.2",
            ])
            .output()
            .unwrap();
        assert!(r.status.success());
        images.push((std::fs::read(&img).unwrap(), std::fs::read(&svt2).unwrap()));
        logs.push((b.stdout, b.stderr, r.stdout, r.stderr));
    }
    assert_eq!(images[0], images[1]);
    assert_eq!(logs[0].0, logs[1].0);
    assert!(logs[0].1.is_empty() && logs[0].3.is_empty());
}
