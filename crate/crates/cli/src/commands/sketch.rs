//! `slicedot sketch build|query`: per-direction KLL sketches of a point
//! stream, serialized with the configuration that regenerates their
//! direction set.

use std::fs::File;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Subcommand};
use slicedot_core::sw_core::{sw_streaming, SwStream};
use slicedot_core::{KllSketch, RngStream};

use crate::common::{
    build_directions, check_finite, parse_projector, CliError, CliResult, Report, SlicerKind,
};

const MAGIC: &[u8; 4] = b"SKB1";

#[derive(Subcommand)]
pub enum SketchCmd {
    /// Stream a CSV of points into per-direction sketches.
    Build(BuildArgs),
    /// Estimate the sliced distance between two sketch files.
    Query(QueryArgs),
}

#[derive(Args)]
pub struct BuildArgs {
    /// Input CSV stream, one point per row.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 32)]
    pub projections: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = SlicerKind::Mc)]
    pub slicer: SlicerKind,
    #[arg(long, default_value = "linear")]
    pub projector: String,
    /// Base sketch capacity.
    #[arg(long, default_value_t = 200)]
    pub k: usize,
    /// Data dimension (checked against the stream).
    #[arg(long)]
    pub dim: usize,
}

#[derive(Args)]
pub struct QueryArgs {
    #[arg(long)]
    pub a: PathBuf,
    #[arg(long)]
    pub b: PathBuf,
    #[arg(long, default_value_t = 2.0)]
    pub p: f64,
}

fn slicer_tag(kind: SlicerKind) -> u64 {
    match kind {
        SlicerKind::Mc => 0,
        SlicerKind::Qmc => 1,
        SlicerKind::Spiral => 2,
        SlicerKind::QmcRot => 3,
    }
}

fn slicer_from_tag(tag: u64) -> CliResult<SlicerKind> {
    Ok(match tag {
        0 => SlicerKind::Mc,
        1 => SlicerKind::Qmc,
        2 => SlicerKind::Spiral,
        3 => SlicerKind::QmcRot,
        other => return Err(CliError::validation(format!("unknown slicer tag {other}"))),
    })
}

fn write_u64(w: &mut impl Write, v: u64) -> CliResult<()> {
    w.write_all(&v.to_le_bytes())?;
    Ok(())
}

fn read_u64(r: &mut impl Read) -> CliResult<u64> {
    let mut buf = [0u8; 8];
    r.read_exact(&mut buf)?;
    Ok(u64::from_le_bytes(buf))
}

fn write_string(w: &mut impl Write, s: &str) -> CliResult<()> {
    write_u64(w, s.len() as u64)?;
    w.write_all(s.as_bytes())?;
    Ok(())
}

fn read_string(r: &mut impl Read) -> CliResult<String> {
    let len = read_u64(r)? as usize;
    if len > 4096 {
        return Err(CliError::validation("implausible string length in sketch file"));
    }
    let mut buf = vec![0u8; len];
    r.read_exact(&mut buf)?;
    String::from_utf8(buf).map_err(|e| CliError::validation(e.to_string()))
}

pub fn run(cmd: SketchCmd) -> CliResult<()> {
    match cmd {
        SketchCmd::Build(args) => build(args),
        SketchCmd::Query(args) => query(args),
    }
}

fn build(args: BuildArgs) -> CliResult<()> {
    let started = Instant::now();
    let proj = parse_projector(&args.projector, args.dim)?;
    let ds = build_directions(
        args.slicer,
        proj.param_dim(args.dim),
        args.projections,
        args.seed,
    )?;
    let mut stream = SwStream::new(ds, proj, args.k, RngStream::from_seed(args.seed))
        .map_err(CliError::from)?;
    let file = File::open(&args.input)
        .map_err(|e| CliError::validation(format!("{}: {e}", args.input.display())))?;
    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let lineno = idx + 1;
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let point: Vec<f64> = trimmed
            .split(',')
            .map(|f| {
                f.trim().parse::<f64>().map_err(|e| {
                    CliError::validation(format!(
                        "{} line {lineno}: bad coordinate {f:?}: {e}",
                        args.input.display()
                    ))
                })
            })
            .collect::<CliResult<_>>()?;
        if point.len() != args.dim {
            return Err(CliError::validation(format!(
                "{} line {lineno}: dimension {} does not match --dim {}",
                args.input.display(),
                point.len(),
                args.dim
            )));
        }
        stream.insert(&point).map_err(CliError::from)?;
    }

    let out = File::create(&args.out)
        .map_err(|e| CliError::validation(format!("{}: {e}", args.out.display())))?;
    let mut w = std::io::BufWriter::new(out);
    w.write_all(MAGIC)?;
    write_u64(&mut w, slicer_tag(args.slicer))?;
    write_u64(&mut w, args.seed)?;
    write_u64(&mut w, args.projections as u64)?;
    write_u64(&mut w, args.dim as u64)?;
    write_string(&mut w, &args.projector)?;
    write_u64(&mut w, args.k as u64)?;
    write_u64(&mut w, stream.items())?;
    for sketch in stream.sketches() {
        sketch.write_to(&mut w).map_err(CliError::from)?;
    }
    drop(w);

    let mut report = Report::new("sketch-build");
    report
        .set("L", args.projections as u64)
        .set("items", stream.items())
        .set("k", args.k as u64)
        .set("seed", args.seed);
    report.finish(started)
}

pub fn load_stream(path: &Path) -> CliResult<SwStream> {
    let file = File::open(path)
        .map_err(|e| CliError::validation(format!("{}: {e}", path.display())))?;
    let mut r = BufReader::new(file);
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(CliError::validation(format!(
            "{}: not a slicedot sketch file",
            path.display()
        )));
    }
    let slicer = slicer_from_tag(read_u64(&mut r)?)?;
    let seed = read_u64(&mut r)?;
    let n_dirs = read_u64(&mut r)? as usize;
    let dim = read_u64(&mut r)? as usize;
    let projector = read_string(&mut r)?;
    let _k = read_u64(&mut r)?;
    let items = read_u64(&mut r)?;
    let proj = parse_projector(&projector, dim)?;
    let ds = build_directions(slicer, proj.param_dim(dim), n_dirs, seed)?;
    let sketches: Vec<KllSketch> = (0..n_dirs)
        .map(|_| KllSketch::read_from(&mut r).map_err(CliError::from))
        .collect::<CliResult<_>>()?;
    SwStream::from_parts(ds, proj, sketches, items).map_err(CliError::from)
}

fn query(args: QueryArgs) -> CliResult<()> {
    let started = Instant::now();
    let a = load_stream(&args.a)?;
    let b = load_stream(&args.b)?;
    let est = sw_streaming(&a, &b, args.p).map_err(|e| match e {
        slicedot_core::Error::ProvenanceMismatch { .. } => CliError::validation(e.to_string()),
        other => CliError::from(other),
    })?;
    let value = check_finite(est.value, "streaming value")?;
    let value_p = check_finite(est.value_p, "streaming value_p")?;
    let mut report = Report::new("sketch-query");
    report
        .set("L", a.sketches().len() as u64)
        .set("items_a", a.items())
        .set("items_b", b.items())
        .set_f64("value", value)
        .set_f64("value_p", value_p);
    report.finish(started)
}
