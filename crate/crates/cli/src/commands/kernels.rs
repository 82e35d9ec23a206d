//! `slicedot kernel | embed`.

use std::path::PathBuf;
use std::time::Instant;

use clap::Args;
use slicedot_core::kernels::{gram, sw_embed, KernelKind};
use slicedot_core::DiscreteMeasure;

use crate::common::{
    build_directions, load_measure, matrix_csv, CliError, CliResult, Report, SlicerKind,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum KernelFlavor {
    Sw,
    Usw,
}

#[derive(Args)]
pub struct KernelArgs {
    /// Comma-separated list of measure CSVs.
    #[arg(long, value_delimiter = ',')]
    pub inputs: Vec<PathBuf>,
    #[arg(long, default_value_t = 1.0)]
    pub gamma: f64,
    #[arg(long, value_enum, default_value_t = KernelFlavor::Usw)]
    pub kind: KernelFlavor,
    #[arg(long, default_value_t = 64)]
    pub projections: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = SlicerKind::Mc)]
    pub slicer: SlicerKind,
    #[arg(long)]
    pub normalize: bool,
    /// Where to write the Gram CSV.
    #[arg(long)]
    pub out: PathBuf,
}

pub fn run_kernel(args: KernelArgs) -> CliResult<()> {
    let started = Instant::now();
    if args.inputs.len() < 2 {
        return Err(CliError::validation("kernel needs at least two measures"));
    }
    let measures: Vec<DiscreteMeasure> = args
        .inputs
        .iter()
        .map(|p| load_measure(p, args.normalize))
        .collect::<CliResult<_>>()?;
    let ds = build_directions(
        args.slicer,
        measures[0].dim(),
        args.projections,
        args.seed,
    )?;
    let kind = match args.kind {
        KernelFlavor::Sw => KernelKind::Sw,
        KernelFlavor::Usw => KernelKind::Usw,
    };
    let g = gram(&measures, kind, args.gamma, &ds)?;
    if g.iter().flatten().any(|v| v.is_nan()) {
        return Err(CliError::Numerical("Gram matrix contains NaN".into()));
    }
    crate::common::write_file(&args.out, matrix_csv(&g).as_bytes())?;
    let mut report = Report::new("kernel");
    report
        .set("K", measures.len() as u64)
        .set("L", args.projections as u64)
        .set("kind", format!("{:?}", args.kind).to_lowercase())
        .set("seed", args.seed)
        .set_f64("gamma", args.gamma);
    report.finish(started)
}

#[derive(Args)]
pub struct EmbedArgs {
    /// Measure to embed.
    #[arg(long)]
    pub input: PathBuf,
    /// Uniform reference measure.
    #[arg(long)]
    pub reference: PathBuf,
    #[arg(long, default_value_t = 64)]
    pub projections: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = SlicerKind::Mc)]
    pub slicer: SlicerKind,
    #[arg(long)]
    pub normalize: bool,
    /// Where to write the L x n embedding CSV (provenance header line).
    #[arg(long)]
    pub out: PathBuf,
}

pub fn run_embed(args: EmbedArgs) -> CliResult<()> {
    let started = Instant::now();
    let mu = load_measure(&args.input, args.normalize)?;
    let reference = load_measure(&args.reference, args.normalize)?;
    let ds = build_directions(args.slicer, mu.dim(), args.projections, args.seed)?;
    let e = sw_embed(&mu, &reference, &ds)?;
    if e.rows.iter().flatten().any(|v| v.is_nan()) {
        return Err(CliError::Numerical("embedding contains NaN".into()));
    }
    let mut out = format!(
        "# directions_hash={:016x} L={} n={}\n",
        e.directions_hash,
        e.rows.len(),
        e.reference_len
    );
    out.push_str(&matrix_csv(&e.rows));
    crate::common::write_file(&args.out, out.as_bytes())?;
    let mut report = Report::new("embed");
    report
        .set("L", args.projections as u64)
        .set("n", e.reference_len as u64)
        .set("seed", args.seed)
        .set("directions_hash", format!("{:016x}", e.directions_hash));
    report.finish(started)
}
