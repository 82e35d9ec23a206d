//! `slicedot barycenter | flow | idt`.

use std::path::PathBuf;
use std::time::Instant;

use clap::Args;
use slicedot_core::variational::{idt, sw_barycenter, sw_gradient_flow, BarycenterMode, FlowTrace};
use slicedot_core::{DiscreteMeasure, RngStream};

use crate::common::{check_finite, load_measure, CliError, CliResult, Report};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum BaryMode {
    Plain,
    Fair,
}

#[derive(Args)]
pub struct BarycenterArgs {
    /// Comma-separated list of input CSVs.
    #[arg(long, value_delimiter = ',')]
    pub inputs: Vec<PathBuf>,
    /// Marginal weights (default uniform).
    #[arg(long)]
    pub weights: Option<String>,
    /// Number of barycenter atoms.
    #[arg(long, default_value_t = 32)]
    pub atoms: usize,
    #[arg(long, default_value_t = 2.0)]
    pub p: f64,
    #[arg(long, default_value_t = 300)]
    pub iters: usize,
    /// Step size per unit mass; defaults to 0.5 * d.
    #[arg(long)]
    pub step: Option<f64>,
    #[arg(long, default_value_t = 16)]
    pub projections: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = BaryMode::Plain)]
    pub mode: BaryMode,
    #[arg(long)]
    pub normalize: bool,
    /// Output CSV for the barycenter atoms.
    #[arg(long)]
    pub out: PathBuf,
}

pub fn run_barycenter(args: BarycenterArgs) -> CliResult<()> {
    let started = Instant::now();
    if args.inputs.is_empty() {
        return Err(CliError::validation("barycenter needs at least one input"));
    }
    let measures: Vec<DiscreteMeasure> = args
        .inputs
        .iter()
        .map(|p| load_measure(p, args.normalize))
        .collect::<CliResult<_>>()?;
    let weights = match &args.weights {
        Some(spec) => crate::common::parse_f64_list(spec)?,
        None => vec![1.0 / measures.len() as f64; measures.len()],
    };
    let d = measures[0].dim();
    let step = args.step.unwrap_or(0.5 * d as f64);
    let mode = match args.mode {
        BaryMode::Plain => BarycenterMode::Plain,
        BaryMode::Fair => BarycenterMode::FairnessUnbiased,
    };
    let bary = sw_barycenter(
        &measures,
        &weights,
        args.atoms,
        args.p,
        args.iters,
        step,
        args.projections,
        mode,
        RngStream::from_seed(args.seed),
    )?;
    let mut buf = Vec::new();
    bary.to_csv_writer(&mut buf, false)
        .map_err(|e| CliError::validation(e.to_string()))?;
    crate::common::write_file(&args.out, &buf)?;

    let audit = slicedot_core::slicers::sample_uniform_sphere(
        d,
        64,
        RngStream::new(args.seed, u64::MAX / 4),
    )?;
    let loss = slicedot_core::variational::barycenter_objective(
        &bary, &measures, &weights, args.p, &audit,
    )?;
    let loss = check_finite(loss, "barycenter loss")?;
    let mut report = Report::new("barycenter");
    report
        .set("atoms", args.atoms as u64)
        .set("iters", args.iters as u64)
        .set("seed", args.seed)
        .set_f64("audit_loss", loss)
        .set_f64("step", step);
    report.finish(started)
}

#[derive(Args)]
pub struct FlowArgs {
    /// Source particles CSV (uniform weights).
    #[arg(long)]
    pub source: PathBuf,
    /// Target measure CSV.
    #[arg(long)]
    pub target: PathBuf,
    #[arg(long, default_value_t = 2.0)]
    pub p: f64,
    #[arg(long, default_value_t = 50)]
    pub iters: usize,
    /// Step size per unit mass; defaults to 0.5 * d.
    #[arg(long)]
    pub step: Option<f64>,
    #[arg(long, default_value_t = 16)]
    pub projections: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 10)]
    pub snapshot_every: usize,
    #[arg(long)]
    pub normalize: bool,
    /// Prefix for trace outputs: <prefix>_trace.csv and
    /// <prefix>_step_<k>.csv point files.
    #[arg(long)]
    pub out_prefix: PathBuf,
}

fn write_trace(prefix: &std::path::Path, trace: &FlowTrace) -> CliResult<()> {
    let mut trace_csv = String::from("step,objective\n");
    for snap in trace.snapshots() {
        trace_csv.push_str(&format!("{},{}\n", snap.step, snap.objective));
    }
    let trace_path = prefix.with_file_name(format!(
        "{}_trace.csv",
        prefix.file_name().unwrap_or_default().to_string_lossy()
    ));
    crate::common::write_file(&trace_path, trace_csv.as_bytes())?;
    for snap in trace.snapshots() {
        let path = prefix.with_file_name(format!(
            "{}_step_{}.csv",
            prefix.file_name().unwrap_or_default().to_string_lossy(),
            snap.step
        ));
        crate::common::write_file(&path, crate::common::matrix_csv(&snap.points).as_bytes())?;
    }
    Ok(())
}

pub fn run_flow(args: FlowArgs) -> CliResult<()> {
    let started = Instant::now();
    let source = load_measure(&args.source, args.normalize)?;
    let target = load_measure(&args.target, args.normalize)?;
    let step = args.step.unwrap_or(0.5 * target.dim() as f64);
    let trace = sw_gradient_flow(
        source.supports(),
        &target,
        args.p,
        step,
        args.iters,
        args.projections,
        args.snapshot_every,
        RngStream::from_seed(args.seed),
    )?;
    write_trace(&args.out_prefix, &trace)?;
    let first = trace.snapshots().first().unwrap().objective;
    let last = check_finite(trace.final_objective(), "flow objective")?;
    let mut report = Report::new("flow");
    report
        .set("iters", args.iters as u64)
        .set("seed", args.seed)
        .set_f64("initial_objective", first)
        .set_f64("final_objective", last)
        .set_f64("step", step);
    report.finish(started)
}

#[derive(Args)]
pub struct IdtArgs {
    #[arg(long)]
    pub source: PathBuf,
    #[arg(long)]
    pub target: PathBuf,
    #[arg(long, default_value_t = 30)]
    pub iters: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub normalize: bool,
    #[arg(long)]
    pub out_prefix: PathBuf,
}

pub fn run_idt(args: IdtArgs) -> CliResult<()> {
    let started = Instant::now();
    let source = load_measure(&args.source, args.normalize)?;
    let target = load_measure(&args.target, args.normalize)?;
    let trace = idt(
        source.supports(),
        &target,
        args.iters,
        RngStream::from_seed(args.seed),
    )?;
    write_trace(&args.out_prefix, &trace)?;
    let first = trace.snapshots().first().unwrap().objective;
    let last = check_finite(trace.final_objective(), "idt objective")?;
    let mut report = Report::new("idt");
    report
        .set("iters", args.iters as u64)
        .set("seed", args.seed)
        .set_f64("initial_objective", first)
        .set_f64("final_objective", last);
    report.finish(started)
}
