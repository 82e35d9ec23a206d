//! `slicedot partial | uot | gw | mmot`.

use std::path::PathBuf;
use std::time::Instant;

use clap::Args;
use slicedot_core::extensions::{sgw_heuristic, sliced_partial, smw, suot, PartialMode, UotCost};
use slicedot_core::DiscreteMeasure;

use crate::common::{
    build_directions, check_finite, load_measure, parse_projector, CliError, CliResult, Report,
    SlicerKind,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum PartialKind {
    Limited,
    OneSided,
}

#[derive(Args)]
pub struct PartialArgs {
    #[arg(long)]
    pub a: PathBuf,
    #[arg(long)]
    pub b: PathBuf,
    #[arg(long, value_enum, default_value_t = PartialKind::OneSided)]
    pub mode: PartialKind,
    /// Fraction of the smaller mass to transport (limited mode).
    #[arg(long, default_value_t = 0.5)]
    pub s_fraction: f64,
    #[arg(long, default_value_t = 64)]
    pub projections: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = SlicerKind::Mc)]
    pub slicer: SlicerKind,
    #[arg(long, default_value = "linear")]
    pub projector: String,
}

pub fn run_partial(args: PartialArgs) -> CliResult<()> {
    let started = Instant::now();
    let mu = load_measure(&args.a, false)?;
    let nu = load_measure(&args.b, false)?;
    let proj = parse_projector(&args.projector, mu.dim())?;
    let ds = build_directions(
        args.slicer,
        proj.param_dim(mu.dim()),
        args.projections,
        args.seed,
    )?;
    let mode = match args.mode {
        PartialKind::Limited => PartialMode::Limited {
            s_fraction: args.s_fraction,
        },
        PartialKind::OneSided => PartialMode::OneSided,
    };
    let value = sliced_partial(&mu, &nu, &ds, &proj, mode)?;
    let value = check_finite(value, "partial cost")?;
    let mut report = Report::new("partial");
    report
        .set(
            "mode",
            match args.mode {
                PartialKind::Limited => "limited",
                PartialKind::OneSided => "one-sided",
            },
        )
        .set("L", args.projections as u64)
        .set("seed", args.seed)
        .set_f64("transported_mass", match args.mode {
            PartialKind::Limited => args.s_fraction * mu.mass().min(nu.mass()),
            PartialKind::OneSided => mu.mass(),
        })
        .set_f64("value", value);
    report.finish(started)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum CostKind {
    Abs,
    Squared,
}

#[derive(Args)]
pub struct UotArgs {
    #[arg(long)]
    pub a: PathBuf,
    #[arg(long)]
    pub b: PathBuf,
    /// KL strength on the first marginal.
    #[arg(long, default_value_t = 1.0)]
    pub rho1: f64,
    /// KL strength on the second marginal.
    #[arg(long, default_value_t = 1.0)]
    pub rho2: f64,
    #[arg(long, value_enum, default_value_t = CostKind::Squared)]
    pub cost: CostKind,
    /// Frank-Wolfe iterations per slice.
    #[arg(long, default_value_t = 100)]
    pub iters: usize,
    #[arg(long, default_value_t = 64)]
    pub projections: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = SlicerKind::Mc)]
    pub slicer: SlicerKind,
    #[arg(long, default_value = "linear")]
    pub projector: String,
}

pub fn run_uot(args: UotArgs) -> CliResult<()> {
    let started = Instant::now();
    let mu = load_measure(&args.a, false)?;
    let nu = load_measure(&args.b, false)?;
    let proj = parse_projector(&args.projector, mu.dim())?;
    let ds = build_directions(
        args.slicer,
        proj.param_dim(mu.dim()),
        args.projections,
        args.seed,
    )?;
    let cost = match args.cost {
        CostKind::Abs => UotCost::Abs,
        CostKind::Squared => UotCost::Squared,
    };
    let value = suot(
        &mu, &nu, args.rho1, args.rho2, &ds, &proj, cost, args.iters,
    )?;
    let value = check_finite(value, "unbalanced cost")?;
    let mut report = Report::new("uot");
    report
        .set("L", args.projections as u64)
        .set("iterations", args.iters as u64)
        .set("seed", args.seed)
        .set_f64("mass_a", mu.mass())
        .set_f64("mass_b", nu.mass())
        .set_f64("value", value);
    report.finish(started)
}

#[derive(Args)]
pub struct GwArgs {
    #[arg(long)]
    pub a: PathBuf,
    #[arg(long)]
    pub b: PathBuf,
    #[arg(long, default_value_t = 64)]
    pub projections: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = SlicerKind::Mc)]
    pub slicer: SlicerKind,
}

pub fn run_gw(args: GwArgs) -> CliResult<()> {
    let started = Instant::now();
    let mu = load_measure(&args.a, false)?;
    let nu = load_measure(&args.b, false)?;
    let d_max = mu.dim().max(nu.dim());
    let ds = build_directions(args.slicer, d_max, args.projections, args.seed)?;
    let value = sgw_heuristic(&mu, &nu, &ds)?;
    let value = check_finite(value, "gw cost")?;
    let mut report = Report::new("gw");
    report
        .set("L", args.projections as u64)
        .set("seed", args.seed)
        .set("heuristic", "sorted-matching upper proxy")
        .set_f64("value", value);
    report.finish(started)
}

#[derive(Args)]
pub struct MmotArgs {
    /// Comma-separated list of marginal CSVs.
    #[arg(long, value_delimiter = ',')]
    pub inputs: Vec<PathBuf>,
    /// Barycentric weights (default uniform).
    #[arg(long)]
    pub betas: Option<String>,
    #[arg(long, default_value_t = 64)]
    pub projections: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = SlicerKind::Mc)]
    pub slicer: SlicerKind,
    #[arg(long, default_value = "linear")]
    pub projector: String,
    #[arg(long)]
    pub normalize: bool,
}

pub fn run_mmot(args: MmotArgs) -> CliResult<()> {
    let started = Instant::now();
    if args.inputs.len() < 2 {
        return Err(CliError::validation("mmot needs at least two marginals"));
    }
    let measures: Vec<DiscreteMeasure> = args
        .inputs
        .iter()
        .map(|p| load_measure(p, args.normalize))
        .collect::<CliResult<_>>()?;
    let betas = match &args.betas {
        Some(spec) => crate::common::parse_f64_list(spec)?,
        None => vec![1.0 / measures.len() as f64; measures.len()],
    };
    let proj = parse_projector(&args.projector, measures[0].dim())?;
    let ds = build_directions(
        args.slicer,
        proj.param_dim(measures[0].dim()),
        args.projections,
        args.seed,
    )?;
    let value = smw(&measures, &betas, &ds, &proj)?;
    let value = check_finite(value, "multi-marginal cost")?;
    let mut report = Report::new("mmot");
    report
        .set("K", measures.len() as u64)
        .set("L", args.projections as u64)
        .set("seed", args.seed)
        .set_f64("value", value);
    report.finish(started)
}
