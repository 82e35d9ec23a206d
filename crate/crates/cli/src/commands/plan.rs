//! `slicedot plan`: lifted transport plans and their costs.

use std::path::PathBuf;
use std::time::Instant;

use clap::Args;
use serde_json::Value;
use slicedot_core::plans::{
    expected_sliced_transport, min_swgg_search_with, projected_wasserstein, swgg,
};
use slicedot_core::{Direction, PlanD};

use crate::common::{
    build_directions, check_finite, load_measure, parse_projector, CliError, CliResult, Report,
    SlicerKind,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum PlanMethod {
    Swgg,
    Pw,
    MinSwgg,
    Est,
}

#[derive(Args)]
pub struct PlanArgs {
    #[arg(long)]
    pub a: PathBuf,
    #[arg(long)]
    pub b: PathBuf,
    #[arg(long, default_value_t = 2.0)]
    pub p: f64,
    #[arg(long, value_enum, default_value_t = PlanMethod::Swgg)]
    pub method: PlanMethod,
    /// Explicit direction for swgg, as comma-separated components
    /// (normalized internally). Defaults to the first sampled direction.
    #[arg(long)]
    pub theta: Option<String>,
    #[arg(long, default_value_t = 64)]
    pub projections: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = SlicerKind::Mc)]
    pub slicer: SlicerKind,
    #[arg(long, default_value = "linear")]
    pub projector: String,
    /// Softmin temperature for the est method.
    #[arg(long, default_value_t = 1.0)]
    pub tau: f64,
    #[arg(long)]
    pub normalize: bool,
    /// Where to write the plan CSV (rows `i,j,mass`).
    #[arg(long)]
    pub out_plan: Option<PathBuf>,
}

pub fn run(args: PlanArgs) -> CliResult<()> {
    let started = Instant::now();
    let mu = load_measure(&args.a, args.normalize)?;
    let nu = load_measure(&args.b, args.normalize)?;
    let proj = parse_projector(&args.projector, mu.dim())?;
    let dim = proj.param_dim(mu.dim());

    let (cost, plan, theta): (f64, PlanD, Option<Direction>) = match args.method {
        PlanMethod::Swgg => {
            let theta = match &args.theta {
                Some(spec) => {
                    let comps = crate::common::parse_f64_list(spec)?;
                    Direction::normalized(comps)?
                }
                None => {
                    let ds = build_directions(args.slicer, dim, 1, args.seed)?;
                    ds.directions()[0].clone()
                }
            };
            let (cost, plan) = swgg(&mu, &nu, &theta, args.p, &proj)?;
            (cost, plan, Some(theta))
        }
        PlanMethod::Pw => {
            let ds = build_directions(args.slicer, dim, args.projections, args.seed)?;
            let (cost, plan) = projected_wasserstein(&mu, &nu, args.p, &ds, &proj)?;
            (cost, plan, None)
        }
        PlanMethod::MinSwgg => {
            let ds = build_directions(args.slicer, dim, args.projections, args.seed)?;
            let (theta, cost, plan) = min_swgg_search_with(&mu, &nu, args.p, &ds, &proj)?;
            (cost, plan, Some(theta))
        }
        PlanMethod::Est => {
            let ds = build_directions(args.slicer, dim, args.projections, args.seed)?;
            let (cost, plan) =
                expected_sliced_transport(&mu, &nu, args.p, args.tau, &ds, &proj)?;
            (cost, plan, None)
        }
    };
    let cost = check_finite(cost, "plan cost")?;

    if let Some(path) = &args.out_plan {
        let mut buf = Vec::new();
        plan.to_csv_writer(&mut buf)
            .map_err(|e| CliError::validation(e.to_string()))?;
        crate::common::write_file(path, &buf)?;
    }

    let mut report = Report::new("plan");
    report
        .set(
            "method",
            match args.method {
                PlanMethod::Swgg => "swgg",
                PlanMethod::Pw => "pw",
                PlanMethod::MinSwgg => "min-swgg",
                PlanMethod::Est => "est",
            },
        )
        .set_f64("cost", cost)
        .set("entries", plan.entries().len() as u64)
        .set("seed", args.seed);
    match theta {
        Some(t) => report.set(
            "theta",
            Value::Array(t.components().iter().map(|&c| Value::from(c)).collect()),
        ),
        None => report.set("theta", Value::Null),
    };
    report.finish(started)
}
