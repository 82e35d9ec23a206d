//! `slicedot dist`: sliced distance estimators between two CSV point sets.

use std::path::PathBuf;
use std::time::Instant;

use clap::Args;
use slicedot_core::sw_core::{
    ebsw_is, max_sw_pga, smooth_sw, sw_cv, sw_fast, sw_mc, CvVariant, SwEstimate,
};
use slicedot_core::{EnergySpec, Projector, RngStream};

use crate::common::{
    build_directions, check_finite, load_measure, parse_projector, CliError, CliResult, Report,
    SlicerKind,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Estimator {
    Mc,
    CvLow,
    CvUp,
    Fast,
    Max,
    Ebsw,
    Smooth,
}

#[derive(Args)]
pub struct DistArgs {
    /// First point-cloud CSV.
    #[arg(long)]
    pub a: PathBuf,
    /// Second point-cloud CSV.
    #[arg(long)]
    pub b: PathBuf,
    /// Order of the distance.
    #[arg(long, default_value_t = 2.0)]
    pub p: f64,
    #[arg(long, value_enum, default_value_t = Estimator::Mc)]
    pub estimator: Estimator,
    /// Number of projection directions L.
    #[arg(long, default_value_t = 100)]
    pub projections: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = SlicerKind::Mc)]
    pub slicer: SlicerKind,
    /// Projection kernel: linear | circular:<r> | poly:<degree>.
    #[arg(long, default_value = "linear")]
    pub projector: String,
    /// Normalize both inputs to probability measures before comparing.
    #[arg(long)]
    pub normalize: bool,
    /// Noise level for the smooth estimator.
    #[arg(long, default_value_t = 0.0)]
    pub sigma: f64,
    /// EBSW energy: exp | poly:<a>,<eps>.
    #[arg(long, default_value = "exp")]
    pub energy: String,
    /// Gradient-ascent steps for the max estimator.
    #[arg(long, default_value_t = 100)]
    pub max_steps: usize,
    /// Gradient-ascent step size for the max estimator.
    #[arg(long, default_value_t = 0.1)]
    pub max_step_size: f64,
    /// Restarts for the max estimator.
    #[arg(long, default_value_t = 4)]
    pub max_restarts: usize,
}

pub fn parse_energy(spec: &str) -> CliResult<EnergySpec> {
    if spec == "exp" {
        return Ok(EnergySpec::Exponential);
    }
    if spec == "const" {
        return Ok(EnergySpec::Constant);
    }
    if let Some(rest) = spec.strip_prefix("poly:") {
        let parts: Vec<&str> = rest.split(',').collect();
        if parts.len() != 2 {
            return Err(CliError::validation("poly energy needs poly:<a>,<eps>"));
        }
        let a: f64 = parts[0]
            .parse()
            .map_err(|e| CliError::validation(format!("bad energy exponent: {e}")))?;
        let eps: f64 = parts[1]
            .parse()
            .map_err(|e| CliError::validation(format!("bad energy shift: {e}")))?;
        return Ok(EnergySpec::ShiftedPolynomial { a, eps });
    }
    Err(CliError::validation(format!(
        "unknown energy {spec:?}; expected exp, const, or poly:<a>,<eps>"
    )))
}

pub fn run(args: DistArgs) -> CliResult<()> {
    let started = Instant::now();
    let mu = load_measure(&args.a, args.normalize)?;
    let nu = load_measure(&args.b, args.normalize)?;
    let proj = parse_projector(&args.projector, mu.dim())?;
    let estimator_name = match args.estimator {
        Estimator::Mc => "mc",
        Estimator::CvLow => "cv-low",
        Estimator::CvUp => "cv-up",
        Estimator::Fast => "fast",
        Estimator::Max => "max",
        Estimator::Ebsw => "ebsw",
        Estimator::Smooth => "smooth",
    };

    let estimate: SwEstimate = match args.estimator {
        Estimator::Fast => {
            let v = sw_fast(&mu, &nu)?;
            SwEstimate {
                value_p: v,
                value: v.sqrt(),
                per_slice: None,
                std_error: None,
            }
        }
        Estimator::Max => {
            let (_, value_p) = max_sw_pga(
                &mu,
                &nu,
                args.p,
                args.max_steps,
                args.max_step_size,
                args.max_restarts,
                RngStream::from_seed(args.seed),
            )?;
            SwEstimate {
                value_p,
                value: value_p.powf(1.0 / args.p),
                per_slice: None,
                std_error: None,
            }
        }
        other => {
            let dim = proj.param_dim(mu.dim());
            let ds = build_directions(args.slicer, dim, args.projections, args.seed)?;
            match other {
                Estimator::Mc => sw_mc(&mu, &nu, args.p, &ds, &proj)?,
                Estimator::CvLow | Estimator::CvUp => {
                    if args.p != 2.0 {
                        return Err(CliError::validation(
                            "control variates are defined for p = 2 only",
                        ));
                    }
                    if proj != Projector::Linear {
                        return Err(CliError::validation(
                            "control variates need the linear projector",
                        ));
                    }
                    let variant = if other == Estimator::CvLow {
                        CvVariant::Lower
                    } else {
                        CvVariant::Upper
                    };
                    sw_cv(&mu, &nu, &ds, variant)?
                }
                Estimator::Ebsw => {
                    let energy = parse_energy(&args.energy)?;
                    ebsw_is(&mu, &nu, args.p, &ds, &energy)?
                }
                Estimator::Smooth => smooth_sw(
                    &mu,
                    &nu,
                    args.p,
                    args.sigma,
                    &ds,
                    RngStream::from_seed(args.seed ^ 0x9e3779b97f4a7c15),
                )?,
                Estimator::Fast | Estimator::Max => unreachable!(),
            }
        }
    };

    let value = check_finite(estimate.value, "distance value")?;
    let value_p = check_finite(estimate.value_p, "distance value_p")?;
    let mut report = Report::new("dist");
    report
        .set("estimator", estimator_name)
        .set("L", args.projections as u64)
        .set("seed", args.seed)
        .set_f64("value", value)
        .set_f64("value_p", value_p);
    match estimate.std_error {
        Some(se) => report.set_f64("std_error", se),
        None => report.set("std_error", serde_json::Value::Null),
    };
    report.finish(started)
}
