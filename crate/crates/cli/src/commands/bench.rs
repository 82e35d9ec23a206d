//! `slicedot bench`: replication benchmark of the SW estimators on a seeded
//! Gaussian fixture (or user files), enabling the variance-vs-L study.

use std::path::PathBuf;
use std::time::Instant;

use clap::Args;
use slicedot_core::slicers::{qmc_mapped, random_rotation, sample_uniform_sphere};
use slicedot_core::sw_core::{sw_cv, sw_fast, sw_mc, CvVariant};
use slicedot_core::{DiscreteMeasure, Projector, RngStream};

use crate::common::{check_finite, load_measure, CliResult, Report};

#[derive(Args)]
pub struct BenchArgs {
    /// Optional measure CSVs; without them a seeded Gaussian fixture is used.
    #[arg(long)]
    pub a: Option<PathBuf>,
    #[arg(long)]
    pub b: Option<PathBuf>,
    /// Projection counts to sweep.
    #[arg(long, default_value = "10,100,1000", value_delimiter = ',')]
    pub l_grid: Vec<usize>,
    /// Replications per estimator and L.
    #[arg(long, default_value_t = 20)]
    pub reps: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Fixture size per side.
    #[arg(long, default_value_t = 64)]
    pub fixture_n: usize,
    /// Fixture dimension.
    #[arg(long, default_value_t = 2)]
    pub fixture_d: usize,
    /// Output CSV: estimator,L,replication,value,wall_ms.
    #[arg(long)]
    pub out: PathBuf,
}

pub fn gaussian_fixture(seed: u64, n: usize, d: usize, shift: f64) -> DiscreteMeasure {
    use rand::Rng;
    let mut rng = RngStream::from_seed(seed).rng();
    let pts: Vec<Vec<f64>> = (0..n)
        .map(|_| {
            (0..d)
                .map(|k| {
                    let z: f64 = rng.sample(rand_distr::StandardNormal);
                    z + if k == 0 { shift } else { 0.0 }
                })
                .collect()
        })
        .collect();
    DiscreteMeasure::uniform(pts).expect("fixture points are finite")
}

pub fn run(args: BenchArgs) -> CliResult<()> {
    let started = Instant::now();
    let (mu, nu) = match (&args.a, &args.b) {
        (Some(a), Some(b)) => (load_measure(a, true)?, load_measure(b, true)?),
        _ => (
            gaussian_fixture(args.seed.wrapping_add(1), args.fixture_n, args.fixture_d, 0.0),
            gaussian_fixture(args.seed.wrapping_add(2), args.fixture_n, args.fixture_d, 1.0),
        ),
    };
    let d = mu.dim();
    let mut csv = String::from("estimator,L,replication,value,wall_ms\n");
    let mut rows = 0u64;
    for &l in &args.l_grid {
        for rep in 0..args.reps {
            let rep_seed = args
                .seed
                .wrapping_add(1_000_003u64.wrapping_mul(rep + 1))
                .wrapping_add(l as u64);
            let mc_ds = sample_uniform_sphere(d, l, RngStream::from_seed(rep_seed))?;
            let mut record = |name: &str, value: CliResult<f64>, t0: Instant| -> CliResult<()> {
                let v = check_finite(value?, name)?;
                let wall = t0.elapsed().as_secs_f64() * 1e3;
                csv.push_str(&format!("{name},{l},{rep},{v},{wall}\n"));
                rows += 1;
                Ok(())
            };
            let t = Instant::now();
            record(
                "mc",
                sw_mc(&mu, &nu, 2.0, &mc_ds, &Projector::Linear)
                    .map(|e| e.value_p)
                    .map_err(Into::into),
                t,
            )?;
            let t = Instant::now();
            let qmc_ds = qmc_mapped(d, l, 0)?;
            record(
                "qmc",
                sw_mc(&mu, &nu, 2.0, &qmc_ds, &Projector::Linear)
                    .map(|e| e.value_p)
                    .map_err(Into::into),
                t,
            )?;
            let t = Instant::now();
            let rot_ds = random_rotation(&qmc_ds, RngStream::from_seed(rep_seed ^ 0xabcdef))?;
            record(
                "qmc-rot",
                sw_mc(&mu, &nu, 2.0, &rot_ds, &Projector::Linear)
                    .map(|e| e.value_p)
                    .map_err(Into::into),
                t,
            )?;
            let t = Instant::now();
            record(
                "cv-low",
                sw_cv(&mu, &nu, &mc_ds, CvVariant::Lower)
                    .map(|e| e.value_p)
                    .map_err(Into::into),
                t,
            )?;
            let t = Instant::now();
            record(
                "cv-up",
                sw_cv(&mu, &nu, &mc_ds, CvVariant::Upper)
                    .map(|e| e.value_p)
                    .map_err(Into::into),
                t,
            )?;
            let t = Instant::now();
            record("fast", sw_fast(&mu, &nu).map_err(Into::into), t)?;
        }
    }
    crate::common::write_file(&args.out, csv.as_bytes())?;
    let mut report = Report::new("bench");
    report
        .set("reps", args.reps)
        .set("rows", rows)
        .set("seed", args.seed);
    report.finish(started)
}
