//! `slicedot color-transfer`: gradient flow of source pixels toward the
//! target color distribution, both images in binary PPM (P6).

use std::path::PathBuf;
use std::time::Instant;

use clap::Args;
use slicedot_core::variational::sw_gradient_flow;
use slicedot_core::{DiscreteMeasure, RngStream};

use crate::common::{CliError, CliResult, Report};
use crate::ppm::{read_ppm, write_ppm, Image};

#[derive(Args)]
pub struct ColorTransferArgs {
    #[arg(long)]
    pub source: PathBuf,
    #[arg(long)]
    pub target: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 100)]
    pub iters: usize,
    /// Step size per unit mass; defaults to 0.5 * 3.
    #[arg(long)]
    pub step: Option<f64>,
    #[arg(long, default_value_t = 16)]
    pub projections: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Cap on the number of pixels moved by the flow; the rest follow their
    /// nearest sampled pixel.
    #[arg(long, default_value_t = 2048)]
    pub sample: usize,
}

/// Deterministic subsample of `n` indices out of `total`.
fn subsample(total: usize, n: usize, rng: RngStream) -> Vec<usize> {
    use rand::Rng;
    let mut indices: Vec<usize> = (0..total).collect();
    if n >= total {
        return indices;
    }
    let mut r = rng.rng();
    for i in 0..n {
        let j = r.random_range(i..total);
        indices.swap(i, j);
    }
    indices.truncate(n);
    indices
}

pub fn run(args: ColorTransferArgs) -> CliResult<()> {
    let started = Instant::now();
    let source = read_ppm(&args.source)?;
    let target = read_ppm(&args.target)?;
    let src_points = source.to_points();
    let tgt_points = target.to_points();
    let step = args.step.unwrap_or(1.5);

    let moved_points = if args.iters == 0 {
        src_points.clone()
    } else {
        let rng = RngStream::from_seed(args.seed);
        let src_idx = subsample(src_points.len(), args.sample, rng.substream(1));
        let tgt_idx = subsample(tgt_points.len(), args.sample, rng.substream(2));
        let sampled_src: Vec<Vec<f64>> = src_idx.iter().map(|&i| src_points[i].clone()).collect();
        let sampled_tgt: Vec<Vec<f64>> = tgt_idx.iter().map(|&i| tgt_points[i].clone()).collect();
        let target_measure = DiscreteMeasure::uniform(sampled_tgt)
            .map_err(|e| CliError::validation(e.to_string()))?;
        let trace = sw_gradient_flow(
            &sampled_src,
            &target_measure,
            2.0,
            step,
            args.iters,
            args.projections,
            args.iters.max(1),
            rng.substream(3),
        )?;
        if !trace.final_objective().is_finite() {
            return Err(CliError::Numerical("flow objective is not finite".into()));
        }
        let moved = trace.final_points();
        let mut sampled_slot = vec![None; src_points.len()];
        for (k, &i) in src_idx.iter().enumerate() {
            sampled_slot[i] = Some(k);
        }
        // Each unsampled pixel follows the displacement of its nearest
        // sampled pixel in the original color space.
        let mut out = src_points.clone();
        for (slot, point) in out.iter_mut().enumerate() {
            let nearest = match sampled_slot[slot] {
                Some(k) => k,
                None => {
                    let mut best = 0;
                    let mut best_d = f64::INFINITY;
                    for (k, s) in sampled_src.iter().enumerate() {
                        let d: f64 = s
                            .iter()
                            .zip(point.iter())
                            .map(|(a, b)| (a - b) * (a - b))
                            .sum();
                        if d < best_d {
                            best_d = d;
                            best = k;
                        }
                    }
                    best
                }
            };
            for c in 0..3 {
                let displacement = moved[nearest][c] - sampled_src[nearest][c];
                point[c] = (point[c] + displacement).clamp(0.0, 1.0);
            }
        }
        out
    };

    let out_img = Image::from_points(&moved_points, source.width, source.height);
    write_ppm(&args.out, &out_img)?;
    let mut report = Report::new("color-transfer");
    report
        .set("iters", args.iters as u64)
        .set("pixels", source.pixel_count() as u64)
        .set("sampled", args.sample.min(source.pixel_count()) as u64)
        .set("seed", args.seed)
        .set_f64("step", step);
    report.finish(started)
}
