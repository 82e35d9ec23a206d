//! `slicedot`: sliced optimal transport from the command line.
//!
//! Exit codes: 0 success, 2 validation error (bad flags, unreadable or
//! malformed inputs), 3 numerical failure (NaN in a computed result).

mod commands;
mod common;
mod ppm;

use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "slicedot", version, about = "Sliced optimal transport toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Estimate a sliced distance between two point-cloud CSV files.
    Dist(commands::dist::DistArgs),
    /// Build a lifted transport plan (SWGG / PW / min-SWGG / EST).
    Plan(commands::plan::PlanArgs),
    /// Free-support SW barycenter of several measures.
    Barycenter(commands::variational::BarycenterArgs),
    /// Particle gradient flow toward a target measure.
    Flow(commands::variational::FlowArgs),
    /// Iterative distribution transfer toward a target measure.
    Idt(commands::variational::IdtArgs),
    /// Sliced partial optimal transport.
    Partial(commands::extensions::PartialArgs),
    /// Sliced unbalanced optimal transport (KL penalties, Frank-Wolfe).
    Uot(commands::extensions::UotArgs),
    /// Sliced Gromov-Wasserstein (sorted-matching heuristic).
    Gw(commands::extensions::GwArgs),
    /// Sliced multi-marginal Wasserstein with barycentric cost.
    Mmot(commands::extensions::MmotArgs),
    /// Gram matrix of SW kernels over a batch of measures.
    Kernel(commands::kernels::KernelArgs),
    /// Sliced Wasserstein embedding against a reference measure.
    Embed(commands::kernels::EmbedArgs),
    /// Color transfer between two binary PPM (P6) images.
    ColorTransfer(commands::color::ColorTransferArgs),
    /// Estimator benchmark on a seeded Gaussian fixture.
    Bench(commands::bench::BenchArgs),
    /// Build or query streaming sketches of a point stream.
    #[command(subcommand)]
    Sketch(commands::sketch::SketchCmd),
}

fn main() {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Dist(args) => commands::dist::run(args),
        Command::Plan(args) => commands::plan::run(args),
        Command::Barycenter(args) => commands::variational::run_barycenter(args),
        Command::Flow(args) => commands::variational::run_flow(args),
        Command::Idt(args) => commands::variational::run_idt(args),
        Command::Partial(args) => commands::extensions::run_partial(args),
        Command::Uot(args) => commands::extensions::run_uot(args),
        Command::Gw(args) => commands::extensions::run_gw(args),
        Command::Mmot(args) => commands::extensions::run_mmot(args),
        Command::Kernel(args) => commands::kernels::run_kernel(args),
        Command::Embed(args) => commands::kernels::run_embed(args),
        Command::ColorTransfer(args) => commands::color::run(args),
        Command::Bench(args) => commands::bench::run(args),
        Command::Sketch(cmd) => commands::sketch::run(cmd),
    };
    match result {
        Ok(()) => {}
        Err(err) => {
            eprintln!("error: {err}");
            std::process::exit(err.exit_code());
        }
    }
}
