//! Sliced optimal transport toolkit.
//!
//! Everything here is built on two primitives: projecting a weighted point
//! set onto a line ([`measures::project`]) and solving optimal transport on
//! that line by sorting ([`one_d_ot`]). On top of those sit the sliced
//! Wasserstein estimators ([`sw_core`]), lifted transport plans ([`plans`]),
//! gradient-based solvers ([`variational`]), the multi-marginal / partial /
//! unbalanced / Gromov variants ([`extensions`]), and SW kernels and
//! embeddings ([`kernels`]).
//!
//! All randomness flows through [`measures::RngStream`], a counter-based
//! (seed, stream) pair that yields the same draws on every platform. Every
//! estimator is deterministic given its inputs and stream provenance;
//! per-direction work may run in parallel but is always reduced in fixed
//! direction order, so results do not depend on the thread schedule.
//!
//! Optimizer step sizes (`step` in flows, barycenters, and fitting) are
//! expressed per unit of particle mass: the update applied to an atom is
//! `step * n_atoms * gradient`, so the same `step` behaves alike for any
//! number of particles. The default `0.5 * d` compensates the `1/d`
//! contraction of projections, `E[<theta, v>^2] = ||v||^2 / d`.

pub mod error;
pub mod extensions;
pub mod kernels;
pub mod measures;
pub mod one_d_ot;
pub mod plans;
pub mod slicers;
pub mod sw_core;
pub mod variational;

pub use error::{Error, Result};
pub use measures::{DiscreteMeasure, Direction, RngStream};
pub use one_d_ot::{DualPotentials, KllSketch, Plan1D, Quadrature, QuantileFn, SortedSlice};
pub use plans::PlanD;
pub use slicers::{DirectionSet, Projector, Provenance};
pub use sw_core::{EnergySpec, SwEstimate};
