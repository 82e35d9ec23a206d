//! Gradients of SW losses and the solvers built on them: minimum-SW
//! estimation, free-support barycenters, particle flows, iterative
//! distribution transfer, and the discrete Knothe map.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::measures::{project, DiscreteMeasure, RngStream};
use crate::one_d_ot::{cost_pow, northwest_corner, symmetric_potentials, wasserstein_1d, Quadrature};
use crate::slicers::{sample_orthonormal_basis, sample_uniform_sphere, DirectionSet, Projector};
use crate::sw_core::check_equal_measure_mass;

/// Recorded states of a particle evolution.
#[derive(Debug, Clone)]
pub struct FlowTrace {
    snapshots: Vec<FlowSnapshot>,
}

#[derive(Debug, Clone)]
pub struct FlowSnapshot {
    pub step: usize,
    pub points: Vec<Vec<f64>>,
    pub objective: f64,
}

impl FlowTrace {
    fn push(&mut self, step: usize, points: &[Vec<f64>], objective: f64) -> Result<()> {
        if !objective.is_finite() {
            return Err(Error::NonFinite {
                what: "flow objective",
                index: step,
            });
        }
        if let Some(last) = self.snapshots.last() {
            if step <= last.step {
                return Err(Error::invalid("snapshot steps must be strictly increasing"));
            }
        }
        self.snapshots.push(FlowSnapshot {
            step,
            points: points.to_vec(),
            objective,
        });
        Ok(())
    }

    pub fn snapshots(&self) -> &[FlowSnapshot] {
        &self.snapshots
    }

    pub fn final_points(&self) -> &[Vec<f64>] {
        &self.snapshots.last().unwrap().points
    }

    pub fn final_objective(&self) -> f64 {
        self.snapshots.last().unwrap().objective
    }
}

/// Gradient of the frozen-direction estimate of `SW_p^p(mu, nu)` with
/// respect to the atoms of `mu`:
/// `(1/L) sum_l p sum_j pi_ij |<theta_l, x_i - y_j>|^(p-1)
/// sign(<theta_l, x_i - y_j>) theta_l`.
pub fn grad_atoms(
    atoms: &[Vec<f64>],
    weights: &[f64],
    nu: &DiscreteMeasure,
    p: f64,
    ds: &DirectionSet,
) -> Result<Vec<Vec<f64>>> {
    if p <= 1.0 {
        return Err(Error::invalid(format!("atom gradient needs p > 1, got {p}")));
    }
    let mu = DiscreteMeasure::new(atoms.to_vec(), Some(weights.to_vec()))?;
    check_equal_measure_mass(&mu, nu)?;
    let d = mu.dim();
    let n = mu.len();
    let per_dir: Vec<Vec<f64>> = ds
        .directions()
        .par_iter()
        .map(|theta| {
            let a = project(&mu, &Projector::Linear, theta)?;
            let b = project(nu, &Projector::Linear, theta)?;
            let plan = northwest_corner(&a, &b)?;
            let mut g = vec![0.0; n * d];
            for e in plan.entries() {
                let oi = a.perm()[e.i];
                let t = a.values()[e.i] - b.values()[e.j];
                if t == 0.0 {
                    continue;
                }
                let coef = p * e.mass * t.abs().powf(p - 1.0) * t.signum();
                for k in 0..d {
                    g[oi * d + k] += coef * theta.components()[k];
                }
            }
            Ok(g)
        })
        .collect::<Result<_>>()?;
    let mut grad = vec![vec![0.0; d]; n];
    let l = ds.len() as f64;
    for g in per_dir {
        for i in 0..n {
            for k in 0..d {
                grad[i][k] += g[i * d + k] / l;
            }
        }
    }
    Ok(grad)
}

/// Gradient of the frozen-direction estimate of `SW_p^p(mu, nu)` with
/// respect to the weights of `mu`: the direction-average of the first
/// Kantorovich potential. Zero-weight atoms get the c-transform
/// `min_j (c - g_j)`, the tightest feasible potential.
pub fn grad_weights(
    weights: &[f64],
    atoms: &[Vec<f64>],
    nu: &DiscreteMeasure,
    p: f64,
    ds: &DirectionSet,
) -> Result<Vec<f64>> {
    if p < 1.0 {
        return Err(Error::invalid(format!("order p = {p} must be >= 1")));
    }
    let mu = DiscreteMeasure::new(atoms.to_vec(), Some(weights.to_vec()))?;
    check_equal_measure_mass(&mu, nu)?;
    let n = mu.len();
    let per_dir: Vec<Vec<f64>> = ds
        .directions()
        .par_iter()
        .map(|theta| {
            let a = project(&mu, &Projector::Linear, theta)?;
            let b = project(nu, &Projector::Linear, theta)?;
            let cost = |x: f64, y: f64| cost_pow(x, y, p);
            let (_, pot) = symmetric_potentials(&a, &b, cost)?;
            let mut f = vec![f64::NAN; n];
            for (si, &oi) in a.perm().iter().enumerate() {
                f[oi] = pot.f[si];
            }
            for (i, fi) in f.iter_mut().enumerate() {
                if fi.is_nan() {
                    let xi = theta.dot(&atoms[i]);
                    *fi = b
                        .values()
                        .iter()
                        .zip(&pot.g)
                        .map(|(&y, g)| cost(xi, y) - g)
                        .fold(f64::INFINITY, f64::min);
                }
            }
            Ok(f)
        })
        .collect::<Result<_>>()?;
    let l = ds.len() as f64;
    let mut grad = vec![0.0; n];
    for f in per_dir {
        for (gi, fi) in grad.iter_mut().zip(f) {
            *gi += fi / l;
        }
    }
    Ok(grad)
}

fn mc_objective(
    atoms: &[Vec<f64>],
    nu: &DiscreteMeasure,
    p: f64,
    ds: &DirectionSet,
) -> Result<f64> {
    let mu = DiscreteMeasure::uniform(atoms.to_vec())?;
    let costs: Vec<f64> = ds
        .directions()
        .par_iter()
        .map(|theta| {
            let a = project(&mu, &Projector::Linear, theta)?;
            let b = project(nu, &Projector::Linear, theta)?;
            wasserstein_1d(&a, &b, p, &Quadrature::Exact)
        })
        .collect::<Result<_>>()?;
    Ok(costs.iter().sum::<f64>() / costs.len() as f64)
}

/// One mass-normalized descent step on uniform-weight atoms:
/// `x <- x - step * n * grad`.
fn descend_atoms(
    atoms: &mut [Vec<f64>],
    grad: &[Vec<f64>],
    step: f64,
) {
    let n = atoms.len() as f64;
    for (x, g) in atoms.iter_mut().zip(grad) {
        for (xk, gk) in x.iter_mut().zip(g) {
            *xk -= step * n * gk;
        }
    }
}

/// Minimum sliced Wasserstein estimation: stochastic gradient descent of
/// the model atoms toward the data, with a fresh direction set each
/// iteration. Returns the fitted measure and the per-iteration loss trace.
pub fn mswe_fit(
    data: &DiscreteMeasure,
    model: &DiscreteMeasure,
    p: f64,
    iters: usize,
    step: f64,
    dirs_per_iter: usize,
    rng: RngStream,
) -> Result<(DiscreteMeasure, Vec<f64>)> {
    check_equal_measure_mass(data, model)?;
    let mut atoms = model.supports().to_vec();
    let weights = model.weights().to_vec();
    let mut losses = Vec::with_capacity(iters);
    for it in 0..iters {
        let ds = sample_uniform_sphere(data.dim(), dirs_per_iter, rng.substream(it as u64))?;
        let grad = grad_atoms(&atoms, &weights, data, p, &ds)?;
        losses.push(mc_objective(&atoms, data, p, &ds)?);
        descend_atoms(&mut atoms, &grad, step);
    }
    Ok((DiscreteMeasure::new(atoms, Some(weights))?, losses))
}

/// Barycenter objective variants.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BarycenterMode {
    /// `sum_k w_k SW_p^p(mu, mu_k)`.
    Plain,
    /// Unbiased surrogate marginal fairness: per direction, only the
    /// worst marginal contributes, `E_theta[max_k W_p^p]`.
    FairnessUnbiased,
}

/// Free-support SW barycenter by stochastic gradient descent. Atoms are
/// initialized by sampling uniformly from the union of the input atoms.
#[allow(clippy::too_many_arguments)]
pub fn sw_barycenter(
    measures: &[DiscreteMeasure],
    weights: &[f64],
    n_atoms: usize,
    p: f64,
    iters: usize,
    step: f64,
    dirs_per_iter: usize,
    mode: BarycenterMode,
    rng: RngStream,
) -> Result<DiscreteMeasure> {
    if measures.is_empty() {
        return Err(Error::EmptyInput("barycenter needs at least one marginal"));
    }
    if n_atoms == 0 {
        return Err(Error::EmptyInput("barycenter needs at least one atom"));
    }
    if weights.len() != measures.len() {
        return Err(Error::SizeMismatch {
            n: measures.len(),
            m: weights.len(),
        });
    }
    let wsum: f64 = weights.iter().sum();
    if weights.iter().any(|&w| w <= 0.0) || (wsum - 1.0).abs() > 1e-9 {
        return Err(Error::invalid("marginal weights must be positive and sum to 1"));
    }
    let d = measures[0].dim();
    for m in measures {
        if m.dim() != d {
            return Err(Error::DimensionMismatch {
                index: 0,
                expected: d,
                got: m.dim(),
            });
        }
    }
    // Scale-aware deterministic init: sample atoms from the pooled supports.
    let pooled: Vec<&Vec<f64>> = measures.iter().flat_map(|m| m.supports()).collect();
    let mut init_rng = rng.substream(u64::MAX / 2).rng();
    let mut atoms: Vec<Vec<f64>> = (0..n_atoms)
        .map(|_| {
            use rand::Rng;
            pooled[init_rng.random_range(0..pooled.len())].clone()
        })
        .collect();
    let bary_weights = vec![1.0 / n_atoms as f64; n_atoms];

    for it in 0..iters {
        let ds = sample_uniform_sphere(d, dirs_per_iter, rng.substream(it as u64))?;
        let grad = barycenter_grad(&atoms, &bary_weights, measures, weights, p, &ds, mode)?;
        descend_atoms(&mut atoms, &grad, step);
    }
    DiscreteMeasure::new(atoms, Some(bary_weights))
}

fn barycenter_grad(
    atoms: &[Vec<f64>],
    bary_weights: &[f64],
    measures: &[DiscreteMeasure],
    weights: &[f64],
    p: f64,
    ds: &DirectionSet,
    mode: BarycenterMode,
) -> Result<Vec<Vec<f64>>> {
    let mu = DiscreteMeasure::new(atoms.to_vec(), Some(bary_weights.to_vec()))?;
    let d = mu.dim();
    let n = mu.len();
    let per_dir: Vec<Vec<f64>> = ds
        .directions()
        .par_iter()
        .map(|theta| {
            let a = project(&mu, &Projector::Linear, theta)?;
            let mut g = vec![0.0; n * d];
            // Per-marginal slice costs and plan gradients along theta.
            let mut slices = Vec::with_capacity(measures.len());
            for m in measures {
                let b = project(m, &Projector::Linear, theta)?;
                let cost = wasserstein_1d(&a, &b, p, &Quadrature::Exact)?;
                slices.push((b, cost));
            }
            let active: Vec<(usize, f64)> = match mode {
                BarycenterMode::Plain => weights.iter().cloned().enumerate().collect(),
                BarycenterMode::FairnessUnbiased => {
                    let worst = slices
                        .iter()
                        .enumerate()
                        .max_by(|x, y| x.1 .1.partial_cmp(&y.1 .1).unwrap())
                        .map(|(k, _)| k)
                        .unwrap();
                    vec![(worst, 1.0)]
                }
            };
            for (k, wk) in active {
                let b = &slices[k].0;
                let plan = northwest_corner(&a, b)?;
                for e in plan.entries() {
                    let oi = a.perm()[e.i];
                    let t = a.values()[e.i] - b.values()[e.j];
                    if t == 0.0 {
                        continue;
                    }
                    let coef = wk * p * e.mass * t.abs().powf(p - 1.0) * t.signum();
                    for c in 0..d {
                        g[oi * d + c] += coef * theta.components()[c];
                    }
                }
            }
            Ok(g)
        })
        .collect::<Result<_>>()?;
    let l = ds.len() as f64;
    let mut grad = vec![vec![0.0; d]; n];
    for g in per_dir {
        for i in 0..n {
            for c in 0..d {
                grad[i][c] += g[i * d + c] / l;
            }
        }
    }
    Ok(grad)
}

/// Frozen-direction audit of the barycenter objective.
pub fn barycenter_objective(
    bary: &DiscreteMeasure,
    measures: &[DiscreteMeasure],
    weights: &[f64],
    p: f64,
    ds: &DirectionSet,
) -> Result<f64> {
    let mut total = 0.0;
    for (m, &w) in measures.iter().zip(weights) {
        let costs: Vec<f64> = ds
            .directions()
            .par_iter()
            .map(|theta| {
                let a = project(bary, &Projector::Linear, theta)?;
                let b = project(m, &Projector::Linear, theta)?;
                wasserstein_1d(&a, &b, p, &Quadrature::Exact)
            })
            .collect::<Result<_>>()?;
        total += w * costs.iter().sum::<f64>() / costs.len() as f64;
    }
    Ok(total)
}

/// Explicit-Euler particle descent of `SW_p^p(mu_t, target)` with a fresh
/// direction set per step. The update is mass-normalized,
/// `x <- x - step * n * grad`; the default step is `0.5 * d`, which undoes
/// the `1/d` projection contraction in expectation.
#[allow(clippy::too_many_arguments)]
pub fn sw_gradient_flow(
    particles: &[Vec<f64>],
    target: &DiscreteMeasure,
    p: f64,
    step: f64,
    iters: usize,
    dirs_per_iter: usize,
    snapshot_every: usize,
    rng: RngStream,
) -> Result<FlowTrace> {
    if step <= 0.0 {
        return Err(Error::invalid(format!("step {step} must be > 0")));
    }
    if particles.is_empty() {
        return Err(Error::EmptyInput("flow needs at least one particle"));
    }
    let snapshot_every = snapshot_every.max(1);
    let n = particles.len();
    let weights = vec![1.0 / n as f64; n];
    let mut atoms = particles.to_vec();
    // Frozen audit directions for the recorded objective.
    let audit = sample_uniform_sphere(target.dim(), dirs_per_iter.max(16), rng.substream(u64::MAX / 2))?;
    let mut trace = FlowTrace { snapshots: Vec::new() };
    trace.push(0, &atoms, mc_objective(&atoms, target, p, &audit)?)?;
    for it in 0..iters {
        let ds = sample_uniform_sphere(target.dim(), dirs_per_iter, rng.substream(it as u64))?;
        let grad = grad_atoms(&atoms, &weights, target, p, &ds)?;
        descend_atoms(&mut atoms, &grad, step);
        if (it + 1) % snapshot_every == 0 || it + 1 == iters {
            trace.push(it + 1, &atoms, mc_objective(&atoms, target, p, &audit)?)?;
        }
    }
    Ok(trace)
}

/// Iterative distribution transfer: per iteration, draw a random
/// orthonormal basis and apply the 1D sorted-match map along every basis
/// direction at once. Requires uniform weights and equal counts.
pub fn idt(
    source: &[Vec<f64>],
    target: &DiscreteMeasure,
    iters: usize,
    rng: RngStream,
) -> Result<FlowTrace> {
    if source.is_empty() {
        return Err(Error::EmptyInput("IDT needs at least one particle"));
    }
    if source.len() != target.len() {
        return Err(Error::SizeMismatch {
            n: source.len(),
            m: target.len(),
        });
    }
    let uniform = target
        .weights()
        .iter()
        .all(|&w| (w - target.weights()[0]).abs() <= 1e-12);
    if !uniform {
        return Err(Error::NonUniformWeights);
    }
    let d = target.dim();
    let n = source.len();
    let mut atoms = source.to_vec();
    let audit = sample_uniform_sphere(d, 64, rng.substream(u64::MAX / 2))?;
    let mut trace = FlowTrace { snapshots: Vec::new() };
    trace.push(0, &atoms, mc_objective(&atoms, target, 2.0, &audit)?)?;
    for it in 0..iters {
        let mut basis_rng = rng.substream(it as u64).rng();
        let basis = sample_orthonormal_basis(d, &mut basis_rng);
        // Sorted-match displacement along each basis vector.
        let mut displacement = vec![vec![0.0; d]; n];
        for axis in &basis {
            let src_proj: Vec<f64> = atoms.iter().map(|x| dot(axis, x)).collect();
            let tgt_proj: Vec<f64> = target.supports().iter().map(|y| dot(axis, y)).collect();
            let mut src_order: Vec<usize> = (0..n).collect();
            src_order.sort_by(|&a, &b| src_proj[a].partial_cmp(&src_proj[b]).unwrap());
            let mut tgt_sorted = tgt_proj;
            tgt_sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
            for (rank, &i) in src_order.iter().enumerate() {
                let delta = tgt_sorted[rank] - src_proj[i];
                for k in 0..d {
                    displacement[i][k] += delta * axis[k];
                }
            }
        }
        for (x, disp) in atoms.iter_mut().zip(&displacement) {
            for (xk, dk) in x.iter_mut().zip(disp) {
                *xk += dk;
            }
        }
        trace.push(it + 1, &atoms, mc_objective(&atoms, target, 2.0, &audit)?)?;
    }
    Ok(trace)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Discrete Knothe-Rosenblatt map between two uniform point sets:
/// lexicographic sort on both sides, match by rank. Returns `sigma` with
/// `sigma[i] = j` in original indexing.
pub fn knothe_discrete(xs: &[Vec<f64>], ys: &[Vec<f64>]) -> Result<Vec<usize>> {
    if xs.len() != ys.len() {
        return Err(Error::SizeMismatch {
            n: xs.len(),
            m: ys.len(),
        });
    }
    if xs.is_empty() {
        return Err(Error::EmptyInput("Knothe map needs at least one point"));
    }
    let d = xs[0].len();
    if ys[0].len() != d {
        return Err(Error::DimensionMismatch {
            index: 0,
            expected: d,
            got: ys[0].len(),
        });
    }
    let lex = |a: &[f64], b: &[f64]| {
        for (x, y) in a.iter().zip(b) {
            match x.partial_cmp(y).unwrap() {
                std::cmp::Ordering::Equal => continue,
                other => return other,
            }
        }
        std::cmp::Ordering::Equal
    };
    let mut xi: Vec<usize> = (0..xs.len()).collect();
    let mut yi: Vec<usize> = (0..ys.len()).collect();
    xi.sort_by(|&a, &b| lex(&xs[a], &xs[b]));
    yi.sort_by(|&a, &b| lex(&ys[a], &ys[b]));
    let mut sigma = vec![0usize; xs.len()];
    for (rank, &i) in xi.iter().enumerate() {
        sigma[i] = yi[rank];
    }
    Ok(sigma)
}
