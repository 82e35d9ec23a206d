//! Sliced multi-marginal, partial, unbalanced, and Gromov variants.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::measures::{project, DiscreteMeasure};
use crate::one_d_ot::{symmetric_potentials, SortedSlice};
use crate::slicers::{DirectionSet, Projector};

/// An injective partial matching between sorted-index atoms.
#[derive(Debug, Clone, PartialEq)]
pub struct PartialAssignment {
    /// Matched `(i, j)` pairs in sorted-index space, injective on both sides.
    pub pairs: Vec<(usize, usize)>,
    pub transported_mass: f64,
    pub cost: f64,
}

/// Output of the Frank-Wolfe unbalanced solver: the translated dual iterate
/// and its objective value.
#[derive(Debug, Clone, PartialEq)]
pub struct UotResult {
    pub dual_value: f64,
    pub f: Vec<f64>,
    pub g: Vec<f64>,
    pub iterations: usize,
}

/// Ground cost for the unbalanced 1D solver.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UotCost {
    Abs,
    Squared,
}

impl UotCost {
    pub fn eval(&self, x: f64, y: f64) -> f64 {
        match self {
            UotCost::Abs => (x - y).abs(),
            UotCost::Squared => (x - y) * (x - y),
        }
    }
}

fn check_simplex(betas: &[f64]) -> Result<()> {
    if betas.is_empty() {
        return Err(Error::EmptyInput("need at least one weight"));
    }
    let sum: f64 = betas.iter().sum();
    if betas.iter().any(|&b| b <= 0.0) || (sum - 1.0).abs() > 1e-9 {
        return Err(Error::invalid("weights must be positive and sum to 1"));
    }
    Ok(())
}

/// Exact quadratic multi-marginal cost of normalized 1D slices against
/// their pointwise barycenter: the quantile integral evaluated piecewise on
/// the merged cumulative-weight breakpoints.
pub fn smw_1d_direct(slices: &[SortedSlice], betas: &[f64]) -> Result<f64> {
    check_simplex(betas)?;
    if slices.len() != betas.len() {
        return Err(Error::SizeMismatch {
            n: slices.len(),
            m: betas.len(),
        });
    }
    // Merged normalized breakpoints; quantiles are constant between them.
    let mut breaks: Vec<f64> = Vec::new();
    for s in slices {
        let mass = s.mass();
        breaks.extend(s.cum_weights().iter().map(|c| c / mass));
    }
    breaks.push(1.0);
    breaks.retain(|t| *t > 0.0 && *t <= 1.0);
    breaks.sort_by(|a, b| a.partial_cmp(b).unwrap());
    breaks.dedup();
    let mut total = 0.0;
    let mut t_prev = 0.0;
    for &t in &breaks {
        let len = t - t_prev;
        if len <= 0.0 {
            continue;
        }
        let tm = 0.5 * (t_prev + t);
        let quantiles: Vec<f64> = slices
            .iter()
            .map(|s| s.quantile(tm))
            .collect::<Result<_>>()?;
        let bary: f64 = quantiles.iter().zip(betas).map(|(q, b)| q * b).sum();
        let dev: f64 = quantiles
            .iter()
            .zip(betas)
            .map(|(q, b)| b * (q - bary) * (q - bary))
            .sum();
        total += len * dev;
        t_prev = t;
    }
    Ok(total)
}

/// The pairwise reduction `1/2 sum_kk' beta_k beta_k' W_2^2` of the same
/// quantity, used as an internal consistency oracle.
pub fn smw_1d_pairwise(slices: &[SortedSlice], betas: &[f64]) -> Result<f64> {
    check_simplex(betas)?;
    let normalized: Vec<SortedSlice> = slices
        .iter()
        .map(|s| {
            let w: Vec<f64> = s.weights().iter().map(|x| x / s.mass()).collect();
            SortedSlice::from_weighted_values(s.values().to_vec(), w)
        })
        .collect::<Result<_>>()?;
    let mut total = 0.0;
    for (k, a) in normalized.iter().enumerate() {
        for (kp, b) in normalized.iter().enumerate() {
            if k == kp {
                continue;
            }
            let w2 = crate::one_d_ot::wasserstein_1d(a, b, 2.0, &crate::one_d_ot::Quadrature::Exact)?;
            total += 0.5 * betas[k] * betas[kp] * w2;
        }
    }
    Ok(total)
}

/// Sliced multi-marginal Wasserstein with the barycentric cost (p = 2):
/// the direct quantile integral averaged over the direction set.
pub fn smw(
    measures: &[DiscreteMeasure],
    betas: &[f64],
    ds: &DirectionSet,
    proj: &Projector,
) -> Result<f64> {
    check_simplex(betas)?;
    if measures.len() != betas.len() {
        return Err(Error::SizeMismatch {
            n: measures.len(),
            m: betas.len(),
        });
    }
    for w in measures.windows(2) {
        crate::sw_core::check_equal_measure_mass(&w[0], &w[1])?;
    }
    let per_slice: Vec<f64> = ds
        .directions()
        .par_iter()
        .map(|theta| {
            let slices: Vec<SortedSlice> = measures
                .iter()
                .map(|m| project(m, proj, theta))
                .collect::<Result<_>>()?;
            smw_1d_direct(&slices, betas)
        })
        .collect::<Result<_>>()?;
    Ok(per_slice.iter().sum::<f64>() / per_slice.len() as f64)
}

fn uniform_weight_of(s: &SortedSlice) -> Result<f64> {
    let w = s.weights()[0];
    if !s.is_uniform() {
        return Err(Error::NonUniformWeights);
    }
    Ok(w)
}

/// 1D partial assignment with cost `|x - y|`: transports mass `s` between
/// two slices of equal per-atom weight `w` and disjoint supports.
///
/// Restricted-candidate induction: each new pair must join a free atom with
/// a free neighbor from the other measure, the induced monotone
/// sub-matching is re-solved per candidate, and fractional `s` interpolates
/// the costs of the two neighboring integer levels.
pub fn pot_1d(a: &SortedSlice, b: &SortedSlice, s: f64) -> Result<PartialAssignment> {
    let wa = uniform_weight_of(a)?;
    let wb = uniform_weight_of(b)?;
    if (wa - wb).abs() > 1e-12 * wa.max(1.0) {
        return Err(Error::NonUniformWeights);
    }
    let w = wa;
    // Disjoint supports.
    for &x in a.values() {
        if b.values().binary_search_by(|v| v.partial_cmp(&x).unwrap()).is_ok() {
            return Err(Error::OverlappingSupports);
        }
    }
    let max_mass = a.mass().min(b.mass());
    if !(s > 0.0 && s <= max_mass + 1e-12 * max_mass.max(1.0)) {
        return Err(Error::MassOutOfRange { s, max: max_mass });
    }
    let ratio = s / w;
    let k_lo = (ratio + 1e-9).floor() as usize;
    let frac = (ratio - k_lo as f64).max(0.0);
    let k_need = if frac > 1e-9 { k_lo + 1 } else { k_lo };
    let k_need = k_need.min(a.len().min(b.len()));

    // Merged order of all atoms on the line, tagged by side.
    let mut merged: Vec<(f64, bool, usize)> = Vec::with_capacity(a.len() + b.len());
    merged.extend(a.values().iter().enumerate().map(|(i, &v)| (v, false, i)));
    merged.extend(b.values().iter().enumerate().map(|(j, &v)| (v, true, j)));
    merged.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap());

    let mut active_a = vec![false; a.len()];
    let mut active_b = vec![false; b.len()];
    let mut level_costs = vec![0.0];
    let mut pairs: Vec<(usize, usize)> = Vec::new();
    for _ in 0..k_need {
        // Candidates: adjacent free atoms from opposite sides in merged order.
        let free: Vec<&(f64, bool, usize)> = merged
            .iter()
            .filter(|(_, is_b, idx)| if *is_b { !active_b[*idx] } else { !active_a[*idx] })
            .collect();
        let mut best: Option<(f64, usize, usize, f64)> = None; // (cost, ai, bj, left pos)
        for pair in free.windows(2) {
            let (&(va, side_a, ia), &(vb, side_b, ib)) = (pair[0], pair[1]);
            if side_a == side_b {
                continue;
            }
            let (ai, bj) = if side_a { (ib, ia) } else { (ia, ib) };
            active_a[ai] = true;
            active_b[bj] = true;
            let cost = matched_cost(a, b, &active_a, &active_b, w);
            active_a[ai] = false;
            active_b[bj] = false;
            let leftmost = va.min(vb);
            let better = match &best {
                None => true,
                Some((bc, _, _, bl)) => {
                    cost < bc - 1e-15 || (cost <= bc + 1e-15 && leftmost < *bl)
                }
            };
            if better {
                best = Some((cost, ai, bj, leftmost));
            }
        }
        let (cost, ai, bj, _) =
            best.ok_or_else(|| Error::invalid("no augmenting candidate pair"))?;
        active_a[ai] = true;
        active_b[bj] = true;
        pairs.push((ai, bj));
        level_costs.push(cost);
    }
    // Optimal matching pairs at the reached level (sorted active sets).
    let act_a: Vec<usize> = (0..a.len()).filter(|&i| active_a[i]).collect();
    let act_b: Vec<usize> = (0..b.len()).filter(|&j| active_b[j]).collect();
    let matched: Vec<(usize, usize)> = act_a.iter().cloned().zip(act_b.iter().cloned()).collect();
    let cost = if frac > 1e-9 {
        let lo = level_costs[k_lo];
        let hi = level_costs[k_need];
        lo * (1.0 - frac) + hi * frac
    } else {
        level_costs[k_lo.min(level_costs.len() - 1)]
    };
    Ok(PartialAssignment {
        pairs: matched,
        transported_mass: s,
        cost,
    })
}

/// Cost of the sorted monotone matching restricted to the active sets.
fn matched_cost(
    a: &SortedSlice,
    b: &SortedSlice,
    active_a: &[bool],
    active_b: &[bool],
    w: f64,
) -> f64 {
    let xs = a
        .values()
        .iter()
        .zip(active_a)
        .filter(|(_, act)| **act)
        .map(|(v, _)| *v);
    let ys: Vec<f64> = b
        .values()
        .iter()
        .zip(active_b)
        .filter(|(_, act)| **act)
        .map(|(v, _)| *v)
        .collect();
    xs.zip(ys).map(|(x, y)| w * (x - y).abs()).sum()
}

/// One-sided 1D partial assignment with squared cost: the injective map of
/// all `n` source points into `m >= n` sorted targets, built by the
/// left-to-right conflict-resolution scan (shift-left block vs push-right).
pub fn opot_1d_assign(xs: &[f64], ys: &[f64]) -> Result<PartialAssignment> {
    let n = xs.len();
    let m = ys.len();
    if n == 0 || m == 0 {
        return Err(Error::EmptyInput("assignment needs nonempty inputs"));
    }
    if n > m {
        return Err(Error::SizeMismatch { n, m });
    }
    let mut xs = xs.to_vec();
    let mut ys = ys.to_vec();
    xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    ys.sort_by(|a, b| a.partial_cmp(b).unwrap());
    // Nearest target of each source, ties to the smaller index.
    let nearest: Vec<usize> = xs
        .iter()
        .map(|&x| {
            let idx = ys.partition_point(|&y| y < x);
            if idx == 0 {
                0
            } else if idx == m {
                m - 1
            } else if (x - ys[idx - 1]).abs() <= (ys[idx] - x).abs() {
                idx - 1
            } else {
                idx
            }
        })
        .collect();
    let mut sigma: Vec<usize> = Vec::with_capacity(n);
    for i in 0..n {
        if sigma.is_empty() {
            sigma.push(nearest[0]);
            continue;
        }
        let last = *sigma.last().unwrap();
        if nearest[i] > last {
            sigma.push(nearest[i]);
            continue;
        }
        // Conflict. The trailing run of consecutive columns ending at `last`
        // starts at r; the free column just left of it is sigma[r] - 1.
        let mut r = sigma.len() - 1;
        while r > 0 && sigma[r - 1] == sigma[r] - 1 {
            r -= 1;
        }
        let shift_feasible = sigma[r] > 0;
        let push_feasible = last + 1 < m;
        let shift_cost = if shift_feasible {
            let mut delta = sq(xs[i] - ys[last]);
            for (q, &col) in sigma.iter().enumerate().skip(r) {
                delta += sq(xs[q] - ys[col - 1]) - sq(xs[q] - ys[col]);
            }
            delta
        } else {
            f64::INFINITY
        };
        let push_cost = if push_feasible {
            sq(xs[i] - ys[last + 1])
        } else {
            f64::INFINITY
        };
        if shift_cost < push_cost {
            for col in sigma.iter_mut().skip(r) {
                *col -= 1;
            }
            sigma.push(last);
        } else {
            sigma.push(last + 1);
        }
    }
    let cost: f64 = sigma
        .iter()
        .enumerate()
        .map(|(i, &j)| sq(xs[i] - ys[j]))
        .sum();
    Ok(PartialAssignment {
        pairs: sigma.iter().cloned().enumerate().collect(),
        transported_mass: n as f64,
        cost,
    })
}

#[inline]
fn sq(x: f64) -> f64 {
    x * x
}

/// Which 1D partial problem backs the sliced distance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PartialMode {
    /// `pot_1d` with transported mass `s_fraction * min(mass)`, cost `|x - y|`.
    Limited { s_fraction: f64 },
    /// `opot_1d_assign` (all source mass, squared cost).
    OneSided,
}

/// Sliced partial OT: the direction-average of the chosen 1D partial cost.
/// Costs are expressed in mass units (each matched atom contributes its
/// weight times the ground cost).
pub fn sliced_partial(
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    ds: &DirectionSet,
    proj: &Projector,
    mode: PartialMode,
) -> Result<f64> {
    let per_slice: Vec<f64> = ds
        .directions()
        .par_iter()
        .map(|theta| {
            let a = project(mu, proj, theta)?;
            let b = project(nu, proj, theta)?;
            match mode {
                PartialMode::Limited { s_fraction } => {
                    if !(0.0..=1.0).contains(&s_fraction) {
                        return Err(Error::invalid(format!(
                            "s fraction {s_fraction} outside [0, 1]"
                        )));
                    }
                    let s = s_fraction * a.mass().min(b.mass());
                    Ok(pot_1d(&a, &b, s)?.cost)
                }
                PartialMode::OneSided => {
                    let w = uniform_weight_of(&a)?;
                    uniform_weight_of(&b)?;
                    if a.len() > b.len() {
                        return Err(Error::SizeMismatch {
                            n: a.len(),
                            m: b.len(),
                        });
                    }
                    Ok(w * opot_1d_assign(a.values(), b.values())?.cost)
                }
            }
        })
        .collect::<Result<_>>()?;
    Ok(per_slice.iter().sum::<f64>() / per_slice.len() as f64)
}

/// `log sum_i w_i exp(x_i)` with max subtraction.
fn log_sum_exp(weights: &[f64], xs: impl Iterator<Item = f64>) -> f64 {
    let xs: Vec<f64> = xs.collect();
    let max = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let sum: f64 = weights
        .iter()
        .zip(&xs)
        .map(|(w, x)| w * (x - max).exp())
        .sum();
    max + sum.ln()
}

fn lambda_star(
    a: &SortedSlice,
    b: &SortedSlice,
    f: &[f64],
    g: &[f64],
    rho1: f64,
    rho2: f64,
) -> f64 {
    let log_num = log_sum_exp(a.weights(), f.iter().map(|fi| -fi / rho1));
    let log_den = log_sum_exp(b.weights(), g.iter().map(|gj| -gj / rho2));
    rho1 * rho2 / (rho1 + rho2) * (log_num - log_den)
}

/// Frank-Wolfe on the translation-invariant dual of 1D unbalanced OT with
/// KL marginal penalties.
///
/// Each step computes the optimal translation `lambda*`, reweights both
/// marginals, and calls the balanced 1D potentials oracle on the
/// probability-normalized reweighted marginals (normalization leaves the
/// potentials unchanged). The returned potentials carry the final
/// translation, so the dual objective is evaluated at a feasible point.
pub fn uot_1d_fw(
    a: &SortedSlice,
    b: &SortedSlice,
    rho1: f64,
    rho2: f64,
    cost: UotCost,
    iters: usize,
) -> Result<UotResult> {
    if !(rho1 > 0.0) || !(rho2 > 0.0) {
        return Err(Error::invalid("KL strengths must be positive"));
    }
    if iters == 0 {
        return Err(Error::invalid("Frank-Wolfe needs at least one iteration"));
    }
    let mut f = vec![0.0; a.len()];
    let mut g = vec![0.0; b.len()];
    // Reweighted marginals are built in log space and normalized to
    // probability, which keeps tiny KL strengths from overflowing.
    let reweight = |slice: &SortedSlice, pots: &[f64], shift: f64, rho: f64| {
        let logs: Vec<f64> = slice
            .weights()
            .iter()
            .zip(pots)
            .map(|(w, p)| w.ln() - (p + shift) / rho)
            .collect();
        let max = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let raw: Vec<f64> = logs.iter().map(|l| (l - max).exp()).collect();
        let total: f64 = raw.iter().sum();
        SortedSlice::from_weighted_values(
            slice.values().to_vec(),
            raw.iter().map(|r| r / total).collect(),
        )
    };
    for t in 0..iters {
        let lambda = lambda_star(a, b, &f, &g, rho1, rho2);
        let na = reweight(a, &f, lambda, rho1)?;
        let nb = reweight(b, &g, -lambda, rho2)?;
        let (_, pot) = symmetric_potentials(&na, &nb, |x, y| cost.eval(x, y))?;
        let gamma = 2.0 / (t as f64 + 3.0);
        for (fi, ri) in f.iter_mut().zip(&pot.f) {
            *fi = (1.0 - gamma) * *fi + gamma * ri;
        }
        for (gj, sj) in g.iter_mut().zip(&pot.g) {
            *gj = (1.0 - gamma) * *gj + gamma * sj;
        }
    }
    let lambda = lambda_star(a, b, &f, &g, rho1, rho2);
    let f_out: Vec<f64> = f.iter().map(|fi| fi + lambda).collect();
    let g_out: Vec<f64> = g.iter().map(|gj| gj - lambda).collect();
    let phi = |x: f64, rho: f64| rho * (1.0 - (-x / rho).exp());
    let dual_value = a
        .weights()
        .iter()
        .zip(&f_out)
        .map(|(w, fi)| w * phi(*fi, rho1))
        .sum::<f64>()
        + b.weights()
            .iter()
            .zip(&g_out)
            .map(|(w, gj)| w * phi(*gj, rho2))
            .sum::<f64>();
    Ok(UotResult {
        dual_value,
        f: f_out,
        g: g_out,
        iterations: iters,
    })
}

/// Sliced unbalanced OT: the direction-average of the 1D Frank-Wolfe dual
/// values.
#[allow(clippy::too_many_arguments)]
pub fn suot(
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    rho1: f64,
    rho2: f64,
    ds: &DirectionSet,
    proj: &Projector,
    cost: UotCost,
    iters: usize,
) -> Result<f64> {
    let per_slice: Vec<f64> = ds
        .directions()
        .par_iter()
        .map(|theta| {
            let a = project(mu, proj, theta)?;
            let b = project(nu, proj, theta)?;
            Ok(uot_1d_fw(&a, &b, rho1, rho2, cost, iters)?.dual_value)
        })
        .collect::<Result<_>>()?;
    Ok(per_slice.iter().sum::<f64>() / per_slice.len() as f64)
}

/// Sliced Gromov-Wasserstein with the sorted-matching heuristic: per slice,
/// the quadratic GW cost of the ascending-ascending and ascending-descending
/// matchings, keeping the smaller. An upper proxy, not the exact 1D GW.
pub fn sgw_heuristic(
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    ds: &DirectionSet,
) -> Result<f64> {
    let n = mu.len();
    if n != nu.len() {
        return Err(Error::SizeMismatch { n, m: nu.len() });
    }
    let uniform = |m: &DiscreteMeasure| {
        m.weights()
            .iter()
            .all(|&w| (w - m.weights()[0]).abs() <= 1e-12)
    };
    if !uniform(mu) || !uniform(nu) {
        return Err(Error::NonUniformWeights);
    }
    let d_max = mu.dim().max(nu.dim());
    if ds.dim() != d_max {
        return Err(Error::DimensionMismatch {
            index: 0,
            expected: d_max,
            got: ds.dim(),
        });
    }
    let pad_project = |pts: &[Vec<f64>], theta: &[f64]| -> Vec<f64> {
        pts.iter()
            .map(|x| x.iter().zip(theta).map(|(a, b)| a * b).sum())
            .collect()
    };
    let per_slice: Vec<f64> = ds
        .directions()
        .par_iter()
        .map(|theta| {
            let mut u = pad_project(mu.supports(), theta.components());
            let mut v = pad_project(nu.supports(), theta.components());
            u.sort_by(|a, b| a.partial_cmp(b).unwrap());
            v.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let cost_of = |v_at: &dyn Fn(usize) -> f64| -> f64 {
                let mut acc = 0.0;
                for i in 0..n {
                    for ip in 0..n {
                        let gu = (u[i] - u[ip]) * (u[i] - u[ip]);
                        let gv = (v_at(i) - v_at(ip)) * (v_at(i) - v_at(ip));
                        acc += (gu - gv) * (gu - gv);
                    }
                }
                acc / (n * n) as f64
            };
            let asc = cost_of(&|i| v[i]);
            let desc = cost_of(&|i| v[n - 1 - i]);
            Ok(asc.min(desc))
        })
        .collect::<Result<_>>()?;
    Ok(per_slice.iter().sum::<f64>() / per_slice.len() as f64)
}
