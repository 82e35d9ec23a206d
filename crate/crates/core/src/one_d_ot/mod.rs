//! Exact and approximate one-dimensional optimal transport.
//!
//! The cost family is `c(x, y) = |x - y|^p` with runtime `p >= 1`; sorting
//! is optimal for this family, which is what every routine here exploits.

mod plan;
mod sketch;
mod spline;

pub use plan::{
    northwest_corner, northwest_corner_with_potentials, symmetric_potentials, DualPotentials,
    Plan1D,
};
pub use sketch::KllSketch;
pub use spline::{spline_fit, QuantileFn, RqSpline};

use crate::error::{Error, Result};
use crate::measures::RngStream;
use rand::Rng;

/// Relative tolerance used when two masses must agree.
pub const MASS_TOL: f64 = 1e-9;

/// A projected measure: sorted atom values with their weights, cumulative
/// weights, and the permutation back to original atom indices.
#[derive(Debug, Clone, PartialEq)]
pub struct SortedSlice {
    values: Vec<f64>,
    weights: Vec<f64>,
    cum_weights: Vec<f64>,
    perm: Vec<usize>,
}

impl SortedSlice {
    /// Sorts `(values, weights)` ascending, stable on ties by original index.
    pub fn from_unsorted(values: Vec<f64>, weights: Vec<f64>, perm: Vec<usize>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptyInput("slice needs at least one atom"));
        }
        if values.len() != weights.len() || values.len() != perm.len() {
            return Err(Error::SizeMismatch {
                n: values.len(),
                m: weights.len(),
            });
        }
        for (i, v) in values.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::NonFinite {
                    what: "slice value",
                    index: i,
                });
            }
        }
        for (i, &w) in weights.iter().enumerate() {
            if !(w.is_finite() && w > 0.0) {
                return Err(Error::NonFinite {
                    what: "slice weight",
                    index: i,
                });
            }
        }
        let mut order: Vec<usize> = (0..values.len()).collect();
        // Stable by construction: sort_by is stable, equal values keep the
        // incoming (original-index) order.
        order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap());
        let values: Vec<f64> = order.iter().map(|&i| values[i]).collect();
        let weights: Vec<f64> = order.iter().map(|&i| weights[i]).collect();
        let perm: Vec<usize> = order.iter().map(|&i| perm[i]).collect();
        let mut cum = Vec::with_capacity(values.len());
        let mut acc = 0.0;
        for &w in &weights {
            acc += w;
            cum.push(acc);
        }
        Ok(SortedSlice {
            values,
            weights,
            cum_weights: cum,
            perm,
        })
    }

    /// Convenience constructor for raw 1D samples with uniform weights.
    pub fn from_values(values: Vec<f64>) -> Result<Self> {
        let n = values.len();
        if n == 0 {
            return Err(Error::EmptyInput("slice needs at least one atom"));
        }
        let w = vec![1.0 / n as f64; n];
        let perm = (0..n).collect();
        Self::from_unsorted(values, w, perm)
    }

    pub fn from_weighted_values(values: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        let perm = (0..values.len()).collect();
        Self::from_unsorted(values, weights, perm)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn cum_weights(&self) -> &[f64] {
        &self.cum_weights
    }

    pub fn perm(&self) -> &[usize] {
        &self.perm
    }

    pub fn mass(&self) -> f64 {
        *self.cum_weights.last().unwrap()
    }

    /// True when every atom carries the same weight.
    pub fn is_uniform(&self) -> bool {
        let w0 = self.weights[0];
        self.weights.iter().all(|&w| (w - w0).abs() <= 1e-12 * w0.abs().max(1.0))
    }

    /// Left-closed empirical quantile: `inf { y : t <= F(y) }` with `t` in
    /// mass-normalized units, so `quantile(0)` is the smallest atom.
    pub fn quantile(&self, t: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&t) {
            return Err(Error::invalid(format!("quantile level {t} outside [0, 1]")));
        }
        let target = t * self.mass();
        let idx = self.cum_weights.partition_point(|&c| c < target);
        Ok(self.values[idx.min(self.values.len() - 1)])
    }

    /// Empirical CDF in mass units: `sum_i w_i 1[v_i <= x]`.
    pub fn cdf(&self, x: f64) -> f64 {
        let idx = self.values.partition_point(|&v| v <= x);
        if idx == 0 {
            0.0
        } else {
            self.cum_weights[idx - 1]
        }
    }

    /// Merges atoms with exactly equal values, summing weights. The
    /// permutation keeps the first original index of each group.
    pub fn merge_ties(&self) -> SortedSlice {
        let mut values = Vec::with_capacity(self.len());
        let mut weights = Vec::with_capacity(self.len());
        let mut perm = Vec::with_capacity(self.len());
        for i in 0..self.len() {
            if !values.is_empty() && self.values[i] == *values.last().unwrap() {
                *weights.last_mut().unwrap() += self.weights[i];
            } else {
                values.push(self.values[i]);
                weights.push(self.weights[i]);
                perm.push(self.perm[i]);
            }
        }
        let mut cum = Vec::with_capacity(values.len());
        let mut acc = 0.0;
        for &w in &weights {
            acc += w;
            cum.push(acc);
        }
        SortedSlice {
            values,
            weights,
            cum_weights: cum,
            perm,
        }
    }
}

pub(crate) fn check_equal_mass(a: &SortedSlice, b: &SortedSlice) -> Result<()> {
    let scale = a.mass().abs().max(b.mass().abs()).max(1.0);
    if (a.mass() - b.mass()).abs() > MASS_TOL * scale {
        return Err(Error::MassMismatch {
            a: a.mass(),
            b: b.mass(),
        });
    }
    Ok(())
}

/// `|x - y|^p` with the fast paths for p = 1, 2.
#[inline]
pub fn cost_pow(x: f64, y: f64, p: f64) -> f64 {
    let d = (x - y).abs();
    if p == 2.0 {
        d * d
    } else if p == 1.0 {
        d
    } else {
        d.powf(p)
    }
}

/// Monge cost of the sorted matching between two uniform slices of equal
/// size: `sum_i (1/n) |x_(i) - y_(i)|^p`.
pub fn monge_sort_cost(a: &SortedSlice, b: &SortedSlice, p: f64) -> Result<f64> {
    if p < 1.0 {
        return Err(Error::invalid(format!("order p = {p} must be >= 1")));
    }
    if a.len() != b.len() {
        return Err(Error::SizeMismatch {
            n: a.len(),
            m: b.len(),
        });
    }
    if !a.is_uniform() || !b.is_uniform() {
        return Err(Error::NonUniformWeights);
    }
    let wa = a.weights()[0];
    let wb = b.weights()[0];
    if (wa - wb).abs() > 1e-12 * wa.abs().max(1.0) {
        return Err(Error::NonUniformWeights);
    }
    Ok(a.values()
        .iter()
        .zip(b.values())
        .map(|(&x, &y)| wa * cost_pow(x, y, p))
        .sum())
}

/// How to evaluate the quantile-difference integral behind `wasserstein_1d`.
#[derive(Debug, Clone)]
pub enum Quadrature {
    /// Plan-based evaluation: the integral computed exactly through the
    /// north-west corner plan.
    Exact,
    /// `K` i.i.d. uniform nodes from the given stream.
    Stochastic { nodes: usize, rng: RngStream },
    /// `K` midpoints of an equally spaced grid on (0, 1).
    EquallySpaced { nodes: usize },
    /// Equally spaced nodes inside `(delta, 1 - delta)`; estimates the
    /// trimmed integral `1/(1-2*delta) * int_delta^{1-delta}`.
    Trimmed { delta: f64, nodes: usize },
}

/// One-dimensional `W_p^p` between equal-mass slices.
pub fn wasserstein_1d(a: &SortedSlice, b: &SortedSlice, p: f64, quad: &Quadrature) -> Result<f64> {
    if p < 1.0 {
        return Err(Error::invalid(format!("order p = {p} must be >= 1")));
    }
    check_equal_mass(a, b)?;
    match quad {
        Quadrature::Exact => {
            let plan = northwest_corner(a, b)?;
            Ok(plan
                .entries()
                .iter()
                .map(|e| e.mass * cost_pow(a.values()[e.i], b.values()[e.j], p))
                .sum::<f64>())
        }
        Quadrature::Stochastic { nodes, rng } => {
            if *nodes == 0 {
                return Err(Error::invalid("stochastic quadrature needs K >= 1"));
            }
            let mut r = rng.rng();
            let mut acc = 0.0;
            for _ in 0..*nodes {
                let t: f64 = r.random();
                acc += cost_pow(a.quantile(t)?, b.quantile(t)?, p);
            }
            Ok(acc / *nodes as f64)
        }
        Quadrature::EquallySpaced { nodes } => {
            eval_on_grid(a, b, p, *nodes, 0.0)
        }
        Quadrature::Trimmed { delta, nodes } => {
            if !(0.0..0.5).contains(delta) {
                return Err(Error::invalid(format!("trim delta {delta} outside [0, 0.5)")));
            }
            eval_on_grid(a, b, p, *nodes, *delta)
        }
    }
}

fn eval_on_grid(a: &SortedSlice, b: &SortedSlice, p: f64, nodes: usize, delta: f64) -> Result<f64> {
    if nodes == 0 {
        return Err(Error::invalid("grid quadrature needs K >= 1"));
    }
    let span = 1.0 - 2.0 * delta;
    let mut acc = 0.0;
    for k in 0..nodes {
        let t = delta + span * (k as f64 + 0.5) / nodes as f64;
        acc += cost_pow(a.quantile(t)?, b.quantile(t)?, p);
    }
    // The node average already estimates the trimmed (rescaled) integral.
    Ok(acc / nodes as f64)
}
