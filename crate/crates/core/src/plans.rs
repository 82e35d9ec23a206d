//! Transport plans in the original space, lifted from 1D plans.
//!
//! Atoms that project to exactly the same value form a tie group; the 1D
//! plan mass between two projected values is split among the group members
//! proportionally to `alpha_i beta_j / (alpha_i^theta beta_j^theta)`.

use std::collections::BTreeMap;
use std::io::Write;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::measures::{project, DiscreteMeasure, Direction};
use crate::one_d_ot::{cost_pow, northwest_corner};
use crate::slicers::{DirectionSet, Projector};
use crate::sw_core::check_equal_measure_mass;

/// A sparse plan between the original atoms of two measures.
#[derive(Debug, Clone, PartialEq)]
pub struct PlanD {
    entries: Vec<(usize, usize, f64)>,
    n: usize,
    m: usize,
}

impl PlanD {
    pub fn entries(&self) -> &[(usize, usize, f64)] {
        &self.entries
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn row_sums(&self) -> Vec<f64> {
        let mut r = vec![0.0; self.n];
        for &(i, _, mass) in &self.entries {
            r[i] += mass;
        }
        r
    }

    pub fn col_sums(&self) -> Vec<f64> {
        let mut c = vec![0.0; self.m];
        for &(_, j, mass) in &self.entries {
            c[j] += mass;
        }
        c
    }

    /// Transport cost `sum_ij pi_ij ||x_i - y_j||_p^p` (coordinatewise
    /// p-powers, so p = 2 is squared Euclidean).
    pub fn cost(&self, mu: &DiscreteMeasure, nu: &DiscreteMeasure, p: f64) -> f64 {
        self.entries
            .iter()
            .map(|&(i, j, mass)| {
                let c: f64 = mu.supports()[i]
                    .iter()
                    .zip(&nu.supports()[j])
                    .map(|(a, b)| cost_pow(*a, *b, p))
                    .sum();
                mass * c
            })
            .sum()
    }

    pub fn to_csv_writer<W: Write>(&self, mut w: W) -> Result<()> {
        for &(i, j, mass) in &self.entries {
            writeln!(w, "{i},{j},{mass}")?;
        }
        Ok(())
    }
}

/// Lifts the optimal 1D plan along `theta` back to the original atoms.
pub fn lift_plan(
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    theta: &Direction,
    proj: &Projector,
) -> Result<PlanD> {
    check_equal_measure_mass(mu, nu)?;
    let a = project(mu, proj, theta)?;
    let b = project(nu, proj, theta)?;
    // Tie groups: runs of equal projected value in sorted order.
    let groups_a = value_groups(a.values());
    let groups_b = value_groups(b.values());
    let merged_a = a.merge_ties();
    let merged_b = b.merge_ties();
    let plan_1d = northwest_corner(&merged_a, &merged_b)?;
    let mut entries = Vec::new();
    for e in plan_1d.entries() {
        let (ga, gb) = (&groups_a[e.i], &groups_b[e.j]);
        let group_mass_a = merged_a.weights()[e.i];
        let group_mass_b = merged_b.weights()[e.j];
        for &si in ga {
            let oi = a.perm()[si];
            let wa = a.weights()[si];
            for &sj in gb {
                let oj = b.perm()[sj];
                let wb = b.weights()[sj];
                let mass = e.mass * wa * wb / (group_mass_a * group_mass_b);
                if mass > 0.0 {
                    entries.push((oi, oj, mass));
                }
            }
        }
    }
    entries.sort_by_key(|&(i, j, _)| (i, j));
    Ok(PlanD {
        entries,
        n: mu.len(),
        m: nu.len(),
    })
}

/// Sorted-index runs of exactly equal values.
fn value_groups(values: &[f64]) -> Vec<Vec<usize>> {
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for (i, &v) in values.iter().enumerate() {
        if i > 0 && v == values[i - 1] {
            groups.last_mut().unwrap().push(i);
        } else {
            groups.push(vec![i]);
        }
    }
    groups
}

/// Sliced Wasserstein generalized geodesic: the cost of the lifted plan for
/// one direction, together with the plan.
pub fn swgg(
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    theta: &Direction,
    p: f64,
    proj: &Projector,
) -> Result<(f64, PlanD)> {
    let plan = lift_plan(mu, nu, theta, proj)?;
    let cost = plan.cost(mu, nu, p);
    Ok((cost, plan))
}

fn average_plans(plans: Vec<(f64, PlanD)>, weights: &[f64], n: usize, m: usize) -> (f64, PlanD) {
    let wsum: f64 = weights.iter().sum();
    let mut cost = 0.0;
    let mut acc: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    for ((c, plan), &w) in plans.into_iter().zip(weights) {
        cost += w * c / wsum;
        for (i, j, mass) in plan.entries {
            *acc.entry((i, j)).or_insert(0.0) += w * mass / wsum;
        }
    }
    let entries = acc.into_iter().map(|((i, j), mass)| (i, j, mass)).collect();
    (cost, PlanD { entries, n, m })
}

/// Projected Wasserstein: the mean of SWGG costs over the direction set,
/// with the direction-averaged lifted plan.
pub fn projected_wasserstein(
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    p: f64,
    ds: &DirectionSet,
    proj: &Projector,
) -> Result<(f64, PlanD)> {
    let plans: Vec<(f64, PlanD)> = ds
        .directions()
        .par_iter()
        .map(|theta| swgg(mu, nu, theta, p, proj))
        .collect::<Result<_>>()?;
    let weights = vec![1.0; plans.len()];
    Ok(average_plans(plans, &weights, mu.len(), nu.len()))
}

/// Random-search min-SWGG over a candidate direction set; ties break toward
/// the lowest candidate index.
pub fn min_swgg_search(
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    p: f64,
    candidates: &DirectionSet,
) -> Result<(Direction, f64, PlanD)> {
    min_swgg_search_with(mu, nu, p, candidates, &Projector::Linear)
}

pub fn min_swgg_search_with(
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    p: f64,
    candidates: &DirectionSet,
    proj: &Projector,
) -> Result<(Direction, f64, PlanD)> {
    if candidates.is_empty() {
        return Err(Error::EmptyInput("min-SWGG needs at least one candidate"));
    }
    let costs: Vec<(f64, PlanD)> = candidates
        .directions()
        .par_iter()
        .map(|theta| swgg(mu, nu, theta, p, proj))
        .collect::<Result<_>>()?;
    let mut best = 0;
    for (l, (c, _)) in costs.iter().enumerate() {
        if *c < costs[best].0 {
            best = l;
        }
    }
    let (cost, plan) = costs.into_iter().nth(best).unwrap();
    Ok((candidates.directions()[best].clone(), cost, plan))
}

/// Expected sliced transport: a softmin-weighted average of SWGG costs and
/// plans with weights `exp(-tau * cost)` (max-subtracted). `tau = 0`
/// reduces to projected Wasserstein.
pub fn expected_sliced_transport(
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    p: f64,
    tau: f64,
    ds: &DirectionSet,
    proj: &Projector,
) -> Result<(f64, PlanD)> {
    if tau < 0.0 {
        return Err(Error::invalid(format!("tau {tau} must be >= 0")));
    }
    let plans: Vec<(f64, PlanD)> = ds
        .directions()
        .par_iter()
        .map(|theta| swgg(mu, nu, theta, p, proj))
        .collect::<Result<_>>()?;
    let min_cost = plans.iter().map(|(c, _)| *c).fold(f64::INFINITY, f64::min);
    let weights: Vec<f64> = plans.iter().map(|(c, _)| (-tau * (c - min_cost)).exp()).collect();
    Ok(average_plans(plans, &weights, mu.len(), nu.len()))
}
