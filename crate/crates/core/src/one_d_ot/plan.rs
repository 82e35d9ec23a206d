//! North-west corner plans and Kantorovich potentials on sorted slices.

use std::io::Write;

use crate::error::Result;
use crate::one_d_ot::{check_equal_mass, SortedSlice};

/// One entry of a sparse 1D plan, in sorted-index space.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlanEntry {
    pub i: usize,
    pub j: usize,
    pub mass: f64,
}

/// A monotone staircase plan between two sorted slices.
#[derive(Debug, Clone, PartialEq)]
pub struct Plan1D {
    entries: Vec<PlanEntry>,
    n: usize,
    m: usize,
}

impl Plan1D {
    pub fn entries(&self) -> &[PlanEntry] {
        &self.entries
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    /// Row sums in sorted-index space.
    pub fn row_sums(&self) -> Vec<f64> {
        let mut r = vec![0.0; self.n];
        for e in &self.entries {
            r[e.i] += e.mass;
        }
        r
    }

    /// Column sums in sorted-index space.
    pub fn col_sums(&self) -> Vec<f64> {
        let mut c = vec![0.0; self.m];
        for e in &self.entries {
            c[e.j] += e.mass;
        }
        c
    }

    /// Writes `i,j,mass` rows.
    pub fn to_csv_writer<W: Write>(&self, mut w: W) -> Result<()> {
        for e in &self.entries {
            writeln!(w, "{},{},{}", e.i, e.j, e.mass)?;
        }
        Ok(())
    }
}

/// Dual potentials in sorted-index space: `f_i + g_j <= c(x_i, y_j)` with
/// equality on the support of the optimal plan.
#[derive(Debug, Clone, PartialEq)]
pub struct DualPotentials {
    pub f: Vec<f64>,
    pub g: Vec<f64>,
}

impl DualPotentials {
    /// `sum_i f_i a_i + sum_j g_j b_j`.
    pub fn dual_value(&self, a: &SortedSlice, b: &SortedSlice) -> f64 {
        let fa: f64 = self.f.iter().zip(a.weights()).map(|(f, w)| f * w).sum();
        let gb: f64 = self.g.iter().zip(b.weights()).map(|(g, w)| g * w).sum();
        fa + gb
    }
}

/// Greedy monotone construction of the optimal 1D plan between equal-mass
/// sorted slices: repeatedly transport `min(a, b)` and advance whichever
/// side is exhausted.
pub fn northwest_corner(a: &SortedSlice, b: &SortedSlice) -> Result<Plan1D> {
    check_equal_mass(a, b)?;
    let (n, m) = (a.len(), b.len());
    let eps = 1e-15 * a.mass().max(b.mass()).max(1.0);
    let mut entries = Vec::with_capacity(n + m);
    let (mut i, mut j) = (0usize, 0usize);
    let mut ra = a.weights()[0];
    let mut rb = b.weights()[0];
    while i < n && j < m {
        let t = ra.min(rb);
        if t > 0.0 {
            entries.push(PlanEntry { i, j, mass: t });
        }
        ra -= t;
        rb -= t;
        if ra <= eps {
            i += 1;
            if i < n {
                ra = a.weights()[i];
            }
        }
        if rb <= eps {
            j += 1;
            if j < m {
                rb = b.weights()[j];
            }
        }
    }
    Ok(Plan1D { entries, n, m })
}

/// North-west corner plan together with Kantorovich potentials, following
/// the one-pass construction: starting from `f_1 = 0`, `g_1 = c(x_1, y_1)`,
/// each advance sets the new potential so the freshly entered cell is tight.
/// The residual mass in the final cell is assigned after the loop.
pub fn northwest_corner_with_potentials(
    a: &SortedSlice,
    b: &SortedSlice,
    cost: impl Fn(f64, f64) -> f64,
) -> Result<(Plan1D, DualPotentials)> {
    check_equal_mass(a, b)?;
    let (n, m) = (a.len(), b.len());
    let (xs, ys) = (a.values(), b.values());
    let mut f = vec![0.0; n];
    let mut g = vec![0.0; m];
    g[0] = cost(xs[0], ys[0]) - f[0];
    let mut entries = Vec::with_capacity(n + m);
    let (mut i, mut j) = (0usize, 0usize);
    let mut ra = a.weights()[0];
    let mut rb = b.weights()[0];
    while i < n - 1 || j < m - 1 {
        if (ra <= rb && i < n - 1) || (j == m - 1) {
            if ra > 0.0 {
                entries.push(PlanEntry { i, j, mass: ra });
            }
            rb -= ra;
            i += 1;
            f[i] = cost(xs[i], ys[j]) - g[j];
            ra = a.weights()[i];
        } else {
            if rb > 0.0 {
                entries.push(PlanEntry { i, j, mass: rb });
            }
            ra -= rb;
            j += 1;
            g[j] = cost(xs[i], ys[j]) - f[i];
            rb = b.weights()[j];
        }
    }
    let last = ra.min(rb);
    if last > 0.0 {
        entries.push(PlanEntry {
            i: n - 1,
            j: m - 1,
            mass: last,
        });
    }
    Ok((Plan1D { entries, n, m }, DualPotentials { f, g }))
}

/// Midpoint selection from the optimal dual set: the average of the
/// one-pass potentials for `(a, b)` and the role-swapped ones for `(b, a)`.
///
/// Ties in the staircase make the dual optimum non-unique and the one-pass
/// construction picks an extreme vertex; the average is still optimal and
/// feasible (the dual set is convex) and agrees with central finite
/// differences at kinks, e.g. at `a == b`.
pub fn symmetric_potentials(
    a: &SortedSlice,
    b: &SortedSlice,
    cost: impl Fn(f64, f64) -> f64 + Copy,
) -> Result<(Plan1D, DualPotentials)> {
    let (plan, fwd) = northwest_corner_with_potentials(a, b, cost)?;
    let (_, bwd) = northwest_corner_with_potentials(b, a, |y, x| cost(x, y))?;
    let f = fwd
        .f
        .iter()
        .zip(&bwd.g)
        .map(|(x, y)| 0.5 * (x + y))
        .collect();
    let g = fwd
        .g
        .iter()
        .zip(&bwd.f)
        .map(|(x, y)| 0.5 * (x + y))
        .collect();
    Ok((plan, DualPotentials { f, g }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::one_d_ot::{cost_pow, SortedSlice};

    fn weighted(values: &[f64], weights: &[f64]) -> SortedSlice {
        SortedSlice::from_weighted_values(values.to_vec(), weights.to_vec()).unwrap()
    }

    #[test]
    fn nw_hand_executed_loop() {
        let a = weighted(&[0.0, 1.0], &[0.5, 0.5]);
        let b = weighted(&[0.0, 1.0], &[0.3, 0.7]);
        let plan = northwest_corner(&a, &b).unwrap();
        let expect = vec![
            PlanEntry { i: 0, j: 0, mass: 0.3 },
            PlanEntry { i: 0, j: 1, mass: 0.2 },
            PlanEntry { i: 1, j: 1, mass: 0.5 },
        ];
        assert_eq!(plan.entries().len(), 3);
        for (e, x) in plan.entries().iter().zip(&expect) {
            assert_eq!((e.i, e.j), (x.i, x.j));
            assert!((e.mass - x.mass).abs() < 1e-12);
        }
    }

    #[test]
    fn nw_identity_is_diagonal() {
        let a = weighted(&[0.0, 1.0, 2.0], &[0.2, 0.3, 0.5]);
        let plan = northwest_corner(&a, &a).unwrap();
        for (k, e) in plan.entries().iter().enumerate() {
            assert_eq!((e.i, e.j), (k, k));
        }
    }

    #[test]
    fn nw_single_row_splits() {
        let a = weighted(&[0.0], &[1.0]);
        let b = weighted(&[0.0, 1.0, 2.0], &[0.2, 0.3, 0.5]);
        let plan = northwest_corner(&a, &b).unwrap();
        assert_eq!(plan.entries().len(), 3);
        let rows = plan.row_sums();
        assert!((rows[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn nw_plan_is_monotone_staircase() {
        let a = weighted(&[0.0, 0.5, 1.0, 4.0], &[0.1, 0.4, 0.3, 0.2]);
        let b = weighted(&[-1.0, 2.0, 3.0], &[0.25, 0.25, 0.5]);
        let plan = northwest_corner(&a, &b).unwrap();
        assert!(plan.entries().len() <= a.len() + b.len() - 1);
        for w in plan.entries().windows(2) {
            assert!(w[1].i >= w[0].i && w[1].j >= w[0].j);
        }
        for (r, w) in plan.row_sums().iter().zip(a.weights()) {
            assert!((r - w).abs() < 1e-10);
        }
        for (c, w) in plan.col_sums().iter().zip(b.weights()) {
            assert!((c - w).abs() < 1e-10);
        }
    }

    #[test]
    fn potentials_identical_slices_zero_cost() {
        let a = weighted(&[0.0, 1.0], &[0.5, 0.5]);
        let c = |x: f64, y: f64| cost_pow(x, y, 2.0);
        let (plan, pot) = northwest_corner_with_potentials(&a, &a, c).unwrap();
        let primal: f64 = plan
            .entries()
            .iter()
            .map(|e| e.mass * c(a.values()[e.i], a.values()[e.j]))
            .sum();
        assert!(primal.abs() < 1e-15);
        assert!((pot.dual_value(&a, &a) - primal).abs() < 1e-12);
    }

    #[test]
    fn potentials_primal_equals_dual_2x2() {
        let a = weighted(&[0.0, 1.0], &[0.5, 0.5]);
        let b = weighted(&[0.0, 2.0], &[0.3, 0.7]);
        let c = |x: f64, y: f64| (x - y).abs();
        let (plan, pot) = northwest_corner_with_potentials(&a, &b, c).unwrap();
        let primal: f64 = plan
            .entries()
            .iter()
            .map(|e| e.mass * c(a.values()[e.i], b.values()[e.j]))
            .sum();
        // Brute-force 2x2 LP: one free variable t = pi_00 in [max(0, .5-.7), min(.5,.3)].
        let cost_at = |t: f64| {
            t * c(0.0, 0.0) + (0.5 - t) * c(0.0, 2.0) + (0.3 - t) * c(1.0, 0.0) + (0.2 + t) * c(1.0, 2.0)
        };
        let lp = (0..=100)
            .map(|k| cost_at(0.3 * k as f64 / 100.0))
            .fold(f64::INFINITY, f64::min);
        assert!((primal - lp).abs() < 1e-9, "primal {primal} vs lp {lp}");
        assert!((primal - pot.dual_value(&a, &b)).abs() < 1e-8);
    }

    #[test]
    fn potentials_feasible_on_random_5x5() {
        use rand::Rng;
        let mut rng = crate::measures::RngStream::from_seed(11).rng();
        for _ in 0..20 {
            let mut draw = |n: usize| -> SortedSlice {
                let vals: Vec<f64> = (0..n).map(|_| rng.random_range(-3.0..3.0)).collect();
                SortedSlice::from_values(vals).unwrap()
            };
            let a = draw(5);
            let b = draw(5);
            let c = |x: f64, y: f64| cost_pow(x, y, 2.0);
            let (_, pot) = northwest_corner_with_potentials(&a, &b, c).unwrap();
            for (i, &x) in a.values().iter().enumerate() {
                for (j, &y) in b.values().iter().enumerate() {
                    assert!(
                        pot.f[i] + pot.g[j] <= c(x, y) + 1e-9,
                        "infeasible pair ({i}, {j})"
                    );
                }
            }
        }
    }

    #[test]
    fn potentials_degenerate_single_atom_sides() {
        let one = weighted(&[0.5], &[1.0]);
        let three = weighted(&[0.0, 1.0, 2.0], &[0.2, 0.3, 0.5]);
        let c = |x: f64, y: f64| cost_pow(x, y, 2.0);
        for (a, b) in [(&one, &three), (&three, &one), (&one, &one)] {
            let (plan, pot) = northwest_corner_with_potentials(a, b, c).unwrap();
            let primal: f64 = plan
                .entries()
                .iter()
                .map(|e| e.mass * c(a.values()[e.i], b.values()[e.j]))
                .sum();
            assert!((primal - pot.dual_value(a, b)).abs() < 1e-8);
            let total: f64 = plan.entries().iter().map(|e| e.mass).sum();
            assert!((total - 1.0).abs() < 1e-9);
        }
    }
}
