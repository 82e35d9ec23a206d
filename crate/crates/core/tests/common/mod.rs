//! Shared brute-force oracles, independent of the library's solver paths.
#![allow(dead_code)] // each test binary uses a subset

use slicedot_core::{DiscreteMeasure, SortedSlice};

/// Exhaustive transportation-LP oracle in 1D: every vertex of the
/// transportation polytope is a north-west-corner solution under some pair
/// of row/column orders, so the minimum over all order pairs is the LP
/// optimum. Runs its own greedy loop, independent of the library plan code.
pub fn lp_oracle_1d(xs: &[f64], alpha: &[f64], ys: &[f64], beta: &[f64], p: f64) -> f64 {
    let n = xs.len();
    let m = ys.len();
    let mut best = f64::INFINITY;
    for perm_a in permutations(n) {
        for perm_b in permutations(m) {
            let mut i = 0;
            let mut j = 0;
            let mut ra = alpha[perm_a[0]];
            let mut rb = beta[perm_b[0]];
            let mut cost = 0.0;
            while i < n && j < m {
                let t = ra.min(rb);
                cost += t * (xs[perm_a[i]] - ys[perm_b[j]]).abs().powf(p);
                ra -= t;
                rb -= t;
                if ra <= 1e-12 {
                    i += 1;
                    if i < n {
                        ra = alpha[perm_a[i]];
                    }
                }
                if rb <= 1e-12 {
                    j += 1;
                    if j < m {
                        rb = beta[perm_b[j]];
                    }
                }
            }
            best = best.min(cost);
        }
    }
    best
}

/// Exact `W_p^p` between equal-size uniform point sets in d dimensions by
/// enumerating all permutation matchings (Birkhoff vertices).
pub fn permutation_w_oracle(xs: &[Vec<f64>], ys: &[Vec<f64>], p: f64) -> f64 {
    let n = xs.len();
    assert_eq!(n, ys.len());
    let mut best = f64::INFINITY;
    for perm in permutations(n) {
        let cost: f64 = xs
            .iter()
            .zip(perm.iter().map(|&j| &ys[j]))
            .map(|(x, y)| {
                x.iter()
                    .zip(y)
                    .map(|(a, b)| (a - b).abs().powf(p))
                    .sum::<f64>()
            })
            .sum::<f64>()
            / n as f64;
        best = best.min(cost);
    }
    best
}

pub fn permutations(n: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut items: Vec<usize> = (0..n).collect();
    heap_permute(&mut items, n, &mut out);
    out
}

fn heap_permute(items: &mut Vec<usize>, k: usize, out: &mut Vec<Vec<usize>>) {
    if k <= 1 {
        out.push(items.clone());
        return;
    }
    for i in 0..k {
        heap_permute(items, k - 1, out);
        if k % 2 == 0 {
            items.swap(i, k - 1);
        } else {
            items.swap(0, k - 1);
        }
    }
}

/// A random slice with rational weights (denominator-limited), so tests
/// exercise exact tie arithmetic.
pub fn rational_slice(rng: &mut impl rand::Rng, max_atoms: usize) -> (SortedSlice, Vec<f64>, Vec<f64>) {
    let n = rng.random_range(1..=max_atoms);
    let values: Vec<f64> = (0..n).map(|_| rng.random_range(-8i32..8) as f64 * 0.5).collect();
    let numerators: Vec<u32> = (0..n).map(|_| rng.random_range(1..6u32)).collect();
    let total: u32 = numerators.iter().sum();
    let weights: Vec<f64> = numerators.iter().map(|&k| k as f64 / total as f64).collect();
    let slice = SortedSlice::from_weighted_values(values.clone(), weights.clone()).unwrap();
    (slice, values, weights)
}

pub fn random_cloud(rng: &mut impl rand::Rng, n: usize, d: usize, spread: f64) -> DiscreteMeasure {
    let pts = (0..n)
        .map(|_| (0..d).map(|_| rng.random_range(-spread..spread)).collect())
        .collect();
    DiscreteMeasure::uniform(pts).unwrap()
}
