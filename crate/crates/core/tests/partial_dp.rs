//! Dynamic-programming oracles for the partial solvers at larger sizes.
//!
//! Optimal partial matchings with the costs used here never cross on the
//! line, so a DP over monotone matchings is exact and independent of the
//! solvers' own induction/scan logic.

use rand::Rng;
use slicedot_core::extensions::{opot_1d_assign, pot_1d, uot_1d_fw, UotCost};
use slicedot_core::{RngStream, SortedSlice};

/// Exact k-pair partial matching cost with `|x - y|` by DP over monotone
/// matchings: O(n m k).
fn pot_dp(xs: &[f64], ys: &[f64], k: usize) -> f64 {
    let (n, m) = (xs.len(), ys.len());
    let inf = f64::INFINITY;
    // dp[j][c]: best cost using x-prefix i, y-prefix j, c matched pairs.
    let mut dp = vec![vec![inf; k + 1]; m + 1];
    for row in dp.iter_mut() {
        row[0] = 0.0;
    }
    for i in 1..=n {
        let mut next = vec![vec![inf; k + 1]; m + 1];
        for row in next.iter_mut() {
            row[0] = 0.0;
        }
        for j in 1..=m {
            for c in 1..=k.min(i).min(j) {
                let skip_x = dp[j][c];
                let skip_y = next[j - 1][c];
                let pair = dp[j - 1][c - 1] + (xs[i - 1] - ys[j - 1]).abs();
                next[j][c] = skip_x.min(skip_y).min(pair);
            }
        }
        dp = next;
    }
    dp[m][k]
}

/// Exact one-sided assignment cost with squared distance by DP over
/// monotone injective maps: O(n m).
fn opot_dp(xs: &[f64], ys: &[f64]) -> f64 {
    let (n, m) = (xs.len(), ys.len());
    let inf = f64::INFINITY;
    let mut dp = vec![vec![inf; m + 1]; n + 1];
    for j in 0..=m {
        dp[0][j] = 0.0;
    }
    for i in 1..=n {
        for j in i..=m {
            let d = xs[i - 1] - ys[j - 1];
            dp[i][j] = dp[i][j - 1].min(dp[i - 1][j - 1] + d * d);
        }
    }
    dp[n][m]
}

#[test]
fn pot_matches_dp_oracle_at_larger_sizes() {
    let mut rng = RngStream::from_seed(601).rng();
    for trial in 0..60 {
        let n = rng.random_range(2..=20usize);
        let m = rng.random_range(2..=20usize);
        let xs: Vec<f64> = (0..n).map(|_| rng.random_range(-10.0..10.0)).collect();
        let ys: Vec<f64> = (0..m).map(|_| rng.random_range(-10.0..10.0) + 1e-5).collect();
        let a = SortedSlice::from_weighted_values(xs, vec![1.0; n]).unwrap();
        let b = SortedSlice::from_weighted_values(ys, vec![1.0; m]).unwrap();
        for k in [1, n.min(m) / 2, n.min(m)] {
            if k == 0 {
                continue;
            }
            let ours = pot_1d(&a, &b, k as f64).unwrap().cost;
            let oracle = pot_dp(a.values(), b.values(), k);
            assert!(
                (ours - oracle).abs() <= 1e-9,
                "trial {trial} n {n} m {m} k {k}: {ours} vs {oracle}"
            );
        }
    }
}

#[test]
fn pot_fractional_mass_interpolates_dp_levels() {
    let mut rng = RngStream::from_seed(602).rng();
    for _ in 0..20 {
        let n = rng.random_range(3..=10usize);
        let xs: Vec<f64> = (0..n).map(|_| rng.random_range(-5.0..5.0)).collect();
        let ys: Vec<f64> = (0..n).map(|_| rng.random_range(-5.0..5.0) + 1e-5).collect();
        let a = SortedSlice::from_weighted_values(xs, vec![1.0; n]).unwrap();
        let b = SortedSlice::from_weighted_values(ys, vec![1.0; n]).unwrap();
        let k = rng.random_range(1..n);
        let frac: f64 = rng.random_range(0.05..0.95);
        let s = k as f64 + frac;
        let ours = pot_1d(&a, &b, s).unwrap().cost;
        let lo = pot_dp(a.values(), b.values(), k);
        let hi = pot_dp(a.values(), b.values(), k + 1);
        let expect = lo * (1.0 - frac) + hi * frac;
        assert!((ours - expect).abs() <= 1e-9, "{ours} vs {expect}");
    }
}

#[test]
fn opot_matches_dp_oracle_at_larger_sizes() {
    let mut rng = RngStream::from_seed(603).rng();
    for trial in 0..200 {
        let n = rng.random_range(1..=30usize);
        let m = rng.random_range(n..=40usize);
        let mut xs: Vec<f64> = (0..n).map(|_| rng.random_range(-10.0..10.0)).collect();
        let mut ys: Vec<f64> = (0..m).map(|_| rng.random_range(-10.0..10.0)).collect();
        xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        ys.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let ours = opot_1d_assign(&xs, &ys).unwrap().cost;
        let oracle = opot_dp(&xs, &ys);
        assert!(
            (ours - oracle).abs() <= 1e-9,
            "trial {trial} n {n} m {m}: {ours} vs {oracle}"
        );
    }
}

#[test]
fn opot_clustered_conflicts_match_dp() {
    // Clustered sources all fighting for the same targets exercise the
    // shift-left/push-right cases heavily.
    let mut rng = RngStream::from_seed(604).rng();
    for trial in 0..100 {
        let n = rng.random_range(3..=15usize);
        let m = rng.random_range(n..=n + 4);
        let center: f64 = rng.random_range(-3.0..3.0);
        let mut xs: Vec<f64> = (0..n)
            .map(|_| center + rng.random_range(-0.2..0.2))
            .collect();
        let mut ys: Vec<f64> = (0..m).map(|_| rng.random_range(-6.0..6.0)).collect();
        xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        ys.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let ours = opot_1d_assign(&xs, &ys).unwrap().cost;
        let oracle = opot_dp(&xs, &ys);
        assert!(
            (ours - oracle).abs() <= 1e-9,
            "trial {trial}: {ours} vs {oracle} (xs {xs:?} ys {ys:?})"
        );
    }
}

#[test]
fn uot_two_dirac_analytic_value() {
    // Unit KL strengths, cost |x - y|, a = alpha * delta_0, b = beta *
    // delta_t: the optimal plan carries m* = sqrt(alpha beta) e^{-|t|/2}
    // at (0, t), giving value alpha + beta - 2 m*.
    let cases = [
        (1.0, 1.0, 0.7),
        (2.0, 1.0, 0.0),
        (0.5, 2.5, 1.3),
        (3.0, 0.25, 2.0),
    ];
    for (alpha, beta, t) in cases {
        let a = SortedSlice::from_weighted_values(vec![0.0], vec![alpha]).unwrap();
        let b = SortedSlice::from_weighted_values(vec![t], vec![beta]).unwrap();
        let res = uot_1d_fw(&a, &b, 1.0, 1.0, UotCost::Abs, 300).unwrap();
        let expect = alpha + beta - 2.0 * (alpha * beta).sqrt() * (-t.abs() / 2.0).exp();
        assert!(
            (res.dual_value - expect).abs() <= 1e-3,
            "alpha {alpha} beta {beta} t {t}: {} vs {expect}",
            res.dual_value
        );
    }
}
