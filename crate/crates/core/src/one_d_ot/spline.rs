//! Quantile-function representations: empirical step form and monotone
//! rational quadratic splines.

use crate::error::{Error, Result};
use crate::one_d_ot::SortedSlice;

/// A monotone C1 spline where each bin is a quotient of two quadratics.
///
/// Parametrized by knots `(t_i, x_i, x'_i)` with `t` and `x` strictly
/// increasing and `x' > 0`. Evaluation, inverse, and derivative follow the
/// three closed forms; outside `[t_1, t_M]` the spline is clamped to the
/// boundary knot values.
#[derive(Debug, Clone, PartialEq)]
pub struct RqSpline {
    t: Vec<f64>,
    x: Vec<f64>,
    dx: Vec<f64>,
}

impl RqSpline {
    /// Builds a spline from explicit knots.
    pub fn new(knots: Vec<(f64, f64, f64)>) -> Result<Self> {
        if knots.len() < 2 {
            return Err(Error::TooFewDistinctAtoms);
        }
        for w in knots.windows(2) {
            if !(w[1].0 > w[0].0) || !(w[1].1 > w[0].1) {
                return Err(Error::NonIncreasingKnots);
            }
        }
        if knots.iter().any(|k| !(k.2 > 0.0) || !k.2.is_finite()) {
            return Err(Error::NonIncreasingKnots);
        }
        Ok(RqSpline {
            t: knots.iter().map(|k| k.0).collect(),
            x: knots.iter().map(|k| k.1).collect(),
            dx: knots.iter().map(|k| k.2).collect(),
        })
    }

    pub fn knots(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        (0..self.t.len()).map(move |i| (self.t[i], self.x[i], self.dx[i]))
    }

    fn bin_of_t(&self, t: f64) -> usize {
        // Last bin i with t_i <= t, clamped into [0, M-2].
        let i = self.t.partition_point(|&ti| ti <= t);
        i.saturating_sub(1).min(self.t.len() - 2)
    }

    fn bin_params(&self, i: usize) -> (f64, f64, f64, f64) {
        let dt = self.t[i + 1] - self.t[i];
        let dxv = self.x[i + 1] - self.x[i];
        let s = dxv / dt;
        let sigma = self.dx[i + 1] + self.dx[i] - 2.0 * s;
        (dt, dxv, s, sigma)
    }

    /// Spline value at `t` (clamped to the knot range).
    pub fn eval(&self, t: f64) -> f64 {
        if t <= self.t[0] {
            return self.x[0];
        }
        if t >= *self.t.last().unwrap() {
            return *self.x.last().unwrap();
        }
        let i = self.bin_of_t(t);
        let (dt, dxv, s, sigma) = self.bin_params(i);
        let xi = (t - self.t[i]) / dt;
        self.x[i] + dxv * (s * xi * xi + self.dx[i] * xi * (1.0 - xi)) / (s + sigma * xi * (1.0 - xi))
    }

    /// Derivative dx/dt at `t`; zero outside the knot range, where the
    /// spline is clamped flat.
    pub fn derivative(&self, t: f64) -> f64 {
        if t < self.t[0] || t > *self.t.last().unwrap() {
            return 0.0;
        }
        let i = self.bin_of_t(t);
        let (dt, _, s, sigma) = self.bin_params(i);
        let xi = (t - self.t[i]) / dt;
        let num = s * s
            * (self.dx[i + 1] * xi * xi
                + 2.0 * s * xi * (1.0 - xi)
                + self.dx[i] * (1.0 - xi) * (1.0 - xi));
        let den = s + sigma * xi * (1.0 - xi);
        num / (den * den)
    }

    /// Inverse value t with `eval(t) = x` (clamped to the value range).
    pub fn inverse(&self, x: f64) -> f64 {
        if x <= self.x[0] {
            return self.t[0];
        }
        if x >= *self.x.last().unwrap() {
            return *self.t.last().unwrap();
        }
        let i = self
            .x
            .partition_point(|&xi| xi <= x)
            .saturating_sub(1)
            .min(self.x.len() - 2);
        let (dt, dxv, s, sigma) = self.bin_params(i);
        let zeta = (x - self.x[i]) / dxv;
        let a = (s - self.dx[i]) + zeta * sigma;
        let b = self.dx[i] - zeta * sigma;
        let c = -s * zeta;
        let disc = (b * b - 4.0 * a * c).max(0.0);
        self.t[i] + dt * 2.0 * c / (-b - disc.sqrt())
    }
}

/// A quantile function, either the empirical step form or a fitted spline.
#[derive(Debug, Clone)]
pub enum QuantileFn {
    Step(SortedSlice),
    Spline(RqSpline),
}

impl QuantileFn {
    /// Quantile at level `t` in [0, 1].
    pub fn quantile(&self, t: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&t) {
            return Err(Error::invalid(format!("quantile level {t} outside [0, 1]")));
        }
        match self {
            QuantileFn::Step(s) => s.quantile(t),
            QuantileFn::Spline(s) => Ok(s.eval(t)),
        }
    }
}

/// Fits a monotone rational quadratic spline to the empirical quantile
/// function of a slice (mass-normalized levels).
///
/// Knot `i` sits at `(sum_{j<i} w_(j), x_(i))`; interior derivatives come
/// from the local quadratic through the three neighboring knots, boundary
/// derivatives are clamped to the adjacent secant slope. Atoms with equal
/// values are merged first.
pub fn spline_fit(slice: &SortedSlice) -> Result<RqSpline> {
    let merged = slice.merge_ties();
    if merged.len() < 2 {
        return Err(Error::TooFewDistinctAtoms);
    }
    let mass = merged.mass();
    let n = merged.len();
    let mut t = Vec::with_capacity(n);
    let mut acc = 0.0;
    for i in 0..n {
        t.push(acc / mass);
        acc += merged.weights()[i];
    }
    let x = merged.values().to_vec();
    let s: Vec<f64> = (0..n - 1).map(|i| (x[i + 1] - x[i]) / (t[i + 1] - t[i])).collect();
    let mut dx = vec![0.0; n];
    dx[0] = s[0];
    dx[n - 1] = s[n - 2];
    for i in 1..n - 1 {
        dx[i] = (s[i - 1] * (t[i + 1] - t[i]) + s[i] * (t[i] - t[i - 1])) / (t[i + 1] - t[i - 1]);
    }
    RqSpline::new(t.into_iter().zip(x).zip(dx).map(|((a, b), c)| (a, b, c)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_segment() {
        let s = RqSpline::new(vec![(0.0, 0.0, 1.0), (1.0, 1.0, 1.0)]).unwrap();
        assert!((s.eval(0.5) - 0.5).abs() < 1e-15);
        assert!((s.derivative(0.25) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn inverse_round_trip_on_grid() {
        let slice =
            SortedSlice::from_values(vec![-2.0, -0.5, 0.1, 0.4, 1.3, 2.0, 3.5, 5.0]).unwrap();
        let sp = spline_fit(&slice).unwrap();
        let (lo, hi) = (sp.eval(0.0), sp.eval(1.0));
        for k in 0..=200 {
            let x = lo + (hi - lo) * k as f64 / 200.0;
            let t = sp.inverse(x);
            assert!((sp.eval(t) - x).abs() < 1e-10, "x = {x}");
        }
    }

    #[test]
    fn derivative_matches_finite_difference() {
        let slice = SortedSlice::from_values(vec![0.0, 0.3, 1.1, 1.15, 2.7, 4.0]).unwrap();
        let sp = spline_fit(&slice).unwrap();
        let h = 1e-6;
        for k in 1..100 {
            let t = k as f64 / 100.0 * 0.8 + 0.05;
            let fd = (sp.eval(t + h) - sp.eval(t - h)) / (2.0 * h);
            let an = sp.derivative(t);
            assert!(
                (fd - an).abs() <= 1e-6 * an.abs().max(1.0),
                "t = {t}: fd {fd} vs {an}"
            );
        }
    }

    #[test]
    fn monotone_on_dense_grid() {
        let slice = SortedSlice::from_weighted_values(
            vec![0.0, 0.1, 5.0, 5.5, 9.0],
            vec![0.3, 0.1, 0.25, 0.05, 0.3],
        )
        .unwrap();
        let sp = spline_fit(&slice).unwrap();
        let mut prev = f64::NEG_INFINITY;
        for k in 0..=500 {
            let v = sp.eval(k as f64 / 500.0);
            assert!(v >= prev - 1e-12);
            prev = v;
        }
    }

    #[test]
    fn ties_merged_before_fit() {
        let slice = SortedSlice::from_values(vec![1.0, 1.0, 2.0]).unwrap();
        let sp = spline_fit(&slice).unwrap();
        assert_eq!(sp.knots().count(), 2);
    }

    #[test]
    fn single_distinct_value_rejected() {
        let slice = SortedSlice::from_values(vec![1.0, 1.0]).unwrap();
        assert!(matches!(spline_fit(&slice), Err(Error::TooFewDistinctAtoms)));
    }

    #[test]
    fn quantile_fn_wraps_both_representations() {
        let slice = SortedSlice::from_weighted_values(vec![0.0, 1.0], vec![0.3, 0.7]).unwrap();
        let step = QuantileFn::Step(slice.clone());
        assert_eq!(step.quantile(0.3).unwrap(), 0.0);
        let spl = QuantileFn::Spline(spline_fit(&slice).unwrap());
        let v = spl.quantile(0.15).unwrap();
        assert!((0.0..=1.0).contains(&v));
        assert!(spl.quantile(1.5).is_err());
    }

    #[test]
    fn decreasing_knots_rejected() {
        assert!(RqSpline::new(vec![(0.0, 1.0, 1.0), (1.0, 0.5, 1.0)]).is_err());
    }
}
