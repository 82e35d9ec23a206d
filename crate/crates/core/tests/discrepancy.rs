//! Spherical-cap discrepancy of the direction generators on the circle,
//! evaluated by dense cap enumeration.

use slicedot_core::slicers::{qmc_mapped, sample_uniform_sphere, spiral_s2};
use slicedot_core::RngStream;

/// Sup over caps `C(w, t) = {x : <w, x> <= t}` of the gap between the
/// empirical fraction and the uniform measure, on the circle. The supremum
/// over `t` is attained at the data jumps, so scanning sorted inner
/// products per center is exact up to the center grid.
fn cap_discrepancy_s1(points: &[Vec<f64>], centers: usize) -> f64 {
    let l = points.len() as f64;
    let mut sup: f64 = 0.0;
    for c in 0..centers {
        let ang = 2.0 * std::f64::consts::PI * c as f64 / centers as f64;
        let (wx, wy) = (ang.cos(), ang.sin());
        let mut dots: Vec<f64> = points.iter().map(|p| p[0] * wx + p[1] * wy).collect();
        dots.sort_by(|a, b| a.partial_cmp(b).unwrap());
        // Uniform measure of the cap: fraction of angles with cos <= t.
        let uniform = |t: f64| 1.0 - t.clamp(-1.0, 1.0).acos() / std::f64::consts::PI;
        for (i, &t) in dots.iter().enumerate() {
            let u = uniform(t);
            let hi = (i + 1) as f64 / l;
            let lo = i as f64 / l;
            sup = sup.max((hi - u).abs()).max((lo - u).abs());
        }
    }
    sup
}

#[test]
fn qmc_beats_mc_cap_discrepancy_at_l64() {
    let l = 64;
    let qmc = qmc_mapped(2, l, 0).unwrap();
    let mc = sample_uniform_sphere(2, l, RngStream::from_seed(77)).unwrap();
    let to_pts = |ds: &slicedot_core::DirectionSet| -> Vec<Vec<f64>> {
        ds.directions().iter().map(|d| d.components().to_vec()).collect()
    };
    let d_qmc = cap_discrepancy_s1(&to_pts(&qmc), 720);
    let d_mc = cap_discrepancy_s1(&to_pts(&mc), 720);
    assert!(
        d_qmc < d_mc,
        "qmc discrepancy {d_qmc} not below mc {d_mc}"
    );
}

#[test]
fn spiral_s2_near_uniform_moment() {
    // Second-moment check on the 2-sphere: E[theta theta^T] = I/3.
    let ds = spiral_s2(500).unwrap();
    for i in 0..3 {
        for j in 0..3 {
            let mean: f64 = ds
                .directions()
                .iter()
                .map(|d| d.components()[i] * d.components()[j])
                .sum::<f64>()
                / 500.0;
            let expect = if i == j { 1.0 / 3.0 } else { 0.0 };
            assert!((mean - expect).abs() < 0.01, "entry ({i}, {j}): {mean}");
        }
    }
}
