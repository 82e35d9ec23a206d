//! Sliced Wasserstein estimators: plain Monte Carlo, control variates, the
//! fast closed form, projected gradient ascent for Max-SW, energy-based
//! importance sampling, smoothed slices, and streaming sketches.

use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::measures::{norm2, project, DiscreteMeasure, Direction, RngStream};
use crate::one_d_ot::{northwest_corner, wasserstein_1d, KllSketch, Quadrature, SortedSlice};
use crate::slicers::{sample_uniform_sphere, DirectionSet, Projector};

/// An estimate of `SW_p^p` together with the root `SW_p`.
#[derive(Debug, Clone, PartialEq)]
pub struct SwEstimate {
    /// Estimate of `SW_p^p` (per-slice powers averaged before the root).
    pub value_p: f64,
    /// `value_p^(1/p)`.
    pub value: f64,
    /// Per-direction `W_p^p` terms, in direction order.
    pub per_slice: Option<Vec<f64>>,
    /// Sample standard deviation of the per-slice terms over `sqrt(L)`.
    pub std_error: Option<f64>,
}

impl SwEstimate {
    pub(crate) fn from_per_slice(per_slice: Vec<f64>, p: f64) -> SwEstimate {
        let value_p = (per_slice.iter().sum::<f64>() / per_slice.len() as f64).max(0.0);
        let std_error = std_error_of(&per_slice);
        SwEstimate {
            value_p,
            value: value_p.powf(1.0 / p),
            per_slice: Some(per_slice),
            std_error,
        }
    }

    pub(crate) fn from_value_p(value_p: f64, p: f64) -> SwEstimate {
        let value_p = value_p.max(0.0);
        SwEstimate {
            value_p,
            value: value_p.powf(1.0 / p),
            per_slice: None,
            std_error: None,
        }
    }
}

fn std_error_of(xs: &[f64]) -> Option<f64> {
    let n = xs.len();
    if n < 2 {
        return None;
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1) as f64;
    Some((var / n as f64).sqrt())
}

/// The energy that reweights directions in EBSW.
#[derive(Debug, Clone, PartialEq)]
pub enum EnergySpec {
    Exponential,
    ShiftedPolynomial { a: f64, eps: f64 },
    Constant,
}

impl EnergySpec {
    fn validate(&self) -> Result<()> {
        if let EnergySpec::ShiftedPolynomial { a, eps } = self {
            if !(*a > 0.0) || !(*eps > 0.0) {
                return Err(Error::invalid(
                    "shifted polynomial energy needs a > 0 and eps > 0",
                ));
            }
        }
        Ok(())
    }
}

pub(crate) fn check_equal_measure_mass(a: &DiscreteMeasure, b: &DiscreteMeasure) -> Result<()> {
    let scale = a.mass().abs().max(b.mass().abs()).max(1.0);
    if (a.mass() - b.mass()).abs() > 1e-9 * scale {
        return Err(Error::MassMismatch {
            a: a.mass(),
            b: b.mass(),
        });
    }
    Ok(())
}

/// Per-direction exact `W_p^p` between the projections of `mu` and `nu`,
/// in direction order. Slices run in parallel, the reduction is ordered.
pub(crate) fn per_slice_costs(
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    p: f64,
    ds: &DirectionSet,
    proj: &Projector,
) -> Result<Vec<f64>> {
    ds.directions()
        .par_iter()
        .map(|theta| {
            let a = project(mu, proj, theta)?;
            let b = project(nu, proj, theta)?;
            wasserstein_1d(&a, &b, p, &Quadrature::Exact)
        })
        .collect()
}

/// Plain Monte Carlo estimate `(1/L) sum_l W_p^p(theta_l)`.
pub fn sw_mc(
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    p: f64,
    ds: &DirectionSet,
    proj: &Projector,
) -> Result<SwEstimate> {
    check_equal_measure_mass(mu, nu)?;
    let per_slice = per_slice_costs(mu, nu, p, ds, proj)?;
    Ok(SwEstimate::from_per_slice(per_slice, p))
}

/// Which Gaussian control variate to subtract.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CvVariant {
    /// `C(theta) = (m_mu(theta) - m_nu(theta))^2`.
    Lower,
    /// Adds both projected variances to the squared mean gap.
    Upper,
}

/// Control-variate estimate of `SW_2^2` with linear projections.
///
/// The control variate is the 1D Gaussian-approximation cost with its
/// closed-form sphere average `B`; the regression coefficient is the
/// plug-in `Cov(f, C) / Var(C)` computed from the same slice batch, guarded
/// to zero when `Var(C)` vanishes.
pub fn sw_cv(
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    ds: &DirectionSet,
    variant: CvVariant,
) -> Result<SwEstimate> {
    check_equal_measure_mass(mu, nu)?;
    let mu = mu.normalized()?;
    let nu = nu.normalized()?;
    let d = mu.dim() as f64;
    let mean_mu = mu.mean();
    let mean_nu = nu.mean();
    let mean_gap_sq: f64 = mean_mu
        .iter()
        .zip(&mean_nu)
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    let baseline = match variant {
        CvVariant::Lower => mean_gap_sq / d,
        CvVariant::Upper => {
            (mean_gap_sq) / d + (mu.centered_second_moment() + nu.centered_second_moment()) / d
        }
    };
    let pairs: Vec<(f64, f64)> = ds
        .directions()
        .par_iter()
        .map(|theta| {
            let a = project(&mu, &Projector::Linear, theta)?;
            let b = project(&nu, &Projector::Linear, theta)?;
            let w = wasserstein_1d(&a, &b, 2.0, &Quadrature::Exact)?;
            let (ma, va) = slice_mean_var(&a);
            let (mb, vb) = slice_mean_var(&b);
            let c = match variant {
                CvVariant::Lower => (ma - mb) * (ma - mb),
                CvVariant::Upper => (ma - mb) * (ma - mb) + va + vb,
            };
            Ok((w, c))
        })
        .collect::<Result<_>>()?;
    let l = pairs.len() as f64;
    let mean_f = pairs.iter().map(|p| p.0).sum::<f64>() / l;
    let mean_c = pairs.iter().map(|p| p.1).sum::<f64>() / l;
    let var_c = pairs
        .iter()
        .map(|p| (p.1 - mean_c) * (p.1 - mean_c))
        .sum::<f64>()
        / l;
    let cov = pairs
        .iter()
        .map(|p| (p.0 - mean_f) * (p.1 - mean_c))
        .sum::<f64>()
        / l;
    let gamma = if var_c < 1e-18 { 0.0 } else { cov / var_c };
    let controlled: Vec<f64> = pairs
        .iter()
        .map(|(f, c)| f - gamma * (c - baseline))
        .collect();
    Ok(SwEstimate::from_per_slice(controlled, 2.0))
}

fn slice_mean_var(s: &SortedSlice) -> (f64, f64) {
    let mass = s.mass();
    let mean: f64 = s
        .values()
        .iter()
        .zip(s.weights())
        .map(|(v, w)| v * w)
        .sum::<f64>()
        / mass;
    let var: f64 = s
        .values()
        .iter()
        .zip(s.weights())
        .map(|(v, w)| w * (v - mean) * (v - mean))
        .sum::<f64>()
        / mass;
    (mean, var)
}

/// Deterministic moment-based approximation of `SW_2^2`:
/// `(1/d) ||mean gap||^2 + (1/d) (sqrt(m2(mu)) - sqrt(m2(nu)))^2`
/// with centered second moments. Returns the squared value.
pub fn sw_fast(mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> Result<f64> {
    if mu.dim() != nu.dim() {
        return Err(Error::DimensionMismatch {
            index: 0,
            expected: mu.dim(),
            got: nu.dim(),
        });
    }
    let mu = mu.normalized()?;
    let nu = nu.normalized()?;
    let d = mu.dim() as f64;
    let gap: f64 = mu
        .mean()
        .iter()
        .zip(&nu.mean())
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    let sdiff = mu.centered_second_moment().sqrt() - nu.centered_second_moment().sqrt();
    Ok(gap / d + sdiff * sdiff / d)
}

/// Max sliced Wasserstein by multi-restart projected gradient ascent with a
/// fixed step. Returns the best direction and its `W_p^p`.
pub fn max_sw_pga(
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    p: f64,
    steps: usize,
    step_size: f64,
    restarts: usize,
    rng: RngStream,
) -> Result<(Direction, f64)> {
    if steps == 0 || restarts == 0 {
        return Err(Error::invalid("max-SW needs steps >= 1 and restarts >= 1"));
    }
    check_equal_measure_mass(mu, nu)?;
    let d = mu.dim();
    let objective = |theta: &Direction| -> Result<f64> {
        let a = project(mu, &Projector::Linear, theta)?;
        let b = project(nu, &Projector::Linear, theta)?;
        wasserstein_1d(&a, &b, p, &Quadrature::Exact)
    };
    let mut best: Option<(Direction, f64)> = None;
    for r in 0..restarts {
        let init = sample_uniform_sphere(d, 1, rng.substream(r as u64))?;
        let mut theta = init.directions()[0].clone();
        let mut obj = objective(&theta)?;
        if best.as_ref().is_none_or(|(_, v)| obj > *v) {
            best = Some((theta.clone(), obj));
        }
        for _ in 0..steps {
            let grad = slice_cost_direction_grad(mu, nu, p, &theta)?;
            let raw: Vec<f64> = theta
                .components()
                .iter()
                .zip(&grad)
                .map(|(t, g)| t + step_size * g)
                .collect();
            if norm2(&raw) < 1e-12 {
                break;
            }
            theta = Direction::normalized(raw)?;
            obj = objective(&theta)?;
            if best.as_ref().is_none_or(|(_, v)| obj > *v) {
                best = Some((theta.clone(), obj));
            }
        }
    }
    Ok(best.unwrap())
}

/// Gradient of `theta -> W_p^p(theta # mu, theta # nu)` at the optimal 1D
/// plan: `p sum_ij pi_ij |<theta, xi - yj>|^(p-1) sign(<theta, xi - yj>)
/// (xi - yj)`.
fn slice_cost_direction_grad(
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    p: f64,
    theta: &Direction,
) -> Result<Vec<f64>> {
    let a = project(mu, &Projector::Linear, theta)?;
    let b = project(nu, &Projector::Linear, theta)?;
    let plan = northwest_corner(&a, &b)?;
    let d = mu.dim();
    let mut grad = vec![0.0; d];
    for e in plan.entries() {
        let oi = a.perm()[e.i];
        let oj = b.perm()[e.j];
        let x = &mu.supports()[oi];
        let y = &nu.supports()[oj];
        let t = a.values()[e.i] - b.values()[e.j];
        if t == 0.0 {
            continue;
        }
        let coef = p * e.mass * t.abs().powf(p - 1.0) * t.signum();
        for k in 0..d {
            grad[k] += coef * (x[k] - y[k]);
        }
    }
    Ok(grad)
}

/// Energy-based SW by self-normalized importance sampling over a uniform
/// proposal: weights are proportional to the energy of each slice cost,
/// with max subtraction for the exponential energy.
///
/// The exponential energy carries no temperature, so the estimate depends
/// on the scale of the ground cost.
pub fn ebsw_is(
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    p: f64,
    ds: &DirectionSet,
    energy: &EnergySpec,
) -> Result<SwEstimate> {
    energy.validate()?;
    check_equal_measure_mass(mu, nu)?;
    let costs = per_slice_costs(mu, nu, p, ds, &Projector::Linear)?;
    let weights: Vec<f64> = match energy {
        EnergySpec::Constant => vec![1.0; costs.len()],
        EnergySpec::Exponential => {
            let max = costs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            costs.iter().map(|c| (c - max).exp()).collect()
        }
        EnergySpec::ShiftedPolynomial { a, eps } => {
            costs.iter().map(|c| c.powf(*a) + eps).collect()
        }
    };
    let wsum: f64 = weights.iter().sum();
    let value_p = costs.iter().zip(&weights).map(|(c, w)| c * w).sum::<f64>() / wsum;
    let mut est = SwEstimate::from_value_p(value_p, p);
    est.per_slice = Some(costs);
    Ok(est)
}

/// Smooth SW: per direction, each projected atom gets an independent
/// `N(0, sigma^2)` perturbation drawn from a substream of `rng` keyed by the
/// direction index. Equal atom counts compare the noisy slices exactly;
/// unequal counts are resampled on a `max(n, m)`-point quantile grid.
pub fn smooth_sw(
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    p: f64,
    sigma: f64,
    ds: &DirectionSet,
    rng: RngStream,
) -> Result<SwEstimate> {
    if sigma < 0.0 {
        return Err(Error::invalid(format!("sigma {sigma} must be >= 0")));
    }
    check_equal_measure_mass(mu, nu)?;
    if sigma == 0.0 {
        return sw_mc(mu, nu, p, ds, &Projector::Linear);
    }
    let per_slice: Vec<f64> = ds
        .directions()
        .par_iter()
        .enumerate()
        .map(|(l, theta)| {
            let mut r = rng.substream(l as u64).rng();
            let normal = Normal::new(0.0, sigma).map_err(|e| Error::invalid(e.to_string()))?;
            let mut noisy = |m: &DiscreteMeasure| -> Result<SortedSlice> {
                let mut values = Vec::with_capacity(m.len());
                let mut weights = Vec::with_capacity(m.len());
                let mut perm = Vec::with_capacity(m.len());
                for (i, (x, &w)) in m.supports().iter().zip(m.weights()).enumerate() {
                    let eps: f64 = normal.sample(&mut r);
                    if w == 0.0 {
                        continue;
                    }
                    values.push(theta.dot(x) + eps);
                    weights.push(w);
                    perm.push(i);
                }
                SortedSlice::from_unsorted(values, weights, perm)
            };
            let a = noisy(mu)?;
            let b = noisy(nu)?;
            if a.len() == b.len() {
                wasserstein_1d(&a, &b, p, &Quadrature::Exact)
            } else {
                let nodes = a.len().max(b.len());
                wasserstein_1d(&a, &b, p, &Quadrature::EquallySpaced { nodes })
            }
        })
        .collect::<Result<_>>()?;
    Ok(SwEstimate::from_per_slice(per_slice, p))
}

/// Per-direction KLL sketches of a stream of points, bound to the
/// direction set that produced them.
#[derive(Debug, Clone)]
pub struct SwStream {
    ds: DirectionSet,
    proj: Projector,
    sketches: Vec<KllSketch>,
    items: u64,
}

impl SwStream {
    pub fn new(ds: DirectionSet, proj: Projector, k: usize, rng: RngStream) -> Result<Self> {
        let sketches = (0..ds.len())
            .map(|l| KllSketch::new(k, rng.substream(l as u64)))
            .collect::<Result<_>>()?;
        Ok(SwStream {
            ds,
            proj,
            sketches,
            items: 0,
        })
    }

    /// Rebuilds a stream from deserialized parts.
    pub fn from_parts(
        ds: DirectionSet,
        proj: Projector,
        sketches: Vec<KllSketch>,
        items: u64,
    ) -> Result<Self> {
        if sketches.len() != ds.len() {
            return Err(Error::SizeMismatch {
                n: ds.len(),
                m: sketches.len(),
            });
        }
        Ok(SwStream {
            ds,
            proj,
            sketches,
            items,
        })
    }

    pub fn insert(&mut self, point: &[f64]) -> Result<()> {
        for (theta, sketch) in self.ds.directions().iter().zip(&mut self.sketches) {
            sketch.insert(self.proj.eval(theta, point)?)?;
        }
        self.items += 1;
        Ok(())
    }

    pub fn direction_set(&self) -> &DirectionSet {
        &self.ds
    }

    pub fn projector(&self) -> &Projector {
        &self.proj
    }

    pub fn sketches(&self) -> &[KllSketch] {
        &self.sketches
    }

    pub fn items(&self) -> u64 {
        self.items
    }
}

/// SW estimate between two sketched streams built over the identical
/// direction set (verified through the provenance hash).
pub fn sw_streaming(a: &SwStream, b: &SwStream, p: f64) -> Result<SwEstimate> {
    let (ha, hb) = (a.ds.provenance_hash(), b.ds.provenance_hash());
    if ha != hb {
        return Err(Error::ProvenanceMismatch { a: ha, b: hb });
    }
    let per_slice: Vec<f64> = a
        .sketches
        .par_iter()
        .zip(&b.sketches)
        .map(|(sa, sb)| {
            let slice_a = sa.to_slice()?;
            let slice_b = sb.to_slice()?;
            wasserstein_1d(&slice_a, &slice_b, p, &Quadrature::Exact)
        })
        .collect::<Result<_>>()?;
    Ok(SwEstimate::from_per_slice(per_slice, p))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::DiscreteMeasure;

    fn dirac(x: Vec<f64>) -> DiscreteMeasure {
        DiscreteMeasure::uniform(vec![x]).unwrap()
    }

    pub(crate) fn gaussian_cloud(seed: u64, n: usize, d: usize, shift: &[f64]) -> DiscreteMeasure {
        use rand_distr::StandardNormal;
        let mut rng = RngStream::from_seed(seed).rng();
        let pts: Vec<Vec<f64>> = (0..n)
            .map(|_| {
                (0..d)
                    .map(|k| {
                        let z: f64 = Distribution::sample(&StandardNormal, &mut rng);
                        z + shift[k]
                    })
                    .collect()
            })
            .collect();
        DiscreteMeasure::uniform(pts).unwrap()
    }

    #[test]
    fn identical_measures_give_zero() {
        let m = gaussian_cloud(1, 20, 3, &[0.0; 3]);
        let ds = sample_uniform_sphere(3, 16, RngStream::from_seed(2)).unwrap();
        let est = sw_mc(&m, &m, 2.0, &ds, &Projector::Linear).unwrap();
        assert_eq!(est.value_p, 0.0);
    }

    #[test]
    fn dirac_translate_matches_norm_over_d() {
        let x = vec![1.0, -2.0, 0.5, 3.0];
        let y = vec![0.0, 1.0, 1.5, -1.0];
        let gap_sq: f64 = x.iter().zip(&y).map(|(a, b)| (a - b) * (a - b)).sum();
        let ds = sample_uniform_sphere(4, 8000, RngStream::from_seed(3)).unwrap();
        let est = sw_mc(&dirac(x), &dirac(y), 2.0, &ds, &Projector::Linear).unwrap();
        let expect = gap_sq / 4.0;
        let se = est.std_error.unwrap();
        assert!(
            (est.value_p - expect).abs() <= 3.0 * se,
            "{} vs {expect} (se {se})",
            est.value_p
        );
    }

    #[test]
    fn shared_direction_triangle_inequality() {
        let a = gaussian_cloud(10, 12, 3, &[0.0; 3]);
        let b = gaussian_cloud(11, 12, 3, &[1.0, 0.0, 0.0]);
        let c = gaussian_cloud(12, 12, 3, &[0.0, 2.0, 0.0]);
        let ds = sample_uniform_sphere(3, 32, RngStream::from_seed(4)).unwrap();
        let p = 2.0;
        let ab = sw_mc(&a, &b, p, &ds, &Projector::Linear).unwrap().value;
        let bc = sw_mc(&b, &c, p, &ds, &Projector::Linear).unwrap().value;
        let ac = sw_mc(&a, &c, p, &ds, &Projector::Linear).unwrap().value;
        assert!(ab + bc >= ac - 1e-12);
    }

    #[test]
    fn symmetry_is_exact() {
        let a = gaussian_cloud(20, 9, 2, &[0.0, 0.0]);
        let b = gaussian_cloud(21, 7, 2, &[0.4, -0.7]);
        let ds = sample_uniform_sphere(2, 24, RngStream::from_seed(5)).unwrap();
        let ab = sw_mc(&a, &b, 2.0, &ds, &Projector::Linear).unwrap();
        let ba = sw_mc(&b, &a, 2.0, &ds, &Projector::Linear).unwrap();
        assert_eq!(ab.value_p, ba.value_p);
    }

    #[test]
    fn cv_identical_measures_guarded_to_zero() {
        let m = gaussian_cloud(6, 10, 2, &[0.0, 0.0]);
        let ds = sample_uniform_sphere(2, 16, RngStream::from_seed(7)).unwrap();
        for variant in [CvVariant::Lower, CvVariant::Upper] {
            let est = sw_cv(&m, &m, &ds, variant).unwrap();
            assert_eq!(est.value_p, 0.0);
        }
    }

    #[test]
    fn cv_lower_is_exact_for_diracs() {
        let x = vec![1.0, 2.0];
        let y = vec![-1.0, 0.5];
        let gap_sq: f64 = x.iter().zip(&y).map(|(a, b)| (a - b) * (a - b)).sum();
        let ds = sample_uniform_sphere(2, 8, RngStream::from_seed(8)).unwrap();
        let est = sw_cv(&dirac(x), &dirac(y), &ds, CvVariant::Lower).unwrap();
        assert!((est.value_p - gap_sq / 2.0).abs() < 1e-12);
    }

    #[test]
    fn cv_variance_not_worse_than_mc() {
        let a = gaussian_cloud(100, 24, 2, &[0.0, 0.0]);
        let b = gaussian_cloud(101, 24, 2, &[1.0, 0.0]);
        let reps = 100;
        let mut mc_vals = Vec::new();
        let mut cv_vals = Vec::new();
        for rseed in 0..reps {
            let ds = sample_uniform_sphere(2, 100, RngStream::from_seed(1000 + rseed)).unwrap();
            mc_vals.push(sw_mc(&a, &b, 2.0, &ds, &Projector::Linear).unwrap().value_p);
            cv_vals.push(sw_cv(&a, &b, &ds, CvVariant::Lower).unwrap().value_p);
        }
        let var = |xs: &[f64]| {
            let m = xs.iter().sum::<f64>() / xs.len() as f64;
            xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() - 1) as f64
        };
        assert!(
            var(&cv_vals) <= var(&mc_vals),
            "cv {} vs mc {}",
            var(&cv_vals),
            var(&mc_vals)
        );
    }

    #[test]
    fn fast_translate_by_hand() {
        let mu = DiscreteMeasure::uniform(vec![vec![0.0, 0.0], vec![2.0, 0.0]]).unwrap();
        let nu = DiscreteMeasure::uniform(vec![vec![0.0, 1.0], vec![2.0, 1.0]]).unwrap();
        let v = sw_fast(&mu, &nu).unwrap();
        assert!((v - 0.5).abs() < 1e-12);
        assert_eq!(sw_fast(&mu, &mu).unwrap(), 0.0);
    }

    #[test]
    fn fast_close_to_mc_on_gaussian_shift() {
        let a = gaussian_cloud(30, 4000, 3, &[0.0; 3]);
        let b = gaussian_cloud(31, 4000, 3, &[1.0, 0.0, 0.0]);
        let fast = sw_fast(&a, &b).unwrap();
        let ds = sample_uniform_sphere(3, 600, RngStream::from_seed(32)).unwrap();
        let mc = sw_mc(&a, &b, 2.0, &ds, &Projector::Linear).unwrap().value_p;
        assert!((fast - mc).abs() / mc <= 0.10, "fast {fast} vs mc {mc}");
    }

    #[test]
    fn max_sw_finds_dirac_separation() {
        let x = vec![1.0, 2.0, -0.5];
        let y = vec![0.0, 0.0, 0.5];
        let gap = norm2(&x.iter().zip(&y).map(|(a, b)| a - b).collect::<Vec<_>>());
        let (theta, value) = max_sw_pga(
            &dirac(x.clone()),
            &dirac(y.clone()),
            2.0,
            200,
            0.5,
            4,
            RngStream::from_seed(40),
        )
        .unwrap();
        assert!((value.sqrt() - gap).abs() < 1e-6, "value {value}");
        let aligned: f64 = theta
            .components()
            .iter()
            .zip(x.iter().zip(&y).map(|(a, b)| a - b))
            .map(|(t, d)| t * d)
            .sum();
        assert!((aligned.abs() - gap).abs() < 1e-5);
    }

    #[test]
    fn max_sw_zero_for_identical() {
        let m = gaussian_cloud(41, 8, 2, &[0.0, 0.0]);
        let (_, value) = max_sw_pga(&m, &m, 2.0, 5, 0.1, 2, RngStream::from_seed(42)).unwrap();
        assert_eq!(value, 0.0);
    }

    #[test]
    fn max_sw_dominates_mc() {
        let a = gaussian_cloud(50, 10, 3, &[0.0; 3]);
        let b = gaussian_cloud(51, 10, 3, &[0.5, -0.5, 1.0]);
        let ds = sample_uniform_sphere(3, 64, RngStream::from_seed(52)).unwrap();
        let mc = sw_mc(&a, &b, 2.0, &ds, &Projector::Linear).unwrap().value_p;
        let (_, max_v) = max_sw_pga(&a, &b, 2.0, 100, 0.2, 4, RngStream::from_seed(53)).unwrap();
        assert!(max_v >= mc - 1e-12);
    }

    #[test]
    fn ebsw_constant_energy_equals_mc() {
        let a = gaussian_cloud(60, 10, 2, &[0.0, 0.0]);
        let b = gaussian_cloud(61, 10, 2, &[1.0, 1.0]);
        let ds = sample_uniform_sphere(2, 32, RngStream::from_seed(62)).unwrap();
        let mc = sw_mc(&a, &b, 2.0, &ds, &Projector::Linear).unwrap();
        let eb = ebsw_is(&a, &b, 2.0, &ds, &EnergySpec::Constant).unwrap();
        assert!((mc.value_p - eb.value_p).abs() < 1e-12);
        let zero = ebsw_is(&a, &a, 2.0, &ds, &EnergySpec::Exponential).unwrap();
        assert_eq!(zero.value_p, 0.0);
    }

    #[test]
    fn ebsw_exponential_dominates_mc_on_anisotropic_pair() {
        // Separation along one axis makes the slice cost increase with
        // alignment, so increasing energies upweight the large slices.
        let a = gaussian_cloud(63, 16, 3, &[0.0; 3]);
        let b = gaussian_cloud(64, 16, 3, &[3.0, 0.0, 0.0]);
        let ds = sample_uniform_sphere(3, 64, RngStream::from_seed(65)).unwrap();
        let mc = sw_mc(&a, &b, 2.0, &ds, &Projector::Linear).unwrap().value_p;
        let eb = ebsw_is(&a, &b, 2.0, &ds, &EnergySpec::Exponential)
            .unwrap()
            .value_p;
        assert!(eb >= mc - 1e-12, "ebsw {eb} vs mc {mc}");
    }

    #[test]
    fn smooth_sigma_zero_equals_mc() {
        let a = gaussian_cloud(70, 9, 2, &[0.0, 0.0]);
        let b = gaussian_cloud(71, 9, 2, &[0.5, 0.0]);
        let ds = sample_uniform_sphere(2, 16, RngStream::from_seed(72)).unwrap();
        let mc = sw_mc(&a, &b, 2.0, &ds, &Projector::Linear).unwrap();
        let sm = smooth_sw(&a, &b, 2.0, 0.0, &ds, RngStream::from_seed(73)).unwrap();
        assert_eq!(mc.value_p, sm.value_p);
    }

    #[test]
    fn smooth_identical_decreases_with_sigma() {
        let m = gaussian_cloud(74, 10, 2, &[0.0, 0.0]);
        let ds = sample_uniform_sphere(2, 32, RngStream::from_seed(75)).unwrap();
        let vals: Vec<f64> = [0.1, 0.01, 0.001]
            .iter()
            .map(|&s| {
                smooth_sw(&m, &m, 2.0, s, &ds, RngStream::from_seed(76))
                    .unwrap()
                    .value_p
            })
            .collect();
        assert!(vals[0] > 0.0);
        assert!(vals[0] > vals[1] && vals[1] > vals[2]);
    }

    #[test]
    fn smooth_small_noise_close_to_noiseless() {
        let a = dirac(vec![0.0, 0.0]);
        let b = dirac(vec![3.0, 4.0]);
        let ds = sample_uniform_sphere(2, 64, RngStream::from_seed(77)).unwrap();
        let base = smooth_sw(&a, &b, 2.0, 0.0, &ds, RngStream::from_seed(78))
            .unwrap()
            .value_p;
        let noisy = smooth_sw(&a, &b, 2.0, 0.01, &ds, RngStream::from_seed(78))
            .unwrap()
            .value_p;
        assert!((noisy - base).abs() / base < 0.05, "noisy {noisy} base {base}");
    }

    #[test]
    fn streaming_identical_streams_zero() {
        let ds = sample_uniform_sphere(2, 8, RngStream::from_seed(80)).unwrap();
        let mut a =
            SwStream::new(ds.clone(), Projector::Linear, 64, RngStream::from_seed(81)).unwrap();
        let mut b = SwStream::new(ds, Projector::Linear, 64, RngStream::from_seed(81)).unwrap();
        for i in 0..100 {
            let p = [i as f64 * 0.01, (i as f64).sin()];
            a.insert(&p).unwrap();
            b.insert(&p).unwrap();
        }
        let est = sw_streaming(&a, &b, 2.0).unwrap();
        assert_eq!(est.value_p, 0.0);
    }

    #[test]
    fn streaming_provenance_mismatch_rejected() {
        let ds1 = sample_uniform_sphere(2, 8, RngStream::from_seed(82)).unwrap();
        let ds2 = sample_uniform_sphere(2, 8, RngStream::from_seed(83)).unwrap();
        let mut a = SwStream::new(ds1, Projector::Linear, 32, RngStream::from_seed(1)).unwrap();
        let mut b = SwStream::new(ds2, Projector::Linear, 32, RngStream::from_seed(1)).unwrap();
        a.insert(&[0.0, 0.0]).unwrap();
        b.insert(&[0.0, 0.0]).unwrap();
        assert!(matches!(
            sw_streaming(&a, &b, 2.0),
            Err(Error::ProvenanceMismatch { .. })
        ));
    }

    #[test]
    fn streaming_singletons_match_mc() {
        let ds = sample_uniform_sphere(2, 16, RngStream::from_seed(84)).unwrap();
        let x = vec![1.0, 2.0];
        let y = vec![-1.0, 0.0];
        let mut a =
            SwStream::new(ds.clone(), Projector::Linear, 32, RngStream::from_seed(1)).unwrap();
        let mut b =
            SwStream::new(ds.clone(), Projector::Linear, 32, RngStream::from_seed(2)).unwrap();
        a.insert(&x).unwrap();
        b.insert(&y).unwrap();
        let st = sw_streaming(&a, &b, 2.0).unwrap();
        let mc = sw_mc(&dirac(x), &dirac(y), 2.0, &ds, &Projector::Linear).unwrap();
        assert!((st.value_p - mc.value_p).abs() < 1e-12);
    }

    #[test]
    fn streaming_large_stream_close_to_full_data() {
        use rand_distr::StandardNormal;
        let ds = sample_uniform_sphere(2, 24, RngStream::from_seed(85)).unwrap();
        let mut a =
            SwStream::new(ds.clone(), Projector::Linear, 200, RngStream::from_seed(3)).unwrap();
        let mut b =
            SwStream::new(ds.clone(), Projector::Linear, 200, RngStream::from_seed(4)).unwrap();
        let mut rng = RngStream::from_seed(86).rng();
        let n = 100_000;
        let mut pts_a = Vec::with_capacity(n);
        let mut pts_b = Vec::with_capacity(n);
        for _ in 0..n {
            let za: f64 = Distribution::sample(&StandardNormal, &mut rng);
            let zb: f64 = Distribution::sample(&StandardNormal, &mut rng);
            let pa = vec![za, zb];
            let zc: f64 = Distribution::sample(&StandardNormal, &mut rng);
            let zd: f64 = Distribution::sample(&StandardNormal, &mut rng);
            let pb = vec![zc + 2.0, zd + 1.0];
            a.insert(&pa).unwrap();
            b.insert(&pb).unwrap();
            pts_a.push(pa);
            pts_b.push(pb);
        }
        let full_a = DiscreteMeasure::uniform(pts_a).unwrap();
        let full_b = DiscreteMeasure::uniform(pts_b).unwrap();
        let exact = sw_mc(&full_a, &full_b, 2.0, &ds, &Projector::Linear).unwrap();
        let est = sw_streaming(&a, &b, 2.0).unwrap();
        let rel = (est.value_p - exact.value_p).abs() / exact.value_p;
        assert!(rel <= 0.10, "rel err {rel}");
    }
}
