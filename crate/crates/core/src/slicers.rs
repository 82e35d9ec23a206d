//! Direction generation (MC, QMC, randomized QMC) and the defining
//! functions used to project measures to the line.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::measures::{norm2, Direction, RngStream};

/// A projection kernel `g(x, theta)`.
///
/// `Linear` is the classical Radon projection `<theta, x>`; `Circular` and
/// `OddPolynomial` are the two injective generalized transforms kept here.
#[derive(Debug, Clone, PartialEq)]
pub enum Projector {
    Linear,
    Circular { r: f64 },
    OddPolynomial { degree: u32, multi_indices: Vec<Vec<u32>> },
}

impl Projector {
    /// All multi-indices of total degree `degree` over `d` variables.
    pub fn odd_polynomial(d: usize, degree: u32) -> Result<Projector> {
        if degree == 0 || degree % 2 == 0 {
            return Err(Error::invalid(format!("polynomial degree {degree} must be odd")));
        }
        if d == 0 {
            return Err(Error::EmptyInput("dimension must be >= 1"));
        }
        let mut multi_indices = Vec::new();
        let mut current = vec![0u32; d];
        enumerate_indices(d, degree, 0, &mut current, &mut multi_indices);
        Ok(Projector::OddPolynomial { degree, multi_indices })
    }

    /// Builds an odd-polynomial projector from explicit multi-indices.
    pub fn odd_polynomial_from(degree: u32, multi_indices: Vec<Vec<u32>>) -> Result<Projector> {
        if degree == 0 || degree % 2 == 0 {
            return Err(Error::invalid(format!("polynomial degree {degree} must be odd")));
        }
        if multi_indices.is_empty() {
            return Err(Error::EmptyInput("need at least one multi-index"));
        }
        let d = multi_indices[0].len();
        for (i, mi) in multi_indices.iter().enumerate() {
            if mi.len() != d {
                return Err(Error::DimensionMismatch {
                    index: i,
                    expected: d,
                    got: mi.len(),
                });
            }
            if mi.iter().sum::<u32>() != degree {
                return Err(Error::invalid(format!("multi-index {i} does not sum to {degree}")));
            }
        }
        Ok(Projector::OddPolynomial { degree, multi_indices })
    }

    /// Dimension of the parameter space Omega for data of dimension `d`.
    pub fn param_dim(&self, d: usize) -> usize {
        match self {
            Projector::Linear | Projector::Circular { .. } => d,
            Projector::OddPolynomial { multi_indices, .. } => multi_indices.len(),
        }
    }

    pub(crate) fn check_compatible(&self, data_dim: usize, theta_dim: usize) -> Result<()> {
        match self {
            Projector::Linear | Projector::Circular { .. } => {
                if theta_dim != data_dim {
                    return Err(Error::DimensionMismatch {
                        index: 0,
                        expected: data_dim,
                        got: theta_dim,
                    });
                }
            }
            Projector::OddPolynomial { multi_indices, .. } => {
                if theta_dim != multi_indices.len() {
                    return Err(Error::DimensionMismatch {
                        index: 0,
                        expected: multi_indices.len(),
                        got: theta_dim,
                    });
                }
            }
        }
        if let Projector::Circular { r } = self {
            if !(*r > 0.0) {
                return Err(Error::invalid(format!("circular radius {r} must be > 0")));
            }
        }
        Ok(())
    }

    /// Evaluates `g(x, theta)`.
    pub fn eval(&self, theta: &Direction, x: &[f64]) -> Result<f64> {
        match self {
            Projector::Linear => {
                if theta.dim() != x.len() {
                    return Err(Error::DimensionMismatch {
                        index: 0,
                        expected: x.len(),
                        got: theta.dim(),
                    });
                }
                Ok(theta.dot(x))
            }
            Projector::Circular { r } => {
                if theta.dim() != x.len() {
                    return Err(Error::DimensionMismatch {
                        index: 0,
                        expected: x.len(),
                        got: theta.dim(),
                    });
                }
                let sq: f64 = x
                    .iter()
                    .zip(theta.components())
                    .map(|(xi, ti)| {
                        let diff = xi - r * ti;
                        diff * diff
                    })
                    .sum();
                Ok(sq.sqrt())
            }
            Projector::OddPolynomial { multi_indices, .. } => {
                if theta.dim() != multi_indices.len() {
                    return Err(Error::DimensionMismatch {
                        index: 0,
                        expected: multi_indices.len(),
                        got: theta.dim(),
                    });
                }
                let mut acc = 0.0;
                for (coef, mi) in theta.components().iter().zip(multi_indices) {
                    if mi.len() != x.len() {
                        return Err(Error::DimensionMismatch {
                            index: 0,
                            expected: mi.len(),
                            got: x.len(),
                        });
                    }
                    let mut mono = 1.0;
                    for (xi, &e) in x.iter().zip(mi) {
                        mono *= xi.powi(e as i32);
                    }
                    acc += coef * mono;
                }
                Ok(acc)
            }
        }
    }
}

fn enumerate_indices(d: usize, remaining: u32, pos: usize, current: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
    if pos == d - 1 {
        current[pos] = remaining;
        out.push(current.clone());
        current[pos] = 0;
        return;
    }
    for e in (0..=remaining).rev() {
        current[pos] = e;
        enumerate_indices(d, remaining - e, pos + 1, current, out);
        current[pos] = 0;
    }
}

/// How a direction set was produced; with the direction values themselves,
/// this pins the estimate for reproducibility checks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Provenance {
    Mc { seed: u64 },
    /// Mapped from a low-discrepancy cube sequence. Sequence id 0 is the
    /// Halton sequence with the first `d` primes as bases, starting at
    /// index 1.
    QmcMapped { sequence_id: u64 },
    SpiralS2,
    RotatedQmc { seed: u64 },
    /// Handed in by the caller (e.g. explicit candidate directions).
    Explicit,
}

/// A batch of unit directions plus provenance and per-direction RNG stream
/// ids.
#[derive(Debug, Clone, PartialEq)]
pub struct DirectionSet {
    directions: Vec<Direction>,
    provenance: Provenance,
    stream_ids: Vec<u64>,
    seed: u64,
}

impl DirectionSet {
    /// Builds a set from explicit directions; substream ids default to the
    /// direction index under the given seed.
    pub fn from_directions(directions: Vec<Direction>, seed: u64) -> Result<Self> {
        if directions.is_empty() {
            return Err(Error::EmptyInput("need at least one direction"));
        }
        let d = directions[0].dim();
        if directions.iter().any(|dir| dir.dim() != d) {
            return Err(Error::DimensionMismatch {
                index: 0,
                expected: d,
                got: directions.iter().find(|dir| dir.dim() != d).unwrap().dim(),
            });
        }
        let stream_ids = (0..directions.len() as u64).collect();
        Ok(DirectionSet {
            directions,
            provenance: Provenance::Explicit,
            stream_ids,
            seed,
        })
    }

    pub fn len(&self) -> usize {
        self.directions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.directions.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.directions[0].dim()
    }

    pub fn directions(&self) -> &[Direction] {
        &self.directions
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// The RNG stream owned by direction `l`.
    pub fn stream(&self, l: usize) -> RngStream {
        RngStream::new(self.seed, self.stream_ids[l])
    }

    /// FNV-1a over provenance tag, dimensions, and raw direction bits.
    /// Stable across runs and platforms.
    pub fn provenance_hash(&self) -> u64 {
        let mut h = Fnv::new();
        let tag: u64 = match &self.provenance {
            Provenance::Mc { seed } => 0x10 ^ seed.rotate_left(8),
            Provenance::QmcMapped { sequence_id } => 0x20 ^ sequence_id.rotate_left(8),
            Provenance::SpiralS2 => 0x30,
            Provenance::RotatedQmc { seed } => 0x40 ^ seed.rotate_left(8),
            Provenance::Explicit => 0x50,
        };
        h.write_u64(tag);
        h.write_u64(self.directions.len() as u64);
        h.write_u64(self.dim() as u64);
        for dir in &self.directions {
            for &c in dir.components() {
                h.write_u64(c.to_bits());
            }
        }
        h.finish()
    }
}

struct Fnv(u64);

impl Fnv {
    fn new() -> Self {
        Fnv(0xcbf29ce484222325)
    }
    fn write_u64(&mut self, v: u64) {
        for b in v.to_le_bytes() {
            self.0 ^= b as u64;
            self.0 = self.0.wrapping_mul(0x100000001b3);
        }
    }
    fn finish(&self) -> u64 {
        self.0
    }
}

fn standard_normal_vec(rng: &mut ChaCha8Rng, d: usize) -> Vec<f64> {
    (0..d).map(|_| rng.sample(StandardNormal)).collect()
}

/// I.i.d. uniform directions on the unit sphere; direction `l` is drawn
/// entirely from substream `l` of the given stream.
pub fn sample_uniform_sphere(d: usize, n_dirs: usize, rng: RngStream) -> Result<DirectionSet> {
    if d == 0 {
        return Err(Error::EmptyInput("dimension must be >= 1"));
    }
    if n_dirs == 0 {
        return Err(Error::EmptyInput("need at least one direction"));
    }
    let mut directions = Vec::with_capacity(n_dirs);
    let mut stream_ids = Vec::with_capacity(n_dirs);
    for l in 0..n_dirs {
        let sub = rng.substream(l as u64);
        let mut r = sub.rng();
        let dir = loop {
            let z = standard_normal_vec(&mut r, d);
            if norm2(&z) > 1e-12 {
                break Direction::normalized(z)?;
            }
        };
        directions.push(dir);
        stream_ids.push(sub.stream_id);
    }
    Ok(DirectionSet {
        directions,
        provenance: Provenance::Mc { seed: rng.seed },
        stream_ids,
        seed: rng.seed,
    })
}

/// Radical-inverse (van der Corput) value of `index` in base `base`.
fn radical_inverse(mut index: u64, base: u64) -> f64 {
    let mut f = 1.0 / base as f64;
    let mut r = 0.0;
    while index > 0 {
        r += f * (index % base) as f64;
        index /= base;
        f /= base as f64;
    }
    r
}

fn first_primes(n: usize) -> Vec<u64> {
    let mut primes = Vec::with_capacity(n);
    let mut c = 2u64;
    while primes.len() < n {
        if primes.iter().all(|&p| c % p != 0) {
            primes.push(c);
        }
        c += 1;
    }
    primes
}

/// Acklam's rational approximation to the standard normal quantile.
/// Relative error below 1.2e-9 on (0, 1).
fn inverse_normal_cdf(p: f64) -> f64 {
    const A: [f64; 6] = [
        -3.969683028665376e+01,
        2.209460984245205e+02,
        -2.759285104469687e+02,
        1.383577518672690e+02,
        -3.066479806614716e+01,
        2.506628277459239e+00,
    ];
    const B: [f64; 5] = [
        -5.447609879822406e+01,
        1.615858368580409e+02,
        -1.556989798598866e+02,
        6.680131188771972e+01,
        -1.328068155288572e+01,
    ];
    const C: [f64; 6] = [
        -7.784894002430293e-03,
        -3.223964580411365e-01,
        -2.400758277161838e+00,
        -2.549732539343734e+00,
        4.374664141464968e+00,
        2.938163982698783e+00,
    ];
    const D: [f64; 4] = [
        7.784695709041462e-03,
        3.224671290700398e-01,
        2.445134137142996e+00,
        3.754408661907416e+00,
    ];
    const P_LOW: f64 = 0.02425;
    if p <= 0.0 {
        return f64::NEG_INFINITY;
    }
    if p >= 1.0 {
        return f64::INFINITY;
    }
    if p < P_LOW {
        let q = (-2.0 * p.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else if p <= 1.0 - P_LOW {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        -inverse_normal_cdf(1.0 - p)
    }
}

/// Deterministic directions mapped from a low-discrepancy cube sequence
/// through the componentwise normal quantile. Only sequence id 0 (Halton)
/// is implemented; cube coordinates are clamped into
/// `[1/(2L), 1 - 1/(2L)]` before mapping.
pub fn qmc_mapped(d: usize, n_dirs: usize, sequence_id: u64) -> Result<DirectionSet> {
    if d == 0 {
        return Err(Error::EmptyInput("dimension must be >= 1"));
    }
    if n_dirs == 0 {
        return Err(Error::EmptyInput("need at least one direction"));
    }
    if sequence_id != 0 {
        return Err(Error::invalid(format!("unknown cube sequence id {sequence_id}")));
    }
    let bases = first_primes(d);
    let clamp = 1.0 / (2.0 * n_dirs as f64);
    let mut directions = Vec::with_capacity(n_dirs);
    for l in 0..n_dirs {
        let z: Vec<f64> = bases
            .iter()
            .map(|&b| {
                let x = radical_inverse(l as u64 + 1, b).clamp(clamp, 1.0 - clamp);
                inverse_normal_cdf(x)
            })
            .collect();
        if norm2(&z) < 1e-12 {
            return Err(Error::DegenerateDirection);
        }
        directions.push(Direction::normalized(z)?);
    }
    let stream_ids = (0..n_dirs as u64).collect();
    Ok(DirectionSet {
        directions,
        provenance: Provenance::QmcMapped { sequence_id },
        stream_ids,
        seed: 0,
    })
}

/// The generalized spiral point set on the 2-sphere:
/// `z_i = 1 - (2i - 1)/L`, `phi1 = acos(z_i)`, `phi2 = 1.8 sqrt(L) phi1 mod 2pi`.
pub fn spiral_s2(n_dirs: usize) -> Result<DirectionSet> {
    if n_dirs == 0 {
        return Err(Error::EmptyInput("need at least one direction"));
    }
    let total = n_dirs as f64;
    let mut directions = Vec::with_capacity(n_dirs);
    for i in 1..=n_dirs {
        let z = 1.0 - (2.0 * i as f64 - 1.0) / total;
        let phi1 = z.clamp(-1.0, 1.0).acos();
        let phi2 = (1.8 * total.sqrt() * phi1) % (2.0 * std::f64::consts::PI);
        directions.push(Direction::normalized(vec![
            phi1.sin() * phi2.cos(),
            phi1.sin() * phi2.sin(),
            phi1.cos(),
        ])?);
    }
    let stream_ids = (0..n_dirs as u64).collect();
    Ok(DirectionSet {
        directions,
        provenance: Provenance::SpiralS2,
        stream_ids,
        seed: 0,
    })
}

/// Columns of the Gram-Schmidt orthonormalization of a standard Gaussian
/// matrix; Haar-distributed because the triangular factor has positive
/// diagonal by construction.
pub fn sample_orthonormal_basis(d: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    loop {
        let cols: Vec<Vec<f64>> = (0..d).map(|_| standard_normal_vec(rng, d)).collect();
        if let Some(q) = gram_schmidt(&cols) {
            return q;
        }
    }
}

fn gram_schmidt(cols: &[Vec<f64>]) -> Option<Vec<Vec<f64>>> {
    let d = cols.len();
    let mut q: Vec<Vec<f64>> = Vec::with_capacity(d);
    for col in cols {
        let mut v = col.clone();
        for prev in &q {
            let proj: f64 = prev.iter().zip(&v).map(|(a, b)| a * b).sum();
            for (vi, pi) in v.iter_mut().zip(prev) {
                *vi -= proj * pi;
            }
        }
        let n = norm2(&v);
        if n < 1e-10 {
            return None;
        }
        for vi in &mut v {
            *vi /= n;
        }
        q.push(v);
    }
    Some(q)
}

/// Applies a Haar-random rotation `U` to every direction of the set.
pub fn random_rotation(ds: &DirectionSet, rng: RngStream) -> Result<DirectionSet> {
    let d = ds.dim();
    let mut r = rng.rng();
    let basis = sample_orthonormal_basis(d, &mut r);
    let directions: Vec<Direction> = ds
        .directions
        .iter()
        .map(|dir| {
            let mut out = vec![0.0; d];
            for (col, &c) in basis.iter().zip(dir.components()) {
                for (o, &b) in out.iter_mut().zip(col) {
                    *o += c * b;
                }
            }
            Direction::normalized(out)
        })
        .collect::<Result<_>>()?;
    Ok(DirectionSet {
        directions,
        provenance: Provenance::RotatedQmc { seed: rng.seed },
        stream_ids: ds.stream_ids.clone(),
        seed: rng.seed,
    })
}
