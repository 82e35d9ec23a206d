//! Discrete measures, unit directions, and reproducible RNG streams.

use std::io::{BufRead, Write};

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::one_d_ot::SortedSlice;
use crate::slicers::Projector;

/// Relative tolerance for weight-sum bookkeeping.
pub const WEIGHT_SUM_TOL: f64 = 1e-12;

/// A weighted point set `sum_i w_i delta_{x_i}` in `d` dimensions.
///
/// Weights are nonnegative and need not sum to one; callers that need a
/// probability measure must normalize explicitly.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteMeasure {
    supports: Vec<Vec<f64>>,
    weights: Vec<f64>,
    mass: f64,
}

impl DiscreteMeasure {
    /// Builds a validated measure. With `weights == None`, atoms get uniform
    /// weight `1/n`.
    pub fn new(points: Vec<Vec<f64>>, weights: Option<Vec<f64>>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::EmptyInput("measure needs at least one atom"));
        }
        let d = points[0].len();
        if d == 0 {
            return Err(Error::EmptyInput("points must have dimension >= 1"));
        }
        for (i, p) in points.iter().enumerate() {
            if p.len() != d {
                return Err(Error::DimensionMismatch {
                    index: i,
                    expected: d,
                    got: p.len(),
                });
            }
            if p.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite {
                    what: "support coordinate",
                    index: i,
                });
            }
        }
        let n = points.len();
        let weights = match weights {
            Some(w) => {
                if w.len() != n {
                    return Err(Error::SizeMismatch {
                        n,
                        m: w.len(),
                    });
                }
                for (i, &wi) in w.iter().enumerate() {
                    if !wi.is_finite() {
                        return Err(Error::NonFinite {
                            what: "weight",
                            index: i,
                        });
                    }
                    if wi < 0.0 {
                        return Err(Error::NegativeWeight(i));
                    }
                }
                w
            }
            None => vec![1.0 / n as f64; n],
        };
        let mass = weights.iter().sum();
        Ok(DiscreteMeasure {
            supports: points,
            weights,
            mass,
        })
    }

    /// Uniform measure on the given points.
    pub fn uniform(points: Vec<Vec<f64>>) -> Result<Self> {
        Self::new(points, None)
    }

    pub fn len(&self) -> usize {
        self.supports.len()
    }

    pub fn is_empty(&self) -> bool {
        self.supports.is_empty() // never true after validation
    }

    pub fn dim(&self) -> usize {
        self.supports[0].len()
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn supports(&self) -> &[Vec<f64>] {
        &self.supports
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Weights divided by total mass.
    pub fn normalized_weights(&self) -> Vec<f64> {
        self.weights.iter().map(|w| w / self.mass).collect()
    }

    /// Returns a copy rescaled to total mass one.
    pub fn normalized(&self) -> Result<Self> {
        if self.mass <= 0.0 {
            return Err(Error::invalid("cannot normalize a zero-mass measure"));
        }
        DiscreteMeasure::new(self.supports.clone(), Some(self.normalized_weights()))
    }

    /// Weighted mean of the supports.
    pub fn mean(&self) -> Vec<f64> {
        let d = self.dim();
        let mut m = vec![0.0; d];
        for (p, &w) in self.supports.iter().zip(&self.weights) {
            for k in 0..d {
                m[k] += w * p[k];
            }
        }
        for mk in &mut m {
            *mk /= self.mass;
        }
        m
    }

    /// Centered second moment `sum_i (w_i/mass) ||x_i - mean||^2`.
    pub fn centered_second_moment(&self) -> f64 {
        let mean = self.mean();
        self.supports
            .iter()
            .zip(&self.weights)
            .map(|(p, &w)| {
                let sq: f64 = p.iter().zip(&mean).map(|(a, b)| (a - b) * (a - b)).sum();
                w / self.mass * sq
            })
            .sum()
    }

    /// Reads a measure from CSV: one point per row, comma-separated reals,
    /// optional final `w:<weight>` column. Either every row carries a weight
    /// or none does.
    pub fn from_csv_reader<R: BufRead>(reader: R) -> Result<Self> {
        let mut points = Vec::new();
        let mut weights: Vec<f64> = Vec::new();
        let mut saw_weight = None;
        for (idx, line) in reader.lines().enumerate() {
            let lineno = idx + 1;
            let line = line?;
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let mut coords = Vec::new();
            let mut row_weight = None;
            for field in trimmed.split(',') {
                let field = field.trim();
                if let Some(wstr) = field.strip_prefix("w:") {
                    row_weight = Some(wstr.trim().parse::<f64>().map_err(|e| Error::Parse {
                        line: lineno,
                        msg: format!("bad weight {wstr:?}: {e}"),
                    })?);
                } else {
                    coords.push(field.parse::<f64>().map_err(|e| Error::Parse {
                        line: lineno,
                        msg: format!("bad coordinate {field:?}: {e}"),
                    })?);
                }
            }
            if coords.is_empty() {
                return Err(Error::Parse {
                    line: lineno,
                    msg: "row has no coordinates".into(),
                });
            }
            match (saw_weight, row_weight.is_some()) {
                (None, has) => saw_weight = Some(has),
                (Some(prev), has) if prev != has => {
                    return Err(Error::Parse {
                        line: lineno,
                        msg: "mixed weighted and unweighted rows".into(),
                    });
                }
                _ => {}
            }
            if let Some(w) = row_weight {
                weights.push(w);
            }
            points.push(coords);
        }
        if points.is_empty() {
            return Err(Error::EmptyInput("CSV contained no points"));
        }
        let weights = if weights.is_empty() { None } else { Some(weights) };
        DiscreteMeasure::new(points, weights)
    }

    pub fn to_csv_writer<W: Write>(&self, mut w: W, include_weights: bool) -> Result<()> {
        for (p, &wi) in self.supports.iter().zip(&self.weights) {
            let coords: Vec<String> = p.iter().map(|c| format!("{c}")).collect();
            if include_weights {
                writeln!(w, "{},w:{}", coords.join(","), wi)?;
            } else {
                writeln!(w, "{}", coords.join(","))?;
            }
        }
        Ok(())
    }
}

/// A unit vector on the sphere of its parameter space.
#[derive(Debug, Clone, PartialEq)]
pub struct Direction(Vec<f64>);

impl Direction {
    /// Validates that the components already have unit norm.
    pub fn new(components: Vec<f64>) -> Result<Self> {
        let norm = norm2(&components);
        if !norm.is_finite() || (norm - 1.0).abs() > 1e-12 {
            return Err(Error::invalid(format!(
                "direction norm {norm} outside [1-1e-12, 1+1e-12]"
            )));
        }
        Ok(Direction(components))
    }

    /// Normalizes arbitrary components to unit norm.
    pub fn normalized(components: Vec<f64>) -> Result<Self> {
        let norm = norm2(&components);
        if !norm.is_finite() || norm < 1e-12 {
            return Err(Error::DegenerateDirection);
        }
        Ok(Direction(
            components.into_iter().map(|c| c / norm).collect(),
        ))
    }

    pub fn components(&self) -> &[f64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn dot(&self, x: &[f64]) -> f64 {
        self.0.iter().zip(x).map(|(a, b)| a * b).sum()
    }
}

pub(crate) fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// A counter-based RNG substream: identical `(seed, stream_id)` produces the
/// identical draw sequence on every platform.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RngStream {
    pub seed: u64,
    pub stream_id: u64,
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        RngStream { seed, stream_id }
    }

    pub fn from_seed(seed: u64) -> Self {
        RngStream {
            seed,
            stream_id: 0,
        }
    }

    /// Materializes the generator for this substream.
    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream_id);
        rng
    }

    /// Derives a sibling substream by offsetting the stream id.
    pub fn substream(&self, offset: u64) -> RngStream {
        RngStream {
            seed: self.seed,
            stream_id: self.stream_id.wrapping_add(offset),
        }
    }
}

/// Pushes `m` through the defining function `g_theta` and sorts the result.
///
/// Ties keep ascending original-index order; zero-weight atoms are dropped
/// (they carry no mass). The permutation of surviving original indices is
/// retained on the slice.
pub fn project(m: &DiscreteMeasure, proj: &Projector, theta: &Direction) -> Result<SortedSlice> {
    proj.check_compatible(m.dim(), theta.dim())?;
    let mut values = Vec::with_capacity(m.len());
    let mut weights = Vec::with_capacity(m.len());
    let mut perm = Vec::with_capacity(m.len());
    for (i, (p, &w)) in m.supports().iter().zip(m.weights()).enumerate() {
        if w == 0.0 {
            continue;
        }
        values.push(proj.eval(theta, p)?);
        weights.push(w);
        perm.push(i);
    }
    SortedSlice::from_unsorted(values, weights, perm)
}
