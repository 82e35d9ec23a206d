//! Positive-definite kernels from SW and finite-dimensional SW embeddings.
//!
//! Every kernel and embedding in a batch must share one direction set:
//! positive definiteness holds slice-wise, not across differing estimates,
//! so mixing sets is rejected through the provenance hash.

use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::measures::{project, DiscreteMeasure, RngStream};
use crate::slicers::{DirectionSet, Projector};
use crate::sw_core::{check_equal_measure_mass, per_slice_costs};

/// Per-direction displacements `T(y_j) - y_j` of reference atoms, with the
/// provenance that pins the direction set and reference.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingMatrix {
    /// `L x n` displacement values.
    pub rows: Vec<Vec<f64>>,
    /// Hash of the direction set used.
    pub directions_hash: u64,
    /// Reference measure the embedding is taken against.
    pub reference_len: usize,
}

impl EmbeddingMatrix {
    /// Euclidean distance between two embeddings over `sqrt(L * n)`; for a
    /// rich reference this approximates the frozen-direction `SW_2`.
    pub fn distance(&self, other: &EmbeddingMatrix) -> Result<f64> {
        if self.directions_hash != other.directions_hash {
            return Err(Error::ProvenanceMismatch {
                a: self.directions_hash,
                b: other.directions_hash,
            });
        }
        if self.reference_len != other.reference_len {
            return Err(Error::SizeMismatch {
                n: self.reference_len,
                m: other.reference_len,
            });
        }
        let mut acc = 0.0;
        let mut count = 0usize;
        for (ra, rb) in self.rows.iter().zip(&other.rows) {
            for (a, b) in ra.iter().zip(rb) {
                acc += (a - b) * (a - b);
                count += 1;
            }
        }
        Ok((acc / count as f64).sqrt())
    }
}

fn check_gamma(gamma: f64) -> Result<()> {
    if !(gamma > 0.0) {
        return Err(Error::invalid(format!("kernel scale gamma {gamma} must be > 0")));
    }
    Ok(())
}

/// `exp(-gamma * SW_2^2)` estimated on the shared direction set.
pub fn sw_kernel(
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    gamma: f64,
    ds: &DirectionSet,
) -> Result<f64> {
    check_gamma(gamma)?;
    check_equal_measure_mass(mu, nu)?;
    let costs = per_slice_costs(mu, nu, 2.0, ds, &Projector::Linear)?;
    let sw2 = costs.iter().sum::<f64>() / costs.len() as f64;
    Ok((-gamma * sw2).exp())
}

/// Unbiased variant: the per-direction average of `exp(-gamma * W_2^2)`.
/// Dominates `sw_kernel` on any pair by Jensen's inequality.
pub fn usw_kernel(
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    gamma: f64,
    ds: &DirectionSet,
) -> Result<f64> {
    check_gamma(gamma)?;
    check_equal_measure_mass(mu, nu)?;
    let costs = per_slice_costs(mu, nu, 2.0, ds, &Projector::Linear)?;
    Ok(costs.iter().map(|c| (-gamma * c).exp()).sum::<f64>() / costs.len() as f64)
}

/// Which kernel a Gram matrix is built from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelKind {
    Sw,
    Usw,
}

/// Symmetric Gram matrix of a batch of measures under one shared direction
/// set.
pub fn gram(
    measures: &[DiscreteMeasure],
    kind: KernelKind,
    gamma: f64,
    ds: &DirectionSet,
) -> Result<Vec<Vec<f64>>> {
    check_gamma(gamma)?;
    let k = measures.len();
    let pairs: Vec<(usize, usize)> = (0..k)
        .flat_map(|i| (i..k).map(move |j| (i, j)))
        .collect();
    let entries: Vec<((usize, usize), f64)> = pairs
        .par_iter()
        .map(|&(i, j)| {
            let v = match kind {
                KernelKind::Sw => sw_kernel(&measures[i], &measures[j], gamma, ds)?,
                KernelKind::Usw => usw_kernel(&measures[i], &measures[j], gamma, ds)?,
            };
            Ok(((i, j), v))
        })
        .collect::<Result<_>>()?;
    let mut g = vec![vec![0.0; k]; k];
    for ((i, j), v) in entries {
        g[i][j] = v;
        g[j][i] = v;
    }
    Ok(g)
}

/// Sliced Wasserstein embedding of `mu` against a uniform reference `mu0`:
/// per direction `l` and reference atom `y_j`, the displacement
/// `T(<theta_l, y_j>) - <theta_l, y_j>` with
/// `T = F^{-1}_{theta # mu} o F_{theta # mu0}`.
pub fn sw_embed(
    mu: &DiscreteMeasure,
    reference: &DiscreteMeasure,
    ds: &DirectionSet,
) -> Result<EmbeddingMatrix> {
    check_equal_measure_mass(mu, reference)?;
    let uniform = reference
        .weights()
        .iter()
        .all(|&w| (w - reference.weights()[0]).abs() <= 1e-12);
    if !uniform {
        return Err(Error::NonUniformWeights);
    }
    let rows: Vec<Vec<f64>> = ds
        .directions()
        .par_iter()
        .map(|theta| {
            let slice_mu = project(mu, &Projector::Linear, theta)?;
            let slice_ref = project(reference, &Projector::Linear, theta)?;
            reference
                .supports()
                .iter()
                .map(|y| {
                    let t = theta.dot(y);
                    let level = slice_ref.cdf(t) / slice_ref.mass();
                    Ok(slice_mu.quantile(level)? - t)
                })
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<_>>()?;
    Ok(EmbeddingMatrix {
        rows,
        directions_hash: ds.provenance_hash(),
        reference_len: reference.len(),
    })
}

/// Default reference: uniform atoms subsampled (without replacement) from
/// the pooled atoms of the dataset.
pub fn default_reference(
    measures: &[DiscreteMeasure],
    n_atoms: usize,
    rng: RngStream,
) -> Result<DiscreteMeasure> {
    if measures.is_empty() {
        return Err(Error::EmptyInput("reference needs at least one measure"));
    }
    if n_atoms == 0 {
        return Err(Error::EmptyInput("reference needs at least one atom"));
    }
    let pooled: Vec<Vec<f64>> = measures
        .iter()
        .flat_map(|m| m.supports().iter().cloned())
        .collect();
    let mut r = rng.rng();
    let mut indices: Vec<usize> = (0..pooled.len()).collect();
    // Fisher-Yates prefix shuffle for the first n_atoms picks.
    let take = n_atoms.min(pooled.len());
    for i in 0..take {
        let j = r.random_range(i..indices.len());
        indices.swap(i, j);
    }
    let atoms: Vec<Vec<f64>> = indices[..take].iter().map(|&i| pooled[i].clone()).collect();
    DiscreteMeasure::uniform(atoms)
}
