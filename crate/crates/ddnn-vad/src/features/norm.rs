//! Per-dimension min/max normalization to [0,1], fitted on the training
//! split and persisted with the model.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormStats {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

impl NormStats {
    /// Identity stats (min 0, max 1), for data already in [0,1].
    pub fn unit(dim: usize) -> Self {
        NormStats {
            min: vec![0.0; dim],
            max: vec![1.0; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.min.len()
    }
}

/// Per-dimension min/max over the training vectors.
pub fn fit_norm_stats(vectors: &[Vec<f64>]) -> Result<NormStats> {
    let first = vectors
        .first()
        .ok_or_else(|| Error::Data("cannot fit normalization on an empty set".into()))?;
    let mut min = first.clone();
    let mut max = first.clone();
    for v in &vectors[1..] {
        if v.len() != min.len() {
            return Err(Error::dim(min.len(), v.len(), "fit_norm_stats vector"));
        }
        for ((m, x), val) in min.iter_mut().zip(max.iter_mut()).zip(v) {
            if *val < *m {
                *m = *val;
            }
            if *val > *x {
                *x = *val;
            }
        }
    }
    Ok(NormStats { min, max })
}

/// `(v - min)/(max - min)` per dimension, clipped to [0,1]. Degenerate
/// dimensions (max == min) map to 0.5.
pub fn normalize(vector: &[f64], stats: &NormStats) -> Result<Vec<f64>> {
    if vector.len() != stats.dim() {
        return Err(Error::dim(stats.dim(), vector.len(), "normalize vector"));
    }
    Ok(vector
        .iter()
        .zip(&stats.min)
        .zip(&stats.max)
        .map(|((&v, &lo), &hi)| {
            if hi > lo {
                ((v - lo) / (hi - lo)).clamp(0.0, 1.0)
            } else {
                0.5
            }
        })
        .collect())
}
