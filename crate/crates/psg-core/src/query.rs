//! Relation-to-object query matching: cosine similarity between projected
//! object queries and relation queries, argmax role selection, and positional
//! triplet composition.

use crate::error::{Error, Result};

/// Affine role projection `x ↦ Mx + b` applied to object queries before the
/// similarity argmax. Identity is the default.
#[derive(Debug, Clone, PartialEq)]
pub struct RoleProjection {
    matrix: Vec<f64>,
    bias: Vec<f64>,
    dim: usize,
}

impl RoleProjection {
    /// Row-major `dim x dim` matrix plus a bias of length `dim`.
    pub fn new(dim: usize, matrix: Vec<f64>, bias: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidConfig {
                reason: "projection dimension must be at least 1".into(),
            });
        }
        if matrix.len() != dim * dim {
            return Err(Error::InvalidConfig {
                reason: format!("projection matrix has {} entries, expected {}", matrix.len(), dim * dim),
            });
        }
        if bias.len() != dim {
            return Err(Error::InvalidConfig {
                reason: format!("projection bias has {} entries, expected {dim}", bias.len()),
            });
        }
        if matrix.iter().chain(bias.iter()).any(|x| !x.is_finite()) {
            return Err(Error::InvalidConfig {
                reason: "projection entries must be finite".into(),
            });
        }
        Ok(RoleProjection { matrix, bias, dim })
    }

    pub fn identity(dim: usize) -> Result<Self> {
        let mut matrix = vec![0.0; dim * dim];
        for i in 0..dim {
            matrix[i * dim + i] = 1.0;
        }
        RoleProjection::new(dim, matrix, vec![0.0; dim])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn apply(&self, query: &[f64]) -> Result<Vec<f64>> {
        if query.len() != self.dim {
            return Err(Error::DimMismatch {
                left: self.dim,
                right: query.len(),
            });
        }
        let mut out = self.bias.clone();
        for (row, slot) in out.iter_mut().enumerate() {
            let coeffs = &self.matrix[row * self.dim..(row + 1) * self.dim];
            *slot += coeffs
                .iter()
                .zip(query)
                .map(|(&m, &q)| m * q)
                .sum::<f64>();
        }
        Ok(out)
    }
}

/// Cosine similarity `u·v / (‖u‖ ‖v‖)`, defined for nonzero vectors of equal
/// dimension.
pub fn cosine(u: &[f64], v: &[f64]) -> Result<f64> {
    if u.len() != v.len() {
        return Err(Error::DimMismatch {
            left: u.len(),
            right: v.len(),
        });
    }
    if u.is_empty() {
        return Err(Error::DimMismatch { left: 0, right: 0 });
    }
    let dot: f64 = u.iter().zip(v).map(|(&a, &b)| a * b).sum();
    let norm_u = u.iter().map(|&a| a * a).sum::<f64>().sqrt();
    let norm_v = v.iter().map(|&b| b * b).sum::<f64>().sqrt();
    if norm_u == 0.0 || norm_v == 0.0 {
        return Err(Error::ZeroVector);
    }
    Ok(dot / (norm_u * norm_v))
}

/// For each relation query, the index of the object query whose projection
/// has the highest cosine similarity with it. Ties go to the lowest index.
pub fn select_role(
    relation_queries: &[Vec<f64>],
    object_queries: &[Vec<f64>],
    projection: &RoleProjection,
) -> Result<Vec<usize>> {
    if object_queries.is_empty() {
        return Err(Error::InvalidConfig {
            reason: "role selection needs at least one object query".into(),
        });
    }
    let projected: Vec<Vec<f64>> = object_queries
        .iter()
        .map(|q| projection.apply(q))
        .collect::<Result<_>>()?;
    let mut selected = Vec::with_capacity(relation_queries.len());
    for relation in relation_queries {
        let mut best_index = 0usize;
        let mut best_sim = f64::NEG_INFINITY;
        for (j, object) in projected.iter().enumerate() {
            let sim = cosine(object, relation)?;
            if sim > best_sim {
                best_sim = sim;
                best_index = j;
            }
        }
        selected.push(best_index);
    }
    Ok(selected)
}

/// Element-wise zip of equal-length subject, predicate, and object index
/// lists into `(subject, predicate, object)` triplets.
pub fn compose_triplets(
    subject_indices: &[usize],
    predicate_ids: &[usize],
    object_indices: &[usize],
) -> Result<Vec<(usize, usize, usize)>> {
    if subject_indices.len() != predicate_ids.len()
        || predicate_ids.len() != object_indices.len()
    {
        return Err(Error::ListLengthMismatch {
            subjects: subject_indices.len(),
            predicates: predicate_ids.len(),
            objects: object_indices.len(),
        });
    }
    Ok(subject_indices
        .iter()
        .zip(predicate_ids)
        .zip(object_indices)
        .map(|((&s, &p), &o)| (s, p, o))
        .collect())
}
