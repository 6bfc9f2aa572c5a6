use num_traits::Float;
use serde::{Deserialize, Serialize};

use super::AlignError;

/// A dense embedding. `dim` is the length of `values`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingVector<S> {
    values: Vec<S>,
}

impl<S: Float> EmbeddingVector<S> {
    /// Wraps values as-is.
    pub fn new(values: Vec<S>) -> Self {
        Self { values }
    }

    /// Scales `values` to unit L2 norm.
    pub fn normalized(values: Vec<S>) -> Result<Self, AlignError> {
        let norm = l2_norm(&values);
        if !norm.is_finite() || norm <= S::zero() {
            return Err(AlignError::DegenerateVector);
        }
        Ok(Self {
            values: values.into_iter().map(|v| v / norm).collect(),
        })
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[S] {
        &self.values
    }

    pub fn norm(&self) -> S {
        l2_norm(&self.values)
    }

    /// Negated copy.
    pub fn negated(&self) -> Self {
        Self::new(self.values.iter().map(|&v| -v).collect())
    }
}

fn l2_norm<S: Float>(values: &[S]) -> S {
    values.iter().fold(S::zero(), |acc, &v| acc + v * v).sqrt()
}

fn dot<S: Float>(a: &[S], b: &[S]) -> S {
    a.iter().zip(b).fold(S::zero(), |acc, (&x, &y)| acc + x * y)
}

/// Cosine similarity clamped to `[-1, 1]`. A zero vector has cosine 0 with
/// everything.
pub fn cosine<S: Float>(a: &EmbeddingVector<S>, b: &EmbeddingVector<S>) -> Result<S, AlignError> {
    if a.dim() != b.dim() {
        return Err(AlignError::DimensionMismatch {
            expected: a.dim(),
            got: b.dim(),
        });
    }
    let denom = a.norm() * b.norm();
    if denom == S::zero() {
        return Ok(S::zero());
    }
    let c = dot(&a.values, &b.values) / denom;
    Ok(c.max(-S::one()).min(S::one()))
}

/// Exact top-`k` sources for every target by cosine, highest first; equal
/// cosines keep the lower source ordinal first.
pub fn top_k_indices<S: Float>(
    targets: &[EmbeddingVector<S>],
    sources: &[EmbeddingVector<S>],
    k: usize,
) -> Result<Vec<Vec<(usize, S)>>, AlignError> {
    if k == 0 {
        return Err(AlignError::InvalidK);
    }
    targets
        .iter()
        .map(|t| {
            let mut best: Vec<(usize, S)> = Vec::with_capacity(k.min(sources.len()) + 1);
            for (j, s) in sources.iter().enumerate() {
                let score = cosine(t, s)?;
                // sources are scanned in ordinal order, so an equal score
                // lands after the entries already kept
                let pos = best.partition_point(|&(_, kept)| kept >= score);
                if pos < k {
                    best.insert(pos, (j, score));
                    best.truncate(k);
                }
            }
            Ok(best)
        })
        .collect()
}
