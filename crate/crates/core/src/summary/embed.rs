//! Sentence embeddings.
//!
//! The default [`HashedBagEmbedder`] lowercases, strips punctuation, drops
//! stopwords and feature-hashes each remaining token into a fixed number of
//! buckets with FNV-1a. One hash bit picks the bucket sign. The accumulated
//! vector is L2-normalized. Output depends only on the input bytes, so it is
//! identical on every platform.

use std::hash::Hasher;

use fnv::FnvHasher;
use serde::{Deserialize, Serialize};

pub const DEFAULT_DIM: usize = 256;

pub const STOPWORDS: [&str; 50] = [
    "a", "an", "the", "and", "or", "but", "if", "of", "to", "in", "on", "at", "by", "for", "with", "as", "is",
    "are", "was", "were", "be", "been", "it", "its", "this", "that", "these", "those", "there", "then", "than",
    "so", "we", "you", "i", "he", "she", "they", "them", "our", "your", "from", "into", "about", "not", "no",
    "do", "does", "can", "will",
];

/// A fixed-length vector with unit L2 norm, or all zeros for text with no
/// content tokens.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingVector {
    pub values: Vec<f64>,
}

impl EmbeddingVector {
    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|v| *v == 0.0)
    }

    pub fn dot(&self, other: &EmbeddingVector) -> f64 {
        self.values.iter().zip(&other.values).map(|(a, b)| a * b).sum()
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }
}

/// Cosine similarity of two embeddings; 0 when either is the zero vector.
pub fn cosine(a: &EmbeddingVector, b: &EmbeddingVector) -> f64 {
    let denom = a.norm() * b.norm();
    if denom == 0.0 {
        0.0
    } else {
        (a.dot(b) / denom).clamp(-1.0, 1.0)
    }
}

/// Provider contract for sentence embedders.
pub trait Embedder: Sync {
    fn dim(&self) -> usize;
    fn embed(&self, text: &str) -> EmbeddingVector;
}

#[derive(Debug, Clone, Copy)]
pub struct HashedBagEmbedder {
    pub dim: usize,
}

impl Default for HashedBagEmbedder {
    fn default() -> Self {
        Self { dim: DEFAULT_DIM }
    }
}

/// Lowercased content tokens of `text`.
pub fn content_tokens(text: &str) -> Vec<String> {
    text.to_lowercase()
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty() && !STOPWORDS.contains(t))
        .map(str::to_string)
        .collect()
}

pub fn token_hash(token: &str) -> u64 {
    let mut h = FnvHasher::default();
    h.write(token.as_bytes());
    h.finish()
}

impl HashedBagEmbedder {
    /// Bucket index and sign of a token.
    pub fn slot(&self, token: &str) -> (usize, f64) {
        let h = token_hash(token);
        let bucket = (h % self.dim as u64) as usize;
        let sign = if (h >> 32) & 1 == 1 { -1.0 } else { 1.0 };
        (bucket, sign)
    }
}

impl Embedder for HashedBagEmbedder {
    fn dim(&self) -> usize {
        self.dim
    }

    fn embed(&self, text: &str) -> EmbeddingVector {
        let mut values = vec![0.0; self.dim];
        for token in content_tokens(text) {
            let (bucket, sign) = self.slot(&token);
            values[bucket] += sign;
        }
        let norm = values.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > 0.0 {
            for v in &mut values {
                *v /= norm;
            }
        }
        EmbeddingVector { values }
    }
}
