//! Similarity search over a transcript's sentences.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::exec::Execution;
use crate::pipeline::transcript::{Sentence, Transcript};
use crate::summary::embed::{Embedder, EmbeddingVector};

/// A contiguous run of sentences `first..=last`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExcerptSpan {
    pub first: usize,
    pub last: usize,
    pub text: String,
}

/// Every sentence of a transcript with its embedding. Immutable once built.
#[derive(Debug, Clone)]
pub struct SemanticMap {
    sentences: Vec<Sentence>,
    vectors: Vec<EmbeddingVector>,
}

/// Orders hits by descending score, then by transcript position.
pub fn rank_order(a: &(usize, f64), b: &(usize, f64)) -> Ordering {
    b.1.total_cmp(&a.1).then(a.0.cmp(&b.0))
}

impl SemanticMap {
    pub fn build(sentences: Vec<Sentence>, embedder: &dyn Embedder, exec: Execution) -> Self {
        let vectors = exec.map(&sentences, |s| embedder.embed(&s.text));
        Self { sentences, vectors }
    }

    pub fn from_transcript(transcript: &Transcript, min_tokens: usize, embedder: &dyn Embedder, exec: Execution) -> Self {
        Self::build(transcript.sentences(min_tokens), embedder, exec)
    }

    pub fn sentences(&self) -> &[Sentence] {
        &self.sentences
    }

    pub fn vectors(&self) -> &[EmbeddingVector] {
        &self.vectors
    }

    /// Cosine score of every non-zero sentence against a unit query.
    pub fn scores(&self, query: &EmbeddingVector) -> Vec<(usize, f64)> {
        self.vectors
            .iter()
            .enumerate()
            .filter(|(_, v)| !v.is_zero())
            .map(|(i, v)| (i, v.dot(query)))
            .collect()
    }

    /// The `k` best sentences for `query`, best first.
    pub fn top_k(&self, query: &EmbeddingVector, k: usize) -> Vec<(usize, f64)> {
        if k == 0 || query.is_zero() {
            return Vec::new();
        }
        let mut scored = self.scores(query);
        if scored.len() > k {
            scored.select_nth_unstable_by(k - 1, rank_order);
            scored.truncate(k);
        }
        scored.sort_by(rank_order);
        scored
    }

    /// Top-`k` hits for `concept`, each widened by one sentence on either
    /// side, overlapping spans merged, returned in transcript order.
    pub fn extract_relevant(&self, concept: &str, embedder: &dyn Embedder, k: usize) -> Vec<ExcerptSpan> {
        let query = embedder.embed(concept);
        let hits = self.top_k(&query, k);
        spans_for_hits(&self.sentences, hits.iter().map(|(i, _)| *i))
    }
}

/// Widens each hit by one neighbour and merges overlaps.
pub fn spans_for_hits(sentences: &[Sentence], hits: impl Iterator<Item = usize>) -> Vec<ExcerptSpan> {
    if sentences.is_empty() {
        return Vec::new();
    }
    let mut ranges: Vec<(usize, usize)> = hits
        .map(|i| (i.saturating_sub(1), (i + 1).min(sentences.len() - 1)))
        .collect();
    ranges.sort_unstable();
    let mut merged: Vec<(usize, usize)> = Vec::new();
    for (lo, hi) in ranges {
        match merged.last_mut() {
            Some(last) if lo <= last.1 => last.1 = last.1.max(hi),
            _ => merged.push((lo, hi)),
        }
    }
    merged
        .into_iter()
        .map(|(first, last)| ExcerptSpan {
            first,
            last,
            text: sentences[first..=last]
                .iter()
                .map(|s| s.text.as_str())
                .collect::<Vec<_>>()
                .join(" "),
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::summary::embed::HashedBagEmbedder;

    fn map(texts: &[&str]) -> SemanticMap {
        let sentences = texts
            .iter()
            .enumerate()
            .map(|(i, t)| Sentence { index: i, segment: i, t: i as f64, text: t.to_string() })
            .collect();
        SemanticMap::build(sentences, &HashedBagEmbedder::default(), Execution::Sequential)
    }

    const LECTURE: [&str; 6] = [
        "Welcome to thermodynamics today.",
        "Heat flows from hot bodies to cold bodies.",
        "Entropy measures molecular disorder.",
        "The sun rises every morning.",
        "Pressure times volume stays constant.",
        "Entropy of isolated systems never decreases.",
    ];

    #[test]
    fn exact_sentence_wins() {
        let m = map(&LECTURE);
        let e = HashedBagEmbedder::default();
        let spans = m.extract_relevant("The sun rises every morning.", &e, 1);
        assert_eq!(spans.len(), 1);
        assert_eq!((spans[0].first, spans[0].last), (2, 4));
        let best = m.top_k(&e.embed(LECTURE[3]), 1);
        assert_eq!(best[0].0, 3);
        assert!((best[0].1 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn adjacent_hits_merge() {
        let m = map(&LECTURE);
        let spans = spans_for_hits(m.sentences(), [2usize, 3].into_iter());
        assert_eq!(spans.len(), 1);
        assert_eq!((spans[0].first, spans[0].last), (1, 4));
        let spans = spans_for_hits(m.sentences(), [0usize, 5].into_iter());
        assert_eq!(spans.len(), 2);
        assert_eq!(spans[0].text, format!("{} {}", LECTURE[0], LECTURE[1]));
    }

    #[test]
    fn empty_and_zero_queries() {
        let m = map(&[]);
        let e = HashedBagEmbedder::default();
        assert!(m.extract_relevant("entropy", &e, 3).is_empty());
        let m = map(&LECTURE);
        assert!(m.extract_relevant("the of and", &e, 3).is_empty());
    }

    #[test]
    fn ties_go_to_earlier_sentences() {
        let m = map(&["Entropy rises.", "Heat flows.", "Entropy rises.", "Entropy rises."]);
        let e = HashedBagEmbedder::default();
        let hits = m.top_k(&e.embed("entropy rises"), 2);
        assert_eq!(hits.iter().map(|h| h.0).collect::<Vec<_>>(), vec![0, 2]);
    }

    #[test]
    fn zero_vector_sentences_are_never_hits() {
        let m = map(&["The of and.", "Entropy rises."]);
        let e = HashedBagEmbedder::default();
        let hits = m.top_k(&e.embed("entropy"), 5);
        assert_eq!(hits.len(), 1);
    }
}
