//! Concept mastery classification.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConceptStats {
    pub concept: String,
    pub asked: u32,
    pub correct: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConceptClass {
    Mastered,
    Discovery,
    Neutral,
}

/// Mastered needs at least two attempts at ≥ 75% accuracy.
pub const MASTERY_MIN_ASKED: u32 = 2;
pub const MASTERY_ACCURACY: f64 = 0.75;
/// Below this accuracy (or never asked) a concept is still to explore.
pub const DISCOVERY_ACCURACY: f64 = 0.5;

pub fn classify(stats: &ConceptStats) -> ConceptClass {
    if stats.asked == 0 {
        return ConceptClass::Discovery;
    }
    let accuracy = stats.correct as f64 / stats.asked as f64;
    if stats.asked >= MASTERY_MIN_ASKED && accuracy >= MASTERY_ACCURACY {
        ConceptClass::Mastered
    } else if accuracy < DISCOVERY_ACCURACY {
        ConceptClass::Discovery
    } else {
        ConceptClass::Neutral
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Classification {
    pub mastered: Vec<ConceptStats>,
    pub discovery: Vec<ConceptStats>,
    pub neutral: Vec<ConceptStats>,
}

/// Partitions concepts into the three classes, preserving input order.
pub fn classify_concepts(stats: &[ConceptStats]) -> Classification {
    let mut out = Classification::default();
    for s in stats {
        let bucket = match classify(s) {
            ConceptClass::Mastered => &mut out.mastered,
            ConceptClass::Discovery => &mut out.discovery,
            ConceptClass::Neutral => &mut out.neutral,
        };
        bucket.push(s.clone());
    }
    out
}

/// The subject of a question stem: the X of "What is X?" and the other
/// stem templates. Falls back to the stem without its final punctuation.
pub fn concept_of(stem: &str) -> String {
    let s = stem.trim().trim_end_matches(['?', '.', '!']).trim();
    const PATTERNS: [(&str, &str); 5] = [
        ("what is ", ""),
        ("what are ", ""),
        ("what does ", " refer to"),
        ("what does ", " consist of"),
        ("predict what happens if ", ""),
    ];
    let lower = s.to_lowercase();
    for (prefix, suffix) in PATTERNS {
        if lower.starts_with(prefix) && lower.ends_with(suffix) && lower.len() > prefix.len() + suffix.len() {
            return lower[prefix.len()..lower.len() - suffix.len()].trim().to_string();
        }
    }
    lower
}
