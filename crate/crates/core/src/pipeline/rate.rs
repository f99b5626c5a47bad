//! Rule-based difficulty rating of question stems.
//!
//! Applied stems ("apply", "predict", ...) are Hard, conceptual stems
//! ("why", "how", ...) are Medium and factual stems ("what is", ...) are
//! Easy. Rules are checked in that order; stems matching nothing are Medium.

use crate::level::Difficulty;

const HARD: &[&str] = &[
    "apply",
    "applies",
    "applying",
    "predict",
    "predicts",
    "calculate",
    "compute",
    "estimate",
    "design",
    "what would happen",
];
const MEDIUM: &[&str] = &["why", "how", "explain", "compare", "contrast", "describe"];
const EASY: &[&str] = &["what is", "what are", "who", "when", "define", "name", "which"];

fn words(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric() && c != '\'')
        .filter(|w| !w.is_empty())
        .map(str::to_lowercase)
        .collect()
}

/// True when the word sequence of `phrase` occurs in `haystack`.
fn has_phrase(haystack: &[String], phrase: &str) -> bool {
    let needle: Vec<&str> = phrase.split(' ').collect();
    haystack
        .windows(needle.len())
        .any(|w| w.iter().zip(&needle).all(|(a, b)| a == b))
}

pub fn rate_difficulty(stem: &str) -> Difficulty {
    let w = words(stem);
    let hit = |rules: &[&str]| rules.iter().any(|r| has_phrase(&w, r));
    if hit(HARD) {
        Difficulty::Hard
    } else if hit(MEDIUM) {
        Difficulty::Medium
    } else if hit(EASY) {
        Difficulty::Easy
    } else {
        Difficulty::Medium
    }
}
