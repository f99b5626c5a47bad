//! Question generation for candidate points.
//!
//! [`QuestionGenerator`] is the provider contract: given a point it either
//! produces a record or skips. [`ClozeGenerator`] is the default,
//! template-based backend. It recognises definitional sentences
//! ("X is defined as Y", "X refers to Y", "Y is called X", "X consists of
//! Y") and conditional examples ("For example, if A, B") and draws
//! distractors from answers already in the bank, then from answers to the
//! transcript's other definitional sentences.

use crate::pipeline::bank::{AnswerKey, QuestionRecord};
use crate::pipeline::candidates::CandidatePoint;
use crate::pipeline::rate::rate_difficulty;
use crate::pipeline::transcript::Sentence;
use crate::summary::embed::token_hash;

pub const MAX_DISTRACTORS: usize = 3;
const MAX_TERM_WORDS: usize = 8;
const MAX_ANSWER_WORDS: usize = 25;

pub trait QuestionGenerator {
    /// Returns `None` to skip the point.
    fn generate(&self, point: &CandidatePoint, sentences: &[Sentence], bank_so_far: &[QuestionRecord]) -> Option<QuestionRecord>;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct ClozeGenerator;

/// A stem and its correct answer extracted from one sentence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Extraction {
    pub stem: String,
    pub answer: String,
}

enum Template {
    /// `X <cue> Y` asks for Y given X.
    Forward { cue: &'static str, stem: fn(&str) -> String },
    /// `Y <cue> X` asks for Y given X.
    Reverse { cue: &'static str },
}

const TEMPLATES: &[Template] = &[
    Template::Forward { cue: " is defined as ", stem: |x| format!("What is {x}?") },
    Template::Forward { cue: " are defined as ", stem: |x| format!("What are {x}?") },
    Template::Forward { cue: " refers to ", stem: |x| format!("What does {x} refer to?") },
    Template::Forward { cue: " consists of ", stem: |x| format!("What does {x} consist of?") },
    Template::Reverse { cue: " is called " },
];

impl ClozeGenerator {
    /// Applies the sentence templates. Public so other backends can reuse it.
    pub fn extract(sentence: &str) -> Option<Extraction> {
        let sentence = sentence.trim();
        let lower = sentence.to_ascii_lowercase();

        if let Some(e) = conditional_example(sentence, &lower) {
            return Some(e);
        }
        for template in TEMPLATES {
            let cue = match template {
                Template::Forward { cue, .. } | Template::Reverse { cue } => *cue,
            };
            let Some(at) = lower.find(cue) else { continue };
            let left = &sentence[..at];
            let right = &sentence[at + cue.len()..];
            let (term, answer) = match template {
                Template::Forward { .. } => (subject(left)?, answer_text(right)?),
                Template::Reverse { .. } => (subject(&strip_terminal(right))?, answer_text(&lower_first(&clause_tail(left)))?),
            };
            let stem = match template {
                Template::Forward { stem, .. } => stem(&term),
                Template::Reverse { .. } => format!("What is {term}?"),
            };
            return Some(Extraction { stem, answer });
        }
        None
    }
}

/// "For example, if A, B." asks to predict B from A.
fn conditional_example(sentence: &str, lower: &str) -> Option<Extraction> {
    const CUE: &str = "for example, if ";
    let at = lower.find(CUE)?;
    let rest = &sentence[at + CUE.len()..];
    let (cond, result) = rest.split_once(", ")?;
    let result = result.trim();
    let result = result
        .strip_prefix("then ")
        .or_else(|| result.strip_prefix("Then "))
        .unwrap_or(result);
    let cond = cond.trim();
    if cond.is_empty() {
        return None;
    }
    Some(Extraction {
        stem: format!("Predict what happens if {cond}."),
        answer: answer_text(result)?,
    })
}

/// Text after the last clause separator, without a leading discourse comma.
fn clause_tail(text: &str) -> String {
    let start = text.rfind([',', ';', ':']).map_or(0, |i| i + 1);
    text[start..].trim().to_string()
}

fn subject(left: &str) -> Option<String> {
    let term = clause_tail(left);
    let term = term.trim_matches(|c: char| c == '"' || c == '\'' || c.is_whitespace());
    let words = term.split_whitespace().count();
    if words == 0 || words > MAX_TERM_WORDS {
        return None;
    }
    Some(lower_first(term))
}

fn strip_terminal(text: &str) -> String {
    text.trim().trim_end_matches(['.', '!', '?']).trim().to_string()
}

fn answer_text(right: &str) -> Option<String> {
    let a = strip_terminal(right);
    let words = a.split_whitespace().count();
    if words == 0 || words > MAX_ANSWER_WORDS {
        return None;
    }
    Some(a)
}

/// Lowercases the first letter unless the first word is an acronym.
fn lower_first(text: &str) -> String {
    let first_word = text.split_whitespace().next().unwrap_or("");
    let acronym = first_word.chars().filter(|c| c.is_alphabetic()).count() > 1
        && first_word.chars().filter(|c| c.is_alphabetic()).all(char::is_uppercase);
    if acronym {
        return text.to_string();
    }
    let mut chars = text.chars();
    match chars.next() {
        Some(c) => c.to_lowercase().chain(chars).collect(),
        None => String::new(),
    }
}

impl QuestionGenerator for ClozeGenerator {
    fn generate(&self, point: &CandidatePoint, sentences: &[Sentence], bank_so_far: &[QuestionRecord]) -> Option<QuestionRecord> {
        let sentence = sentences.get(point.sentence_index)?;
        let Extraction { stem, answer } = Self::extract(&sentence.text)?;

        // bank answers first (most recent first), then answers extracted
        // from the transcript's other sentences (nearest first)
        let from_bank = bank_so_far.iter().rev().filter_map(|r| r.correct_option().map(str::to_string));
        let mut others: Vec<&Sentence> = sentences.iter().filter(|s| s.index != sentence.index).collect();
        others.sort_by_key(|s| (s.index.abs_diff(sentence.index), s.index));
        let from_siblings = others.into_iter().filter_map(|s| Self::extract(&s.text)).map(|e| e.answer);
        let mut distractors: Vec<String> = Vec::new();
        for opt in from_bank.chain(from_siblings) {
            let dup = opt.eq_ignore_ascii_case(&answer) || distractors.iter().any(|d| d.eq_ignore_ascii_case(&opt));
            if !dup {
                distractors.push(opt);
            }
            if distractors.len() == MAX_DISTRACTORS {
                break;
            }
        }
        if distractors.is_empty() {
            return None;
        }

        // position depends only on the stem, so recompiles are stable
        let correct_index = (token_hash(&stem) % (distractors.len() as u64 + 1)) as usize;
        let mut options = distractors;
        options.insert(correct_index, answer);

        let lo = point.sentence_index.saturating_sub(1);
        let hi = (point.sentence_index + 1).min(sentences.len() - 1);
        let context = sentences[lo..=hi]
            .iter()
            .map(|s| s.text.as_str())
            .collect::<Vec<_>>()
            .join(" ");

        Some(QuestionRecord {
            d: rate_difficulty(&stem),
            q: stem,
            a: AnswerKey { options, correct_index },
            t: point.timestamp,
            c: context,
        })
    }
}
