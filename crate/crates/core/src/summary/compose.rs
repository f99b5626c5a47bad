//! Post-session summary: mastered concepts, concepts to explore and
//! examples ranked against the learner's interests.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::exec::Execution;
use crate::pipeline::transcript::{Transcript, TranscriptSegment};
use crate::pipeline::BankFile;
use crate::session::{EventBody, Session, SessionError};
use crate::summary::classify::{classify_concepts, concept_of, ConceptStats};
use crate::summary::embed::Embedder;
use crate::summary::extract::{rank_order, ExcerptSpan, SemanticMap};
use crate::summary::segment::DEFAULT_MIN_SENTENCE_TOKENS;

pub const MASTERED_HEADER: &str = "Territory Mastered";
pub const DISCOVERY_HEADER: &str = "Discovery Zone";
pub const EXAMPLES_HEADER: &str = "Examples for you";
/// Sentences containing this phrase are always example candidates.
pub const EXAMPLE_CUE: &str = "for example";

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LearnerProfile {
    pub learner_id: String,
    #[serde(default)]
    pub interests: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct SummaryConfig {
    pub excerpts_per_concept: usize,
    pub hits_per_interest: usize,
    pub max_examples: usize,
    pub min_sentence_tokens: usize,
}

impl Default for SummaryConfig {
    fn default() -> Self {
        Self {
            excerpts_per_concept: 3,
            hits_per_interest: 5,
            max_examples: 3,
            min_sentence_tokens: DEFAULT_MIN_SENTENCE_TOKENS,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConceptSummary {
    pub concept: String,
    pub asked: u32,
    pub correct: u32,
    pub excerpts: Vec<ExcerptSpan>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailoredExample {
    pub sentence_index: usize,
    pub text: String,
    /// Best cosine against any interest tag.
    pub score: f64,
}

/// Everything a synthesizer gets to work with.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryContent {
    pub learner_id: String,
    pub mastered: Vec<ConceptSummary>,
    pub discovery: Vec<ConceptSummary>,
    pub tailored_examples: Vec<TailoredExample>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryReport {
    pub mastered: Vec<ConceptSummary>,
    pub discovery: Vec<ConceptSummary>,
    pub tailored_examples: Vec<TailoredExample>,
    pub rendered: String,
}

/// Turns structured summary content into text.
pub trait Synthesizer {
    fn render(&self, content: &SummaryContent) -> String;
}

/// Plain-text template. Same input, same bytes.
#[derive(Debug, Clone, Copy, Default)]
pub struct TemplateSynthesizer;

fn write_concepts(out: &mut String, concepts: &[ConceptSummary]) {
    if concepts.is_empty() {
        out.push_str("(nothing here yet)\n");
    }
    for c in concepts {
        if c.asked == 0 {
            let _ = writeln!(out, "- {} (not asked yet)", c.concept);
        } else {
            let _ = writeln!(out, "- {} ({}/{} correct)", c.concept, c.correct, c.asked);
        }
        for e in &c.excerpts {
            let _ = writeln!(out, "    > {}", e.text);
        }
    }
}

impl Synthesizer for TemplateSynthesizer {
    fn render(&self, content: &SummaryContent) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "Lesson summary for {}", content.learner_id);
        let _ = writeln!(out, "\n{MASTERED_HEADER}");
        write_concepts(&mut out, &content.mastered);
        let _ = writeln!(out, "\n{DISCOVERY_HEADER}");
        write_concepts(&mut out, &content.discovery);
        if !content.tailored_examples.is_empty() {
            let _ = writeln!(out, "\n{EXAMPLES_HEADER}");
            for e in &content.tailored_examples {
                let _ = writeln!(out, "- {}", e.text);
            }
        }
        out
    }
}

/// Per-concept counts over the whole bank. Concepts that were never served
/// appear with `asked = 0`. Sorted by concept.
pub fn concept_stats(session: &Session) -> Vec<ConceptStats> {
    let mut map: BTreeMap<String, (u32, u32)> = BTreeMap::new();
    for q in &session.bank.questions {
        map.entry(concept_of(&q.q)).or_default();
    }
    for event in &session.events {
        if let EventBody::AnswerSubmitted { question_id, correct, .. } = &event.body {
            if let Some(q) = session.bank.get(*question_id) {
                let entry = map.entry(concept_of(&q.q)).or_default();
                entry.0 += 1;
                entry.1 += u32::from(*correct);
            }
        }
    }
    map.into_iter()
        .map(|(concept, (asked, correct))| ConceptStats { concept, asked, correct })
        .collect()
}

/// A stand-in transcript built from the bank's context snippets, for when
/// the lecture transcript itself is unavailable.
pub fn transcript_from_bank(bank: &BankFile) -> Transcript {
    let mut segments: Vec<TranscriptSegment> = Vec::new();
    for q in &bank.questions {
        if q.c.trim().is_empty() || segments.iter().any(|s| s.u == q.c) {
            continue;
        }
        segments.push(TranscriptSegment {
            t: q.t,
            u: q.c.clone(),
            index: segments.len(),
        });
    }
    Transcript {
        source_id: bank.source_id.clone(),
        segments,
    }
}

fn tailored_examples(map: &SemanticMap, interests: &[String], embedder: &dyn Embedder, config: &SummaryConfig) -> Vec<TailoredExample> {
    let queries: Vec<_> = interests
        .iter()
        .map(|i| embedder.embed(i))
        .filter(|v| !v.is_zero())
        .collect();
    if queries.is_empty() || config.max_examples == 0 {
        return Vec::new();
    }
    let mut candidates: Vec<usize> = map
        .sentences()
        .iter()
        .filter(|s| s.text.to_lowercase().contains(EXAMPLE_CUE))
        .map(|s| s.index)
        .collect();
    for q in &queries {
        candidates.extend(map.top_k(q, config.hits_per_interest).into_iter().map(|(i, _)| i));
    }
    candidates.sort_unstable();
    candidates.dedup();
    let mut scored: Vec<(usize, f64)> = candidates
        .into_iter()
        .map(|i| {
            let v = &map.vectors()[i];
            let best = queries.iter().map(|q| v.dot(q)).fold(f64::NEG_INFINITY, f64::max);
            (i, best)
        })
        .collect();
    scored.sort_by(rank_order);
    scored.truncate(config.max_examples);
    scored
        .into_iter()
        .map(|(i, score)| TailoredExample {
            sentence_index: i,
            text: map.sentences()[i].text.clone(),
            score,
        })
        .collect()
}

/// Builds the summary for a finished session. A session counts as finished
/// once it has ended or all planned questions have been answered.
pub fn compose_summary(
    session: &Session,
    transcript: &Transcript,
    profile: &LearnerProfile,
    config: &SummaryConfig,
    embedder: &dyn Embedder,
    synthesizer: &dyn Synthesizer,
) -> Result<SummaryReport, SessionError> {
    let finished = session.is_ended()
        || (session.pending_question.is_none() && session.served_count >= session.config.planned_questions);
    if !finished {
        return Err(SessionError::NotEnded);
    }
    let map = SemanticMap::from_transcript(transcript, config.min_sentence_tokens, embedder, Execution::default());
    let classes = classify_concepts(&concept_stats(session));
    let with_excerpts = |stats: Vec<ConceptStats>| -> Vec<ConceptSummary> {
        stats
            .into_iter()
            .map(|s| ConceptSummary {
                excerpts: map.extract_relevant(&s.concept, embedder, config.excerpts_per_concept),
                concept: s.concept,
                asked: s.asked,
                correct: s.correct,
            })
            .collect()
    };
    let content = SummaryContent {
        learner_id: profile.learner_id.clone(),
        mastered: with_excerpts(classes.mastered),
        discovery: with_excerpts(classes.discovery),
        tailored_examples: tailored_examples(&map, &profile.interests, embedder, config),
    };
    let rendered = synthesizer.render(&content);
    Ok(SummaryReport {
        mastered: content.mastered,
        discovery: content.discovery,
        tailored_examples: content.tailored_examples,
        rendered,
    })
}
