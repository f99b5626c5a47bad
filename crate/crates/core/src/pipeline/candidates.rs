use serde::{Deserialize, Serialize};

use crate::error::{ensure, ConfigError};
use crate::pipeline::transcript::Sentence;
use crate::summary::segment::DEFAULT_MIN_SENTENCE_TOKENS;

pub const DEFAULT_CUE_PHRASES: [&str; 8] = [
    "is defined as",
    "is called",
    "refers to",
    "means that",
    "in other words",
    "for example",
    "the key idea",
    "consists of",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    /// Lowercase phrases marking a sentence as a question point.
    pub cue_phrases: Vec<String>,
    /// Fallback spacing, in sentences, between question points.
    pub every_n: usize,
    pub min_sentence_tokens: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            cue_phrases: DEFAULT_CUE_PHRASES.iter().map(|s| s.to_string()).collect(),
            every_n: 8,
            min_sentence_tokens: DEFAULT_MIN_SENTENCE_TOKENS,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        ensure(self.every_n >= 1, "every_n", "must be >= 1")?;
        ensure(
            self.cue_phrases.iter().any(|c| !c.trim().is_empty()),
            "cue_phrases",
            "must contain at least one phrase",
        )
    }

    /// Reads one cue phrase per line; blank lines and `#` comments skipped.
    pub fn with_cue_file(mut self, contents: &str) -> Self {
        self.cue_phrases = contents
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(str::to_lowercase)
            .collect();
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Trigger {
    Cue(String),
    EveryN,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidatePoint {
    pub timestamp: f64,
    /// Zero-based position in the transcript's sentence list.
    pub sentence_index: usize,
    pub trigger: Trigger,
}

/// One point per sentence containing a cue phrase (case-insensitive), plus
/// one every `every_n` sentences since the last emitted point. A cue hit
/// restarts the count.
pub fn find_candidate_points(sentences: &[Sentence], config: &PipelineConfig) -> Vec<CandidatePoint> {
    let cues: Vec<String> = config
        .cue_phrases
        .iter()
        .map(|c| c.trim().to_lowercase())
        .filter(|c| !c.is_empty())
        .collect();
    let every_n = config.every_n.max(1);
    let mut points = Vec::new();
    let mut since_last = 0;
    for s in sentences {
        since_last += 1;
        let lower = s.text.to_lowercase();
        let trigger = if let Some(cue) = cues.iter().find(|c| lower.contains(c.as_str())) {
            Some(Trigger::Cue(cue.clone()))
        } else if since_last >= every_n {
            Some(Trigger::EveryN)
        } else {
            None
        };
        if let Some(trigger) = trigger {
            points.push(CandidatePoint {
                timestamp: s.t,
                sentence_index: s.index,
                trigger,
            });
            since_last = 0;
        }
    }
    points
}
