//! Session events and their JSONL encoding.

use serde::{Deserialize, Serialize};

use crate::level::Difficulty;
use crate::model::{QuestionId, RewardBreakdown};
use crate::pipeline::BankFile;
use crate::policy::DecisionTrace;
use crate::session::{SessionConfig, SessionError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EndReason {
    /// All planned questions were served and answered.
    Completed,
    /// No unserved question was left in the bank.
    BankExhausted,
    /// Ended on request.
    Stopped,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "payload", rename_all = "snake_case")]
#[allow(clippy::large_enum_variant)]
pub enum EventBody {
    /// Carries the full bank so a log replays without outside state.
    Created {
        session_id: String,
        config: SessionConfig,
        bank: BankFile,
    },
    QuestionServed {
        question_id: QuestionId,
        difficulty: Difficulty,
        /// The bank had nothing left at the sampled level.
        fallback: bool,
        trace: DecisionTrace,
    },
    AnswerSubmitted {
        question_id: QuestionId,
        choice: usize,
        response_time: f64,
        correct: bool,
        reward: RewardBreakdown,
    },
    LevelChanged {
        from: Difficulty,
        to: Difficulty,
    },
    SessionEnded {
        reason: EndReason,
    },
}

impl EventBody {
    pub fn kind(&self) -> &'static str {
        match self {
            EventBody::Created { .. } => "created",
            EventBody::QuestionServed { .. } => "question_served",
            EventBody::AnswerSubmitted { .. } => "answer_submitted",
            EventBody::LevelChanged { .. } => "level_changed",
            EventBody::SessionEnded { .. } => "session_ended",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionEvent {
    pub seq: u64,
    /// Milliseconds since the Unix epoch.
    pub wall_time: u64,
    #[serde(flatten)]
    pub body: EventBody,
}

impl SessionEvent {
    pub fn to_json_line(&self) -> String {
        let mut line = serde_json::to_string(self).expect("events always serialize");
        line.push('\n');
        line
    }
}

pub fn to_jsonl(events: &[SessionEvent]) -> String {
    events.iter().map(SessionEvent::to_json_line).collect()
}

/// Parses a JSONL event log. Malformed lines and unknown event kinds are
/// reported as corruption at the line's `seq` (or its line index when the
/// `seq` itself is unreadable).
pub fn parse_jsonl(text: &str) -> Result<Vec<SessionEvent>, SessionError> {
    let mut events = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let value: serde_json::Value = serde_json::from_str(line).map_err(|e| SessionError::Corruption {
            seq: i as u64,
            reason: format!("line {}: {e}", i + 1),
        })?;
        let seq = value.get("seq").and_then(serde_json::Value::as_u64).unwrap_or(i as u64);
        let event: SessionEvent = serde_json::from_value(value).map_err(|e| SessionError::Corruption {
            seq,
            reason: format!("line {}: {e}", i + 1),
        })?;
        events.push(event);
    }
    Ok(events)
}
