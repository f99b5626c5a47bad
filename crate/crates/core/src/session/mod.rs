//! Event-sourced learning sessions.
//!
//! A [`Session`] is the fold of its event log. Live operations validate the
//! request, build the events it produces and feed them through the same
//! [`Session::apply`] that [`replay`] uses. `apply` recomputes every
//! decision and reward from the state it has so far and rejects an event
//! that disagrees, so a replayed log either reproduces the live session
//! exactly or fails with a corruption error naming the offending `seq`.

pub mod event;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::irt::LadderState;
use crate::level::{Difficulty, PerLevel};
use crate::model::{AnswerOutcome, QuestionId, RewardBreakdown};
use crate::pipeline::{BankFile, QuestionRecord, Violation};
use crate::policy::{DecisionTrace, PolicyConfig, PolicyError, PolicyState};

pub use event::{parse_jsonl, to_jsonl, EndReason, EventBody, SessionEvent};

/// Client-reported response times are clamped to this many time limits.
pub const MAX_RESPONSE_TIME_FACTOR: f64 = 10.0;

fn default_time_limit() -> f64 {
    30.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionConfig {
    pub bank_id: String,
    pub learner_id: String,
    pub planned_questions: u32,
    pub rng_seed: u64,
    /// Seconds per question.
    #[serde(default = "default_time_limit")]
    pub time_limit: f64,
    /// Free-text interest tags used to pick summary examples.
    #[serde(default)]
    pub interests: Vec<String>,
    #[serde(flatten)]
    pub policy: PolicyConfig,
}

impl SessionConfig {
    pub fn new(bank_id: impl Into<String>, learner_id: impl Into<String>, planned_questions: u32, rng_seed: u64) -> Self {
        Self {
            bank_id: bank_id.into(),
            learner_id: learner_id.into(),
            planned_questions,
            rng_seed,
            time_limit: default_time_limit(),
            interests: Vec::new(),
            policy: PolicyConfig::default(),
        }
    }

    pub fn validate(&self, bank_len: usize) -> Result<(), SessionError> {
        if self.planned_questions == 0 {
            return Err(SessionError::Validation("planned_questions must be at least 1".into()));
        }
        if self.planned_questions as usize > bank_len {
            return Err(SessionError::Validation(format!(
                "planned_questions ({}) exceeds the bank size ({bank_len})",
                self.planned_questions
            )));
        }
        if !(self.time_limit.is_finite() && self.time_limit > 0.0) {
            return Err(SessionError::Validation("time_limit must be > 0".into()));
        }
        self.effective_policy()
            .validate()
            .map_err(|e| SessionError::Validation(e.to_string()))
    }

    /// The policy configuration with the blend's progress denominator tied
    /// to this session's length.
    pub fn effective_policy(&self) -> PolicyConfig {
        let mut p = self.policy.clone();
        p.blend.planned_questions = self.planned_questions.max(1);
        p
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SessionError {
    #[error("validation failed: {0}")]
    Validation(String),
    #[error("bank failed validation ({} violations)", .0.len())]
    InvalidBank(Vec<Violation>),
    #[error("protocol error: {0}")]
    Protocol(String),
    #[error("conflict: {0}")]
    Conflict(String),
    #[error("session has ended")]
    Ended,
    #[error("session is still active")]
    NotEnded,
    #[error("corrupt event log at seq {seq}: {reason}")]
    Corruption { seq: u64, reason: String },
    #[error(transparent)]
    Policy(#[from] PolicyError),
}

impl SessionError {
    /// Stable machine-readable code.
    pub fn code(&self) -> &'static str {
        match self {
            SessionError::Validation(_) => "validation",
            SessionError::InvalidBank(_) => "invalid_bank",
            SessionError::Protocol(_) => "protocol",
            SessionError::Conflict(_) => "conflict",
            SessionError::Ended => "session_ended",
            SessionError::NotEnded => "session_active",
            SessionError::Corruption { .. } => "corrupt_log",
            SessionError::Policy(_) => "policy",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SessionStatus {
    Active,
    Ended,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Progress {
    pub answered: u32,
    pub served: u32,
    pub planned: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ServedQuestion {
    pub question_id: QuestionId,
    pub record: QuestionRecord,
    /// Level of the served question.
    pub difficulty: Difficulty,
    pub fallback: bool,
    pub trace: DecisionTrace,
    pub progress: Progress,
}

#[derive(Debug, Clone, PartialEq)]
pub enum NextQuestion {
    Served(Box<ServedQuestion>),
    Ended(EndReason),
}

/// The numbers a client shows next to the current question.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateSnapshot {
    pub session_id: String,
    pub status: SessionStatus,
    pub progress: Progress,
    pub skill: f64,
    pub recent_accuracy: f64,
    pub norm_response_time: f64,
    pub streak_momentum: f64,
    pub learning_velocity: f64,
    pub confidence: f64,
    pub correct_streak: u32,
    pub ladder: LadderState,
    pub q_values: PerLevel<f64>,
    pub epsilon: f64,
    /// Blend weight the next decision will use.
    pub blend_weight: f64,
    pub last_decision: Option<DecisionTrace>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnswerResult {
    pub question_id: QuestionId,
    pub correct: bool,
    pub correct_index: usize,
    pub reward: RewardBreakdown,
    /// Level the next question will be drawn at (the current level once the
    /// session is complete).
    pub new_level: Difficulty,
    pub session_complete: bool,
    pub state: StateSnapshot,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Session {
    pub id: String,
    pub config: SessionConfig,
    pub bank: BankFile,
    pub policy: PolicyState,
    pub served: Vec<bool>,
    pub served_count: u32,
    pub pending_question: Option<QuestionId>,
    pub status: SessionStatus,
    pub events: Vec<SessionEvent>,
    policy_config: PolicyConfig,
}

fn corrupt(seq: u64, reason: impl Into<String>) -> SessionError {
    SessionError::Corruption {
        seq,
        reason: reason.into(),
    }
}

impl Session {
    /// Starts a session: fresh learner, zeroed Q-table, ladder at the start
    /// level (Easy by default).
    pub fn create(id: impl Into<String>, config: SessionConfig, bank: BankFile, now_ms: u64) -> Result<Session, SessionError> {
        let violations = bank.violations();
        if !violations.is_empty() {
            return Err(SessionError::InvalidBank(violations));
        }
        config.validate(bank.len())?;
        let created = SessionEvent {
            seq: 0,
            wall_time: now_ms,
            body: EventBody::Created {
                session_id: id.into(),
                config,
                bank,
            },
        };
        Session::from_created(created)
    }

    fn from_created(event: SessionEvent) -> Result<Session, SessionError> {
        if event.seq != 0 {
            return Err(corrupt(event.seq, "log must start at seq 0"));
        }
        let EventBody::Created { session_id, config, bank } = &event.body else {
            return Err(corrupt(0, "first event must be `created`"));
        };
        let violations = bank.violations();
        if !violations.is_empty() {
            return Err(corrupt(0, format!("embedded bank is invalid: {}", violations[0])));
        }
        config
            .validate(bank.len())
            .map_err(|e| corrupt(0, e.to_string()))?;
        let policy_config = config.effective_policy();
        Ok(Session {
            id: session_id.clone(),
            config: config.clone(),
            bank: bank.clone(),
            policy: PolicyState::new(&policy_config),
            served: vec![false; bank.len()],
            served_count: 0,
            pending_question: None,
            status: SessionStatus::Active,
            events: vec![event],
            policy_config,
        })
    }

    pub fn policy_config(&self) -> &PolicyConfig {
        &self.policy_config
    }

    pub fn is_ended(&self) -> bool {
        self.status == SessionStatus::Ended
    }

    pub fn progress(&self) -> Progress {
        Progress {
            answered: self.policy.learner.answered_count,
            served: self.served_count,
            planned: self.config.planned_questions,
        }
    }

    fn decision_seed(&self) -> u64 {
        self.config.rng_seed.wrapping_add(self.served_count as u64)
    }

    /// Earliest unserved question (lowest `t`, then bank order) at `want`,
    /// else at the nearest level with questions left (easier first on
    /// ties). Returns the question and whether it came from a fallback level.
    fn select_question(&self, want: Difficulty) -> Option<(QuestionId, bool)> {
        let mut levels = Difficulty::ALL;
        levels.sort_by_key(|d| (d.distance(want), *d));
        levels.into_iter().find_map(|d| {
            self.bank
                .questions
                .iter()
                .enumerate()
                .filter(|(i, q)| q.d == d && !self.served[*i])
                .min_by(|a, b| a.1.t.total_cmp(&b.1.t).then(a.0.cmp(&b.0)))
                .map(|(i, _)| (QuestionId(i as u32), d != want))
        })
    }

    fn next_seq(&self) -> u64 {
        self.events.len() as u64
    }

    fn push(&mut self, now_ms: u64, body: EventBody) -> Result<(), SessionError> {
        let event = SessionEvent {
            seq: self.next_seq(),
            wall_time: now_ms,
            body,
        };
        self.apply(event)
    }

    /// Serves the next question, or ends the session when the plan is done
    /// or the bank is exhausted.
    pub fn next_question(&mut self, now_ms: u64) -> Result<NextQuestion, SessionError> {
        if self.is_ended() {
            return Err(SessionError::Ended);
        }
        if let Some(q) = self.pending_question {
            return Err(SessionError::Protocol(format!("question {q} is still awaiting an answer")));
        }
        if self.served_count >= self.config.planned_questions {
            self.push(now_ms, EventBody::SessionEnded { reason: EndReason::Completed })?;
            return Ok(NextQuestion::Ended(EndReason::Completed));
        }
        let (sampled, trace) = self.policy.choose_difficulty(&self.policy_config, self.decision_seed());
        let Some((question_id, fallback)) = self.select_question(sampled) else {
            self.push(now_ms, EventBody::SessionEnded { reason: EndReason::BankExhausted })?;
            return Ok(NextQuestion::Ended(EndReason::BankExhausted));
        };
        let current = self.policy.ladder.current_level;
        if sampled != current {
            self.push(now_ms, EventBody::LevelChanged { from: current, to: sampled })?;
        }
        let record = self.bank.questions[question_id.0 as usize].clone();
        self.push(
            now_ms,
            EventBody::QuestionServed {
                question_id,
                difficulty: record.d,
                fallback,
                trace: trace.clone(),
            },
        )?;
        Ok(NextQuestion::Served(Box::new(ServedQuestion {
            question_id,
            difficulty: record.d,
            record,
            fallback,
            trace,
            progress: self.progress(),
        })))
    }

    /// Scores the pending question and updates the policy.
    pub fn submit_answer(&mut self, question_id: QuestionId, choice: usize, response_time: f64, now_ms: u64) -> Result<AnswerResult, SessionError> {
        if self.is_ended() {
            return Err(SessionError::Ended);
        }
        match self.pending_question {
            Some(p) if p == question_id => {}
            Some(p) => return Err(SessionError::Conflict(format!("question {question_id} is not pending (pending: {p})"))),
            None => return Err(SessionError::Conflict(format!("no question is pending; {question_id} was already answered or never served"))),
        }
        let question = &self.bank.questions[question_id.0 as usize];
        if choice >= question.a.options.len() {
            return Err(SessionError::Validation(format!(
                "choice {choice} is out of range for {} options",
                question.a.options.len()
            )));
        }
        if response_time.is_nan() {
            return Err(SessionError::Validation("response_time must be a number".into()));
        }
        let response_time = response_time.clamp(0.0, MAX_RESPONSE_TIME_FACTOR * self.config.time_limit);
        let correct = choice == question.a.correct_index;
        let correct_index = question.a.correct_index;
        let outcome = self.outcome(question_id, correct, response_time);
        let (_, reward) = self.policy.step(&outcome, &self.policy_config)?;
        self.push(
            now_ms,
            EventBody::AnswerSubmitted {
                question_id,
                choice,
                response_time,
                correct,
                reward,
            },
        )?;
        let session_complete = self.served_count >= self.config.planned_questions;
        let new_level = if session_complete {
            self.policy.ladder.current_level
        } else {
            self.policy.choose_difficulty(&self.policy_config, self.decision_seed()).0
        };
        Ok(AnswerResult {
            question_id,
            correct,
            correct_index,
            reward,
            new_level,
            session_complete,
            state: self.snapshot(),
        })
    }

    /// Ends the session on request.
    pub fn end(&mut self, now_ms: u64) -> Result<(), SessionError> {
        if self.is_ended() {
            return Err(SessionError::Ended);
        }
        self.push(now_ms, EventBody::SessionEnded { reason: EndReason::Stopped })
    }

    fn outcome(&self, question_id: QuestionId, correct: bool, response_time: f64) -> AnswerOutcome {
        AnswerOutcome {
            question_id,
            difficulty: self.bank.questions[question_id.0 as usize].d,
            correct,
            response_time,
            time_limit: self.config.time_limit,
        }
    }

    pub fn snapshot(&self) -> StateSnapshot {
        let l = &self.policy.learner;
        StateSnapshot {
            session_id: self.id.clone(),
            status: self.status,
            progress: self.progress(),
            skill: l.skill,
            recent_accuracy: l.recent_accuracy,
            norm_response_time: l.norm_response_time,
            streak_momentum: l.streak_momentum,
            learning_velocity: l.learning_velocity,
            confidence: l.confidence,
            correct_streak: l.correct_streak,
            ladder: self.policy.ladder,
            q_values: self.policy.qtable.q_values,
            epsilon: self.policy.qtable.epsilon,
            blend_weight: self.policy.current_weight(&self.policy_config),
            last_decision: self.policy.decision_trace.clone(),
        }
    }

    /// Folds one event into the session, re-deriving and checking every
    /// decision it records.
    pub fn apply(&mut self, event: SessionEvent) -> Result<(), SessionError> {
        let seq = event.seq;
        if seq != self.next_seq() {
            return Err(corrupt(seq, format!("expected seq {}", self.next_seq())));
        }
        if self.is_ended() {
            return Err(corrupt(seq, "event after session_ended"));
        }
        match &event.body {
            EventBody::Created { .. } => return Err(corrupt(seq, "duplicate `created` event")),
            EventBody::LevelChanged { from, to } => {
                if self.pending_question.is_some() {
                    return Err(corrupt(seq, "level change while a question is pending"));
                }
                if *from != self.policy.ladder.current_level || from == to {
                    return Err(corrupt(seq, format!("level change {from} -> {to} does not match ladder")));
                }
            }
            EventBody::QuestionServed {
                question_id,
                difficulty,
                fallback,
                trace,
            } => {
                if self.pending_question.is_some() {
                    return Err(corrupt(seq, "question served while another is pending"));
                }
                if self.served_count >= self.config.planned_questions {
                    return Err(corrupt(seq, "more questions served than planned"));
                }
                let (sampled, expected) = self.policy.choose_difficulty(&self.policy_config, self.decision_seed());
                if &expected != trace {
                    return Err(corrupt(seq, "decision trace does not match the replayed policy"));
                }
                if self.select_question(sampled) != Some((*question_id, *fallback)) {
                    return Err(corrupt(seq, "served question does not match the selection rule"));
                }
                if self.bank.get(*question_id).map(|q| q.d) != Some(*difficulty) {
                    return Err(corrupt(seq, "served difficulty does not match the bank"));
                }
                let current = self.policy.ladder.current_level;
                let announced = match self.events.last().map(|e| &e.body) {
                    Some(EventBody::LevelChanged { from, to }) => Some((*from, *to)),
                    _ => None,
                };
                let expected_change = (sampled != current).then_some((current, sampled));
                if announced != expected_change {
                    return Err(corrupt(seq, "level_changed event missing or inconsistent"));
                }
                self.policy = self.policy.commit(trace, *difficulty);
                self.served[question_id.0 as usize] = true;
                self.served_count += 1;
                self.pending_question = Some(*question_id);
            }
            EventBody::AnswerSubmitted {
                question_id,
                choice,
                response_time,
                correct,
                reward,
            } => {
                if self.pending_question != Some(*question_id) {
                    return Err(corrupt(seq, format!("answer for {question_id} without a matching served question")));
                }
                let question = &self.bank.questions[question_id.0 as usize];
                if *choice >= question.a.options.len() || (*choice == question.a.correct_index) != *correct {
                    return Err(corrupt(seq, "choice does not match the recorded correctness"));
                }
                let limit = MAX_RESPONSE_TIME_FACTOR * self.config.time_limit;
                if !(response_time.is_finite() && (0.0..=limit).contains(response_time)) {
                    return Err(corrupt(seq, "response_time outside the accepted range"));
                }
                let outcome = self.outcome(*question_id, *correct, *response_time);
                let (policy, recomputed) = self
                    .policy
                    .step(&outcome, &self.policy_config)
                    .map_err(|e| corrupt(seq, e.to_string()))?;
                if &recomputed != reward {
                    return Err(corrupt(seq, "recorded reward does not match the replayed reward"));
                }
                self.policy = policy;
                self.pending_question = None;
            }
            EventBody::SessionEnded { .. } => {
                self.pending_question = None;
                self.status = SessionStatus::Ended;
            }
        }
        self.events.push(event);
        Ok(())
    }
}

/// Rebuilds a session from its event log.
pub fn replay(events: &[SessionEvent]) -> Result<Session, SessionError> {
    let (first, rest) = events
        .split_first()
        .ok_or_else(|| corrupt(0, "empty event log"))?;
    let mut session = Session::from_created(first.clone())?;
    for event in rest {
        session.apply(event.clone())?;
    }
    Ok(session)
}

#[cfg(test)]
mod tests;
