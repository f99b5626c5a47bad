//! Learner state vector and composite reward.
//!
//! The state tracks six quantities after every answer: skill on the logit
//! scale, windowed accuracy, an EWMA of normalized response time, capped
//! streak momentum, learning velocity (accuracy delta between the last two
//! windows) and an evidence-count confidence.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::error::{ensure, ConfigError};
use crate::irt::{success_probability, ItemParams};
use crate::level::Difficulty;

/// Identifier of a question within its bank (its position in the canonical
/// file).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct QuestionId(pub u32);

impl std::fmt::Display for QuestionId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnswerOutcome {
    pub question_id: QuestionId,
    pub difficulty: Difficulty,
    pub correct: bool,
    /// Seconds.
    pub response_time: f64,
    /// Seconds.
    pub time_limit: f64,
}

impl AnswerOutcome {
    pub fn validate(&self) -> Result<(), ModelError> {
        if !(self.response_time.is_finite() && self.response_time >= 0.0) {
            return Err(ModelError::InvalidOutcome("response_time must be finite and >= 0"));
        }
        if !(self.time_limit.is_finite() && self.time_limit > 0.0) {
            return Err(ModelError::InvalidOutcome("time_limit must be finite and > 0"));
        }
        Ok(())
    }

    /// response_time / time_limit clamped to [0, 1].
    pub fn time_fraction(&self) -> f64 {
        (self.response_time / self.time_limit).clamp(0.0, 1.0)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("invalid answer outcome: {0}")]
    InvalidOutcome(&'static str),
    #[error("question {0} was already answered by the previous outcome")]
    DoubleSubmit(QuestionId),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelConfig {
    pub accuracy_window: u32,
    /// EWMA weight of the newest normalized response time.
    pub ewma_beta: f64,
    pub streak_cap: u32,
    pub velocity_window: u32,
    /// Answers needed for confidence to saturate at 1.
    pub confidence_saturation: u32,
    /// Step size of the skill update.
    pub elo_gain: f64,
    pub skill_clamp: f64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            accuracy_window: 5,
            ewma_beta: 0.3,
            streak_cap: 5,
            velocity_window: 5,
            confidence_saturation: 15,
            elo_gain: 0.4,
            skill_clamp: 3.0,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        ensure(self.accuracy_window >= 1, "accuracy_window", "must be >= 1")?;
        ensure(self.streak_cap >= 1, "streak_cap", "must be >= 1")?;
        ensure(self.velocity_window >= 1, "velocity_window", "must be >= 1")?;
        ensure(self.confidence_saturation >= 1, "confidence_saturation", "must be >= 1")?;
        ensure(self.ewma_beta > 0.0 && self.ewma_beta <= 1.0, "ewma_beta", "must be in (0, 1]")?;
        ensure(self.elo_gain > 0.0 && self.elo_gain.is_finite(), "elo_gain", "must be > 0")?;
        ensure(self.skill_clamp > 0.0 && self.skill_clamp.is_finite(), "skill_clamp", "must be > 0")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LearnerState {
    /// Ability estimate on the logit scale.
    pub skill: f64,
    pub recent_accuracy: f64,
    pub norm_response_time: f64,
    pub streak_momentum: f64,
    pub learning_velocity: f64,
    pub confidence: f64,
    pub answer_history: Vec<AnswerOutcome>,
    pub correct_streak: u32,
    pub answered_count: u32,
}

impl LearnerState {
    /// Cold start: no pretest, skill at the population mean and accuracy at
    /// maximum ignorance.
    pub fn init(_config: &ModelConfig) -> Self {
        Self {
            skill: 0.0,
            recent_accuracy: 0.5,
            norm_response_time: 0.5,
            streak_momentum: 0.0,
            learning_velocity: 0.0,
            confidence: 0.0,
            answer_history: Vec::new(),
            correct_streak: 0,
            answered_count: 0,
        }
    }

    /// The six-component state vector, in the order skill, accuracy, time,
    /// momentum, velocity, confidence.
    pub fn vector(&self) -> [f64; 6] {
        [
            self.skill,
            self.recent_accuracy,
            self.norm_response_time,
            self.streak_momentum,
            self.learning_velocity,
            self.confidence,
        ]
    }

    /// Returns the state after `outcome` on a question with parameters `item`.
    pub fn update(
        &self,
        outcome: &AnswerOutcome,
        item: &ItemParams,
        config: &ModelConfig,
    ) -> Result<LearnerState, ModelError> {
        outcome.validate()?;
        if let Some(prev) = self.answer_history.last() {
            if prev.question_id == outcome.question_id {
                return Err(ModelError::DoubleSubmit(outcome.question_id));
            }
        }

        let mut next = self.clone();
        next.answer_history.push(outcome.clone());
        next.answered_count = next.answer_history.len() as u32;
        let history = &next.answer_history;

        next.recent_accuracy = window_accuracy(history, 0, config.accuracy_window as usize)
            .expect("history is non-empty");

        let beta = config.ewma_beta;
        next.norm_response_time =
            ((1.0 - beta) * self.norm_response_time + beta * outcome.time_fraction()).clamp(0.0, 1.0);

        next.correct_streak = if outcome.correct { self.correct_streak + 1 } else { 0 };
        next.streak_momentum = streak_momentum(next.correct_streak, config.streak_cap);

        let w = config.velocity_window as usize;
        next.learning_velocity = if history.len() >= 2 * w {
            let last = window_accuracy(history, 0, w).unwrap_or(0.0);
            let previous = window_accuracy(history, w, w).unwrap_or(0.0);
            (last - previous).clamp(-1.0, 1.0)
        } else {
            0.0
        };

        next.confidence = (next.answered_count as f64 / config.confidence_saturation as f64).min(1.0);

        let y = if outcome.correct { 1.0 } else { 0.0 };
        let p = success_probability(self.skill, item);
        next.skill = (self.skill + config.elo_gain * (y - p))
            .clamp(-config.skill_clamp, config.skill_clamp);

        Ok(next)
    }
}

/// Mean correctness of up to `len` answers, skipping the newest `skip`.
fn window_accuracy(history: &[AnswerOutcome], skip: usize, len: usize) -> Option<f64> {
    let end = history.len().checked_sub(skip)?;
    let start = end.saturating_sub(len);
    let window = &history[start..end];
    if window.is_empty() {
        return None;
    }
    let hits = window.iter().filter(|o| o.correct).count();
    Some(hits as f64 / window.len() as f64)
}

fn streak_momentum(streak: u32, cap: u32) -> f64 {
    streak.min(cap) as f64 / cap as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RewardBreakdown {
    pub r_acc: f64,
    pub r_time: f64,
    pub r_prog: f64,
    pub r_mom: f64,
    pub total: f64,
}

pub const REWARD_CORRECT: f64 = 1.0;
pub const REWARD_INCORRECT: f64 = -0.5;
pub const MAX_TIME_BONUS: f64 = 0.3;
pub const MAX_PROGRESSION_BONUS: f64 = 0.2;
pub const MAX_MOMENTUM_BONUS: f64 = 0.1;

/// Shaped reward for `outcome`, evaluated against the state before the
/// answer is folded in.
///
/// `prev_difficulty` is the level of the previously served question (the
/// outcome's own level on the first question). Time, progression and
/// momentum bonuses are paid on correct answers only.
pub fn compute_reward(
    state_before: &LearnerState,
    outcome: &AnswerOutcome,
    prev_difficulty: Difficulty,
    config: &ModelConfig,
) -> RewardBreakdown {
    let (r_acc, r_time, r_prog, r_mom) = if outcome.correct {
        let time = MAX_TIME_BONUS * (1.0 - outcome.time_fraction()).max(0.0);
        let prog = if outcome.difficulty > prev_difficulty {
            MAX_PROGRESSION_BONUS
        } else {
            0.0
        };
        let mom = MAX_MOMENTUM_BONUS * streak_momentum(state_before.correct_streak + 1, config.streak_cap);
        (REWARD_CORRECT, time, prog, mom)
    } else {
        (REWARD_INCORRECT, 0.0, 0.0, 0.0)
    };
    RewardBreakdown {
        r_acc,
        r_time,
        r_prog,
        r_mom,
        total: r_acc + r_time + r_prog + r_mom,
    }
}
