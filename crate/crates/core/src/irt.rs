//! The statistical head: 2PL response probabilities, the prior over
//! difficulty levels, and the ladder that gates level changes.

use serde::{Deserialize, Serialize};

use crate::error::{ensure, ConfigError};
use crate::level::{Difficulty, DifficultyDistribution, PerLevel};

/// 2PL item parameters: discrimination `a > 0` and location `b`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ItemParams {
    pub discrimination: f64,
    pub difficulty_location: f64,
}

impl ItemParams {
    pub fn new(discrimination: f64, difficulty_location: f64) -> Result<Self, ConfigError> {
        let p = Self {
            discrimination,
            difficulty_location,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        ensure(
            self.discrimination > 0.0 && self.discrimination.is_finite(),
            "discrimination",
            "must be finite and > 0",
        )?;
        ensure(self.difficulty_location.is_finite(), "difficulty_location", "must be finite")
    }
}

/// Numerically stable logistic function.
pub fn logistic(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// P(correct) = σ(a(θ − b)).
pub fn success_probability(theta: f64, item: &ItemParams) -> f64 {
    logistic(item.discrimination * (theta - item.difficulty_location))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PriorMode {
    /// p(d) ∝ σ(a_d(θ − b_d)), normalized over the three levels.
    #[serde(rename = "literal_2pl")]
    Literal2pl,
    /// p(d) ∝ exp(−|σ(a_d(θ − b_d)) − p*| / λ): mass concentrates on the
    /// level whose predicted success is closest to the target.
    TargetZone,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PriorConfig {
    pub params_per_level: PerLevel<ItemParams>,
    pub promote_threshold: f64,
    pub demote_threshold: f64,
    /// Questions after a level change before any further change.
    pub cooldown_len: u32,
    /// Questions at the current level before a promotion.
    pub hold_len: u32,
    pub prior_mode: PriorMode,
    pub target_success: f64,
    pub zone_sharpness: f64,
    /// Ladder level of a fresh session.
    pub start_level: Difficulty,
}

impl Default for PriorConfig {
    fn default() -> Self {
        Self {
            params_per_level: PerLevel::new(
                ItemParams { discrimination: 1.2, difficulty_location: -1.0 },
                ItemParams { discrimination: 1.2, difficulty_location: 0.0 },
                ItemParams { discrimination: 1.2, difficulty_location: 1.0 },
            ),
            promote_threshold: 0.75,
            demote_threshold: 0.35,
            cooldown_len: 2,
            hold_len: 3,
            prior_mode: PriorMode::TargetZone,
            target_success: 0.7,
            zone_sharpness: 0.1,
            start_level: Difficulty::Easy,
        }
    }
}

impl PriorConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        for (_, p) in self.params_per_level.iter() {
            p.validate()?;
        }
        ensure(
            0.0 <= self.demote_threshold
                && self.demote_threshold < self.promote_threshold
                && self.promote_threshold <= 1.0,
            "promote_threshold",
            "need 0 <= demote_threshold < promote_threshold <= 1",
        )?;
        ensure(
            self.zone_sharpness > 0.0 && self.zone_sharpness.is_finite(),
            "zone_sharpness",
            "must be > 0",
        )?;
        ensure(
            self.target_success > 0.0 && self.target_success < 1.0,
            "target_success",
            "must be in (0, 1)",
        )
    }

    pub fn item(&self, d: Difficulty) -> &ItemParams {
        &self.params_per_level[d]
    }
}

/// The statistical prior over difficulty levels for skill estimate `theta`.
pub fn stat_distribution(theta: f64, config: &PriorConfig) -> DifficultyDistribution {
    let success = config
        .params_per_level
        .map(|_, item| success_probability(theta, item));
    let weights = match config.prior_mode {
        PriorMode::Literal2pl => success,
        PriorMode::TargetZone => {
            let scores = success.map(|_, p| -(p - config.target_success).abs() / config.zone_sharpness);
            let top = scores.easy.max(scores.medium).max(scores.hard);
            scores.map(|_, s| (s - top).exp())
        }
    };
    DifficultyDistribution::from_weights(weights).expect("logistic weights are positive")
}

/// A subset of the three levels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(into = "Vec<Difficulty>", from = "Vec<Difficulty>")]
pub struct AllowedLevels(PerLevel<bool>);

impl AllowedLevels {
    pub fn only(d: Difficulty) -> Self {
        let mut s = Self::default();
        s.0[d] = true;
        s
    }

    pub fn all() -> Self {
        Self(PerLevel::splat(true))
    }

    pub fn insert(&mut self, d: Difficulty) {
        self.0[d] = true;
    }

    pub fn contains(&self, d: Difficulty) -> bool {
        self.0[d]
    }

    pub fn len(&self) -> usize {
        self.iter().count()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn iter(&self) -> impl Iterator<Item = Difficulty> + '_ {
        Difficulty::ALL.into_iter().filter(|d| self.contains(*d))
    }
}

impl From<AllowedLevels> for Vec<Difficulty> {
    fn from(s: AllowedLevels) -> Self {
        s.iter().collect()
    }
}

impl From<Vec<Difficulty>> for AllowedLevels {
    fn from(v: Vec<Difficulty>) -> Self {
        let mut s = Self::default();
        for d in v {
            s.insert(d);
        }
        s
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LadderState {
    pub current_level: Difficulty,
    /// Answered questions since the last committed change.
    pub questions_since_change: u32,
    /// Answered questions served at `current_level` since the last change.
    pub questions_at_level: u32,
}

impl LadderState {
    pub fn new(level: Difficulty) -> Self {
        Self {
            current_level: level,
            questions_since_change: 0,
            questions_at_level: 0,
        }
    }

    /// Levels the next decision may land on.
    ///
    /// Promotion needs the promote threshold, the cooldown and the hold;
    /// demotion needs the demote threshold and the cooldown only. Moves are
    /// limited to adjacent levels.
    pub fn allowed_levels(&self, recent_accuracy: f64, config: &PriorConfig) -> AllowedLevels {
        let mut allowed = AllowedLevels::only(self.current_level);
        let cooled = self.questions_since_change >= config.cooldown_len;
        if recent_accuracy >= config.promote_threshold && cooled && self.questions_at_level >= config.hold_len {
            if let Some(up) = self.current_level.harder() {
                allowed.insert(up);
            }
        }
        if recent_accuracy <= config.demote_threshold && cooled {
            if let Some(down) = self.current_level.easier() {
                allowed.insert(down);
            }
        }
        allowed
    }

    /// Eligibility for the given accuracy plus the ladder with both counters
    /// advanced by one question.
    pub fn ladder_step(&self, recent_accuracy: f64, config: &PriorConfig) -> (LadderState, AllowedLevels) {
        let allowed = self.allowed_levels(recent_accuracy, config);
        let next = LadderState {
            questions_since_change: self.questions_since_change + 1,
            questions_at_level: self.questions_at_level + 1,
            ..*self
        };
        (next, allowed)
    }

    /// Counts one answered question that was served at `served`.
    pub fn advance(&self, served: Difficulty) -> LadderState {
        LadderState {
            questions_since_change: self.questions_since_change + 1,
            questions_at_level: self.questions_at_level + u32::from(served == self.current_level),
            ..*self
        }
    }

    /// Moves to `level`, resetting both counters if it differs.
    pub fn commit(&self, level: Difficulty) -> LadderState {
        if level == self.current_level {
            *self
        } else {
            LadderState::new(level)
        }
    }
}
