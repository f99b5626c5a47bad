//! Hybrid difficulty policy.
//!
//! Each decision blends the statistical prior with the ε-greedy head,
//! `π = (1 − w)·p_stat + w·p_rl`, where `w = min(w_max, w0 + κ·c·progress)`
//! grows with the learner's confidence and the session's progress. The
//! ladder then masks the blend to the levels it currently allows and the
//! next difficulty is drawn by inverse CDF from a seeded generator.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bandit::{BanditConfig, BanditError, QTable};
use crate::error::{ensure, ConfigError};
use crate::irt::{stat_distribution, AllowedLevels, LadderState, PriorConfig};
use crate::level::{Difficulty, DifficultyDistribution, PerLevel};
use crate::model::{compute_reward, AnswerOutcome, LearnerState, ModelConfig, ModelError, RewardBreakdown};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BlendConfig {
    pub w0: f64,
    pub kappa: f64,
    pub w_max: f64,
    /// Session length used for the progress term.
    pub planned_questions: u32,
}

impl Default for BlendConfig {
    fn default() -> Self {
        Self {
            w0: 0.2,
            kappa: 0.6,
            w_max: 0.8,
            planned_questions: 20,
        }
    }
}

impl BlendConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        ensure(
            0.0 <= self.w0 && self.w0 <= self.w_max && self.w_max <= 1.0,
            "w0",
            "need 0 <= w0 <= w_max <= 1",
        )?;
        ensure(self.kappa >= 0.0 && self.kappa.is_finite(), "kappa", "must be >= 0")?;
        ensure(self.planned_questions >= 1, "planned_questions", "must be >= 1")
    }
}

/// Which heads drive the decision.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicyMode {
    #[default]
    Hybrid,
    /// Blend weight pinned to 0.
    StatOnly,
    /// Blend weight pinned to 1.
    RlOnly,
    /// Always serve one level; ladder and heads are still updated.
    Fixed(Difficulty),
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct PolicyConfig {
    pub model: ModelConfig,
    pub prior: PriorConfig,
    pub bandit: BanditConfig,
    pub blend: BlendConfig,
    pub mode: PolicyMode,
}

impl PolicyConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        self.model.validate()?;
        self.prior.validate()?;
        self.bandit.validate()?;
        self.blend.validate()
    }
}

/// w = min(w_max, w0 + κ·confidence·progress).
pub fn blend_weight(confidence: f64, progress: f64, config: &BlendConfig) -> f64 {
    (config.w0 + config.kappa * confidence * progress).min(config.w_max)
}

/// Elementwise `(1 − w)·p_stat + w·p_rl`.
pub fn blend(p_stat: &DifficultyDistribution, p_rl: &DifficultyDistribution, w: f64) -> DifficultyDistribution {
    let w = w.clamp(0.0, 1.0);
    let mixed = PerLevel::from_fn(|d| (1.0 - w) * p_stat.get(d) + w * p_rl.get(d));
    DifficultyDistribution::from_weights(mixed).expect("convex combination of distributions")
}

/// Zeroes levels outside `allowed` and renormalizes. Falls back to a point
/// mass on `current` when nothing allowed carries mass.
pub fn apply_mask(dist: &DifficultyDistribution, allowed: &AllowedLevels, current: Difficulty) -> DifficultyDistribution {
    let kept = PerLevel::from_fn(|d| if allowed.contains(d) { dist.get(d) } else { 0.0 });
    DifficultyDistribution::from_weights(kept).unwrap_or_else(|| DifficultyDistribution::point(current))
}

/// Everything that went into one difficulty decision.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTrace {
    pub seed: u64,
    pub p_stat: DifficultyDistribution,
    pub p_rl: DifficultyDistribution,
    pub weight: f64,
    pub blended: DifficultyDistribution,
    pub allowed: AllowedLevels,
    pub masked: DifficultyDistribution,
    pub rng_draw: f64,
    pub sampled: Difficulty,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PolicyError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Bandit(#[from] BanditError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyState {
    pub ladder: LadderState,
    pub qtable: QTable,
    pub learner: LearnerState,
    pub last_served_difficulty: Option<Difficulty>,
    pub decision_trace: Option<DecisionTrace>,
}

impl PolicyState {
    pub fn new(config: &PolicyConfig) -> Self {
        let start = match config.mode {
            PolicyMode::Fixed(d) => d,
            _ => config.prior.start_level,
        };
        Self {
            ladder: LadderState::new(start),
            qtable: QTable::new(&config.bandit),
            learner: LearnerState::init(&config.model),
            last_served_difficulty: None,
            decision_trace: None,
        }
    }

    /// Session progress in [0, 1].
    pub fn progress(&self, config: &PolicyConfig) -> f64 {
        (self.learner.answered_count as f64 / config.blend.planned_questions.max(1) as f64).clamp(0.0, 1.0)
    }

    pub fn current_weight(&self, config: &PolicyConfig) -> f64 {
        match config.mode {
            PolicyMode::StatOnly => 0.0,
            PolicyMode::RlOnly => 1.0,
            PolicyMode::Hybrid | PolicyMode::Fixed(_) => {
                blend_weight(self.learner.confidence, self.progress(config), &config.blend)
            }
        }
    }

    /// Picks the next difficulty. Pure: the same state and seed always give
    /// the same choice and trace.
    pub fn choose_difficulty(&self, config: &PolicyConfig, seed: u64) -> (Difficulty, DecisionTrace) {
        let current = self.ladder.current_level;
        let p_stat = stat_distribution(self.learner.skill, &config.prior);
        let p_rl = self.qtable.rl_distribution(current);
        let weight = self.current_weight(config);
        let blended = blend(&p_stat, &p_rl, weight);
        let allowed = self.ladder.allowed_levels(self.learner.recent_accuracy, &config.prior);
        let masked = match config.mode {
            PolicyMode::Fixed(d) => DifficultyDistribution::point(d),
            _ => apply_mask(&blended, &allowed, current),
        };
        let rng_draw: f64 = ChaCha8Rng::seed_from_u64(seed).random();
        let sampled = masked.sample(rng_draw);
        let trace = DecisionTrace {
            seed,
            p_stat,
            p_rl,
            weight,
            blended,
            allowed,
            masked,
            rng_draw,
            sampled,
        };
        (sampled, trace)
    }

    /// Records a served question: the ladder moves to the sampled level
    /// (resetting its counters on a change) and `served` becomes the level
    /// the next answer is attributed to. `served` differs from the sampled
    /// level only when the bank had to fall back.
    pub fn commit(&self, trace: &DecisionTrace, served: Difficulty) -> PolicyState {
        PolicyState {
            ladder: self.ladder.commit(trace.sampled),
            last_served_difficulty: Some(served),
            decision_trace: Some(trace.clone()),
            ..self.clone()
        }
    }

    /// Folds one answer into both heads and the ladder.
    pub fn step(&self, outcome: &AnswerOutcome, config: &PolicyConfig) -> Result<(PolicyState, RewardBreakdown), PolicyError> {
        let prev = self
            .learner
            .answer_history
            .last()
            .map_or(outcome.difficulty, |o| o.difficulty);
        let reward = compute_reward(&self.learner, outcome, prev, &config.model);
        let item = config.prior.item(outcome.difficulty);
        let learner = self.learner.update(outcome, item, &config.model)?;
        let qtable = self.qtable.q_update(outcome.difficulty, reward.total, &config.bandit)?;
        let next = PolicyState {
            ladder: self.ladder.advance(outcome.difficulty),
            qtable,
            learner,
            last_served_difficulty: self.last_served_difficulty,
            decision_trace: self.decision_trace.clone(),
        };
        Ok((next, reward))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::QuestionId;
    use proptest::prelude::*;

    fn dist(a: f64, b: f64, c: f64) -> DifficultyDistribution {
        DifficultyDistribution::new(PerLevel::new(a, b, c)).unwrap()
    }

    fn close(x: &DifficultyDistribution, want: [f64; 3]) -> bool {
        x.to_array().iter().zip(want).all(|(a, b)| (a - b).abs() < 1e-9)
    }

    #[test]
    fn weight_examples() {
        let cfg = BlendConfig::default();
        assert_eq!(blend_weight(0.0, 0.7, &cfg), 0.2);
        assert!((blend_weight(1.0, 1.0, &cfg) - 0.8).abs() < 1e-12);
        assert!((blend_weight(0.5, 0.5, &cfg) - 0.35).abs() < 1e-12);
    }

    #[test]
    fn blend_examples() {
        let s = dist(0.5, 0.3, 0.2);
        let r = dist(0.1, 0.1, 0.8);
        assert_eq!(blend(&s, &r, 0.0), s);
        assert_eq!(blend(&s, &r, 1.0), r);
        assert!(close(&blend(&s, &r, 0.5), [0.3, 0.2, 0.5]));
    }

    #[test]
    fn mask_examples() {
        let d = dist(0.5, 0.3, 0.2);
        let m = apply_mask(&d, &AllowedLevels::only(Difficulty::Medium), Difficulty::Medium);
        assert_eq!(m.to_array(), [0.0, 1.0, 0.0]);
        let d = dist(0.3, 0.2, 0.5);
        let allowed = AllowedLevels::from(vec![Difficulty::Medium, Difficulty::Hard]);
        let m = apply_mask(&d, &allowed, Difficulty::Medium);
        assert!(close(&m, [0.0, 0.2 / 0.7, 0.5 / 0.7]));
        assert_eq!(apply_mask(&d, &AllowedLevels::all(), Difficulty::Easy), d);
        let zero = DifficultyDistribution::point(Difficulty::Hard);
        assert_eq!(
            apply_mask(&zero, &AllowedLevels::only(Difficulty::Easy), Difficulty::Easy),
            DifficultyDistribution::point(Difficulty::Easy)
        );
    }

    #[test]
    fn cold_start_serves_the_start_level() {
        let cfg = PolicyConfig::default();
        let p = PolicyState::new(&cfg);
        for seed in 0..50 {
            let (d, trace) = p.choose_difficulty(&cfg, seed);
            assert_eq!(d, Difficulty::Easy);
            assert_eq!(trace.masked, DifficultyDistribution::point(Difficulty::Easy));
            assert_eq!(trace.weight, 0.2);
        }
        assert_eq!(p.choose_difficulty(&cfg, 9), p.choose_difficulty(&cfg, 9));
    }

    fn answer(id: u32, d: Difficulty, correct: bool) -> AnswerOutcome {
        AnswerOutcome {
            question_id: QuestionId(id),
            difficulty: d,
            correct,
            response_time: 12.0,
            time_limit: 30.0,
        }
    }

    #[test]
    fn step_updates_both_heads() {
        let cfg = PolicyConfig::default();
        let p = PolicyState::new(&cfg);
        let (_, trace) = p.choose_difficulty(&cfg, 1);
        let p = p.commit(&trace, Difficulty::Medium);
        let (n, r) = p.step(&answer(0, Difficulty::Medium, true), &cfg).unwrap();
        assert!(r.total > 0.0);
        assert!(n.qtable.q_values.medium > 0.0);
        assert_eq!(n.learner.answered_count, 1);
        assert!((n.progress(&cfg) - 1.0 / 20.0).abs() < 1e-12);
        assert_eq!(n.ladder.questions_since_change, 1);
        // served away from the ladder level: no hold credit
        assert_eq!(n.ladder.questions_at_level, 0);

        let (n2, r2) = n.step(&answer(1, Difficulty::Medium, false), &cfg).unwrap();
        assert_eq!(r2.total, -0.5);
        let q = n.qtable.q_values.medium;
        let expected = q + 0.1 * (-0.5 + 0.9 * n.qtable.max_q() - q);
        assert_eq!(n2.qtable.q_values.medium, expected);

        assert!(matches!(
            n2.step(&answer(1, Difficulty::Medium, true), &cfg),
            Err(PolicyError::Model(ModelError::DoubleSubmit(_)))
        ));
    }

    #[test]
    fn fixed_mode_ignores_the_blend() {
        let cfg = PolicyConfig { mode: PolicyMode::Fixed(Difficulty::Hard), ..PolicyConfig::default() };
        let p = PolicyState::new(&cfg);
        assert_eq!(p.ladder.current_level, Difficulty::Hard);
        for seed in 0..20 {
            assert_eq!(p.choose_difficulty(&cfg, seed).0, Difficulty::Hard);
        }
    }

    proptest! {
        #[test]
        fn weight_is_capped_and_monotone(c in 0.0f64..=1.0, g in 0.0f64..=1.0, dc in 0.0f64..0.5, dg in 0.0f64..0.5) {
            let cfg = BlendConfig::default();
            let w = blend_weight(c, g, &cfg);
            prop_assert!((0.2..=0.8).contains(&w));
            prop_assert!(blend_weight((c + dc).min(1.0), g, &cfg) >= w);
            prop_assert!(blend_weight(c, (g + dg).min(1.0), &cfg) >= w);
        }

        #[test]
        fn blend_is_a_distribution(a in proptest::array::uniform3(0.001f64..1.0), b in proptest::array::uniform3(0.001f64..1.0), w in 0.0f64..=1.0) {
            let p = DifficultyDistribution::from_weights(PerLevel::new(a[0], a[1], a[2])).unwrap();
            let q = DifficultyDistribution::from_weights(PerLevel::new(b[0], b[1], b[2])).unwrap();
            let m = blend(&p, &q, w);
            prop_assert!((m.total() - 1.0).abs() < 1e-9);
            let same = blend(&p, &p, w);
            for d in Difficulty::ALL { prop_assert!((same.get(d) - p.get(d)).abs() < 1e-12); }
        }

        #[test]
        fn sampled_level_is_always_allowed(script in proptest::collection::vec(any::<bool>(), 1..80), seed: u64) {
            let cfg = PolicyConfig::default();
            let mut p = PolicyState::new(&cfg);
            for (i, c) in script.iter().enumerate() {
                let (d, trace) = p.choose_difficulty(&cfg, seed.wrapping_add(i as u64));
                prop_assert!(trace.allowed.contains(d));
                prop_assert!(d.distance(p.ladder.current_level) <= 1);
                for level in Difficulty::ALL {
                    if !trace.allowed.contains(level) { prop_assert_eq!(trace.masked.get(level), 0.0); }
                }
                p = p.commit(&trace, d);
                p = p.step(&answer(i as u32, d, *c), &cfg).unwrap().0;
            }
        }
    }
}
