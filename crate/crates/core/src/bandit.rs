//! ε-greedy Q-learning over the three difficulty actions.
//!
//! There is a single implicit state, so the update bootstraps on the max
//! over the same three action values.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::error::{ensure, ConfigError};
use crate::level::{Difficulty, DifficultyDistribution, PerLevel};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BanditConfig {
    pub alpha: f64,
    pub gamma: f64,
    pub epsilon_init: f64,
    /// Multiplicative decay applied after every update.
    pub epsilon_decay: f64,
    pub epsilon_floor: f64,
}

impl Default for BanditConfig {
    fn default() -> Self {
        Self {
            alpha: 0.1,
            gamma: 0.9,
            epsilon_init: 0.3,
            epsilon_decay: 0.99,
            epsilon_floor: 0.05,
        }
    }
}

impl BanditConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        ensure(self.alpha > 0.0 && self.alpha <= 1.0, "alpha", "must be in (0, 1]")?;
        ensure(self.gamma >= 0.0 && self.gamma < 1.0, "gamma", "must be in [0, 1)")?;
        ensure(
            0.0 <= self.epsilon_floor && self.epsilon_floor <= self.epsilon_init && self.epsilon_init <= 1.0,
            "epsilon_init",
            "need 0 <= epsilon_floor <= epsilon_init <= 1",
        )?;
        ensure(
            self.epsilon_decay > 0.0 && self.epsilon_decay <= 1.0,
            "epsilon_decay",
            "must be in (0, 1]",
        )
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BanditError {
    #[error("reward must be finite, got {0}")]
    NonFiniteReward(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QTable {
    pub q_values: PerLevel<f64>,
    pub epsilon: f64,
    pub updates_seen: u64,
}

impl QTable {
    pub fn new(config: &BanditConfig) -> Self {
        Self {
            q_values: PerLevel::splat(0.0),
            epsilon: config.epsilon_init,
            updates_seen: 0,
        }
    }

    pub fn max_q(&self) -> f64 {
        self.q_values.easy.max(self.q_values.medium).max(self.q_values.hard)
    }

    /// Greedy action. Ties go to `current` when it is among the maxima,
    /// otherwise to the easiest tied level.
    pub fn greedy(&self, current: Difficulty) -> Difficulty {
        let best = self.max_q();
        if self.q_values[current] == best {
            return current;
        }
        Difficulty::ALL
            .into_iter()
            .find(|&d| self.q_values[d] == best)
            .unwrap_or(current)
    }

    /// ε-greedy action distribution: 1 − ε + ε/3 on the greedy action,
    /// ε/3 on each other action.
    pub fn rl_distribution(&self, current: Difficulty) -> DifficultyDistribution {
        let explore = self.epsilon / 3.0;
        let greedy = self.greedy(current);
        let p = PerLevel::from_fn(|d| {
            if d == greedy {
                1.0 - self.epsilon + explore
            } else {
                explore
            }
        });
        DifficultyDistribution::from_weights(p).expect("epsilon in [0, 1]")
    }

    /// One Q-learning step on `action`:
    /// Q(a) ← Q(a) + α [R + γ max Q − Q(a)], with the max taken over the
    /// table before the update. ε then decays towards its floor.
    pub fn q_update(&self, action: Difficulty, reward: f64, config: &BanditConfig) -> Result<QTable, BanditError> {
        if !reward.is_finite() {
            return Err(BanditError::NonFiniteReward(reward));
        }
        let mut next = self.clone();
        let old = self.q_values[action];
        next.q_values[action] = old + config.alpha * (reward + config.gamma * self.max_q() - old);
        next.epsilon = (self.epsilon * config.epsilon_decay).max(config.epsilon_floor);
        next.updates_seen += 1;
        Ok(next)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn table(q: [f64; 3], epsilon: f64) -> QTable {
        QTable {
            q_values: PerLevel::new(q[0], q[1], q[2]),
            epsilon,
            updates_seen: 0,
        }
    }

    #[test]
    fn distribution_examples() {
        let d = table([0.2, 0.9, 0.1], 0.0).rl_distribution(Difficulty::Easy);
        assert_eq!(d.to_array(), [0.0, 1.0, 0.0]);
        let d = table([0.2, 0.9, 0.1], 1.0).rl_distribution(Difficulty::Easy);
        for p in d.to_array() {
            assert!((p - 1.0 / 3.0).abs() < 1e-12);
        }
        let d = table([0.0, 0.0, 1.0], 0.3).rl_distribution(Difficulty::Easy);
        let a = d.to_array();
        assert!((a[0] - 0.1).abs() < 1e-12 && (a[1] - 0.1).abs() < 1e-12 && (a[2] - 0.8).abs() < 1e-12);
    }

    #[test]
    fn greedy_tie_breaks() {
        let t = table([0.5, 0.5, 0.1], 0.0);
        assert_eq!(t.greedy(Difficulty::Medium), Difficulty::Medium);
        assert_eq!(t.greedy(Difficulty::Hard), Difficulty::Easy);
        assert_eq!(table([0.0; 3], 0.0).greedy(Difficulty::Hard), Difficulty::Hard);
    }

    #[test]
    fn update_examples() {
        let cfg = BanditConfig::default();
        let t = table([0.0; 3], 0.3).q_update(Difficulty::Medium, 1.0, &cfg).unwrap();
        assert!((t.q_values.medium - 0.1).abs() < 1e-12);
        assert_eq!(t.updates_seen, 1);
        assert!((t.epsilon - 0.297).abs() < 1e-12);

        let t = table([0.0; 3], 0.3).q_update(Difficulty::Hard, 0.0, &cfg).unwrap();
        assert_eq!(t.q_values, PerLevel::splat(0.0));

        let t = table([0.0, 0.5, 0.0], 0.3).q_update(Difficulty::Easy, -0.5, &cfg).unwrap();
        assert!((t.q_values.easy - -0.005).abs() < 1e-12);
        assert_eq!(t.q_values.medium, 0.5);

        assert!(table([0.0; 3], 0.3).q_update(Difficulty::Easy, f64::NAN, &cfg).is_err());
    }

    #[test]
    fn epsilon_reaches_floor() {
        let cfg = BanditConfig::default();
        let mut t = QTable::new(&cfg);
        for _ in 0..1000 {
            t = t.q_update(Difficulty::Easy, 0.0, &cfg).unwrap();
        }
        assert_eq!(t.epsilon, 0.05);
    }

    #[test]
    fn converges_to_fixed_point() {
        let cfg = BanditConfig::default();
        let rewards = PerLevel::new(0.2, 0.5, 1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut t = QTable::new(&cfg);
        for _ in 0..10_000 {
            let a = Difficulty::from_index(rng.random_range(0..3)).unwrap();
            t = t.q_update(a, rewards[a], &cfg).unwrap();
        }
        // Q* = R + γ max Q*  ⇒  max Q* = 1 / (1 - 0.9)
        assert!((t.max_q() - 10.0).abs() < 1e-2, "{}", t.max_q());
        assert!((t.q_values.easy - 9.2).abs() < 1e-2);
    }

    proptest! {
        #[test]
        fn update_touches_one_entry(q in proptest::array::uniform3(-5.0f64..5.0), a in 0usize..3, r in -2.0f64..2.0, eps in 0.0f64..=1.0) {
            let cfg = BanditConfig { epsilon_init: 1.0, ..BanditConfig::default() };
            let t = table(q, eps.max(cfg.epsilon_floor));
            let action = Difficulty::from_index(a).unwrap();
            let n = t.q_update(action, r, &cfg).unwrap();
            for d in Difficulty::ALL {
                if d != action { prop_assert_eq!(n.q_values[d], t.q_values[d]); }
            }
            prop_assert!(n.epsilon <= t.epsilon && n.epsilon >= cfg.epsilon_floor);
            let dist = t.rl_distribution(action);
            prop_assert!((dist.total() - 1.0).abs() < 1e-9);
        }
    }
}
