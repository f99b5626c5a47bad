//! Difficulty levels and the per-level containers shared by the prior, the
//! Q-learning head and the blender.

use std::fmt;
use std::ops::{Index, IndexMut};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Difficulty {
    Easy,
    Medium,
    Hard,
}

impl Difficulty {
    /// The fixed ordering used for inverse-CDF sampling and tie-breaks.
    pub const ALL: [Difficulty; 3] = [Difficulty::Easy, Difficulty::Medium, Difficulty::Hard];

    pub fn index(self) -> usize {
        match self {
            Difficulty::Easy => 0,
            Difficulty::Medium => 1,
            Difficulty::Hard => 2,
        }
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    pub fn harder(self) -> Option<Self> {
        Self::from_index(self.index() + 1)
    }

    pub fn easier(self) -> Option<Self> {
        self.index().checked_sub(1).and_then(Self::from_index)
    }

    /// Number of ladder steps between two levels.
    pub fn distance(self, other: Self) -> usize {
        self.index().abs_diff(other.index())
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Difficulty::Easy => "easy",
            Difficulty::Medium => "medium",
            Difficulty::Hard => "hard",
        }
    }
}

impl fmt::Display for Difficulty {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown difficulty {0:?} (expected easy, medium or hard)")]
pub struct ParseDifficultyError(pub String);

impl FromStr for Difficulty {
    type Err = ParseDifficultyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "easy" => Ok(Difficulty::Easy),
            "medium" => Ok(Difficulty::Medium),
            "hard" => Ok(Difficulty::Hard),
            _ => Err(ParseDifficultyError(s.to_string())),
        }
    }
}

/// One value per difficulty level. Serializes as `{"easy", "medium", "hard"}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct PerLevel<T> {
    pub easy: T,
    pub medium: T,
    pub hard: T,
}

impl<T> PerLevel<T> {
    pub fn new(easy: T, medium: T, hard: T) -> Self {
        Self { easy, medium, hard }
    }

    pub fn from_fn(mut f: impl FnMut(Difficulty) -> T) -> Self {
        Self {
            easy: f(Difficulty::Easy),
            medium: f(Difficulty::Medium),
            hard: f(Difficulty::Hard),
        }
    }

    pub fn map<U>(&self, mut f: impl FnMut(Difficulty, &T) -> U) -> PerLevel<U> {
        PerLevel {
            easy: f(Difficulty::Easy, &self.easy),
            medium: f(Difficulty::Medium, &self.medium),
            hard: f(Difficulty::Hard, &self.hard),
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (Difficulty, &T)> {
        [
            (Difficulty::Easy, &self.easy),
            (Difficulty::Medium, &self.medium),
            (Difficulty::Hard, &self.hard),
        ]
        .into_iter()
    }
}

impl<T: Copy> PerLevel<T> {
    pub fn splat(v: T) -> Self {
        Self::new(v, v, v)
    }

    pub fn to_array(&self) -> [T; 3] {
        [self.easy, self.medium, self.hard]
    }
}

impl<T> Index<Difficulty> for PerLevel<T> {
    type Output = T;

    fn index(&self, d: Difficulty) -> &T {
        match d {
            Difficulty::Easy => &self.easy,
            Difficulty::Medium => &self.medium,
            Difficulty::Hard => &self.hard,
        }
    }
}

impl<T> IndexMut<Difficulty> for PerLevel<T> {
    fn index_mut(&mut self, d: Difficulty) -> &mut T {
        match d {
            Difficulty::Easy => &mut self.easy,
            Difficulty::Medium => &mut self.medium,
            Difficulty::Hard => &mut self.hard,
        }
    }
}

/// Tolerance on the total mass of a [`DifficultyDistribution`].
pub const MASS_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DistributionError {
    #[error("probability for {0} is negative or not finite")]
    BadEntry(Difficulty),
    #[error("probabilities sum to {0}, expected 1")]
    BadMass(f64),
}

/// A probability vector over {Easy, Medium, Hard}.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PerLevel<f64>", into = "PerLevel<f64>")]
pub struct DifficultyDistribution(PerLevel<f64>);

impl DifficultyDistribution {
    pub fn new(p: PerLevel<f64>) -> Result<Self, DistributionError> {
        for (d, &v) in p.iter() {
            if !v.is_finite() || v < 0.0 {
                return Err(DistributionError::BadEntry(d));
            }
        }
        let total = p.easy + p.medium + p.hard;
        if (total - 1.0).abs() > MASS_TOLERANCE {
            return Err(DistributionError::BadMass(total));
        }
        Ok(Self(p))
    }

    /// Normalizes non-negative weights. Returns `None` when the total is not
    /// strictly positive and finite.
    pub fn from_weights(w: PerLevel<f64>) -> Option<Self> {
        let total = w.easy + w.medium + w.hard;
        if !(total.is_finite() && total > 0.0) || w.iter().any(|(_, v)| *v < 0.0) {
            return None;
        }
        Some(Self(w.map(|_, v| v / total)))
    }

    pub fn uniform() -> Self {
        Self(PerLevel::splat(1.0 / 3.0))
    }

    pub fn point(d: Difficulty) -> Self {
        let mut p = PerLevel::splat(0.0);
        p[d] = 1.0;
        Self(p)
    }

    pub fn get(&self, d: Difficulty) -> f64 {
        self.0[d]
    }

    pub fn probs(&self) -> &PerLevel<f64> {
        &self.0
    }

    pub fn to_array(&self) -> [f64; 3] {
        self.0.to_array()
    }

    pub fn total(&self) -> f64 {
        self.0.easy + self.0.medium + self.0.hard
    }

    /// Level with the most mass; ties go to the easier level.
    pub fn mode(&self) -> Difficulty {
        let mut best = Difficulty::Easy;
        for d in Difficulty::ALL {
            if self.get(d) > self.get(best) {
                best = d;
            }
        }
        best
    }

    /// Inverse-CDF lookup over the fixed order Easy, Medium, Hard.
    ///
    /// `draw` is a uniform variate in `[0, 1)`. Levels with zero mass are
    /// never returned.
    pub fn sample(&self, draw: f64) -> Difficulty {
        let mut cumulative = 0.0;
        let mut last_positive = None;
        for d in Difficulty::ALL {
            let p = self.get(d);
            if p <= 0.0 {
                continue;
            }
            cumulative += p;
            last_positive = Some(d);
            if draw < cumulative {
                return d;
            }
        }
        // draw landed in the rounding gap above the accumulated mass
        last_positive.unwrap_or(Difficulty::Easy)
    }
}

impl TryFrom<PerLevel<f64>> for DifficultyDistribution {
    type Error = DistributionError;

    fn try_from(p: PerLevel<f64>) -> Result<Self, Self::Error> {
        Self::new(p)
    }
}

impl From<DifficultyDistribution> for PerLevel<f64> {
    fn from(d: DifficultyDistribution) -> Self {
        d.0
    }
}
