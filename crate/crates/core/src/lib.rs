//! Adaptive lecture sessions.
//!
//! `pal-core` turns lecture transcripts into timestamped, difficulty-rated
//! question banks, picks the difficulty of each next question with a blend
//! of a 2PL item-response prior and an ε-greedy Q-learning head, records
//! every session as a replayable event log, and writes a post-lesson
//! summary split into *Territory Mastered* and *Discovery Zone*.
//!
//! Module map:
//!
//! - [`level`]: the three difficulty levels and per-level containers.
//! - [`model`]: learner state vector, its update rule and the shaped reward.
//! - [`irt`]: 2PL success probabilities, the statistical prior and the
//!   promotion/demotion ladder.
//! - [`bandit`]: the Q-table and its ε-greedy distribution.
//! - [`policy`]: blending, masking, sampling and the per-answer step.
//! - [`pipeline`]: transcript parsing, candidate points, cloze generation,
//!   difficulty rating and the canonical bank file.
//! - [`summary`]: sentence segmentation, hashed embeddings, similarity
//!   search and summary composition.
//! - [`session`]: the event-sourced session lifecycle and replay.
//! - [`simulator`]: synthetic learners and policy comparisons.
//! - [`exec`]: sequential / rayon execution switch used by the batch paths.

pub mod bandit;
pub mod error;
pub mod exec;
pub mod irt;
pub mod level;
pub mod model;
pub mod pipeline;
pub mod policy;
pub mod session;
pub mod simulator;
pub mod summary;

pub use bandit::{BanditConfig, QTable};
pub use error::ConfigError;
pub use exec::Execution;
pub use irt::{ItemParams, LadderState, PriorConfig, PriorMode};
pub use level::{Difficulty, DifficultyDistribution, PerLevel};
pub use model::{AnswerOutcome, LearnerState, ModelConfig, QuestionId, RewardBreakdown};
pub use policy::{BlendConfig, DecisionTrace, PolicyConfig, PolicyMode, PolicyState};
