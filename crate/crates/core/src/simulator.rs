//! Synthetic learners and the episode harness.
//!
//! An episode drives a real in-memory [`Session`] over an auto-generated
//! bank, so simulated runs exercise the same code path as live ones.

use std::fmt::Write as _;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exec::Execution;
use crate::irt::{success_probability, ItemParams};
use crate::level::{Difficulty, PerLevel};
use crate::pipeline::{AnswerKey, BankFile, QuestionRecord, BANK_SCHEMA};
use crate::policy::{PolicyConfig, PolicyMode};
use crate::session::{NextQuestion, Session, SessionConfig, SessionError};

/// True success probabilities in this band count as "in the zone".
pub const ZONE: (f64, f64) = (0.6, 0.85);
pub const DEFAULT_TIME_LIMIT: f64 = 30.0;
/// Stream index for the responder's RNG, kept apart from policy draws.
const RESPONDER_STREAM: u64 = 1;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("invalid learner: {0}")]
    InvalidLearner(String),
    #[error("{0} must not be empty")]
    Empty(&'static str),
    #[error("invalid episode: {0}")]
    InvalidEpisode(String),
    #[error(transparent)]
    Session(#[from] SessionError),
    #[error("could not parse {what} `{input}`")]
    Parse { what: &'static str, input: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum LearnerKind {
    Static,
    Improving { delta_per_correct: f64 },
    Noisy { flip_prob: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SyntheticLearner {
    pub true_theta: f64,
    pub kind: LearnerKind,
    /// Fraction of the time limit a sure answer takes.
    pub base_response_time: f64,
}

impl SyntheticLearner {
    pub fn new(true_theta: f64, kind: LearnerKind) -> Self {
        Self {
            true_theta,
            kind,
            base_response_time: 0.4,
        }
    }

    pub fn fixed(true_theta: f64) -> Self {
        Self::new(true_theta, LearnerKind::Static)
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |m: &str| Err(SimError::InvalidLearner(m.into()));
        if !self.true_theta.is_finite() {
            return bad("true_theta must be finite");
        }
        if !(self.base_response_time.is_finite() && self.base_response_time >= 0.0) {
            return bad("base_response_time must be >= 0");
        }
        match self.kind {
            LearnerKind::Noisy { flip_prob } if !(0.0..0.5).contains(&flip_prob) => bad("flip_prob must be in [0, 0.5)"),
            LearnerKind::Improving { delta_per_correct } if !(delta_per_correct.is_finite() && delta_per_correct >= 0.0) => {
                bad("delta_per_correct must be >= 0")
            }
            _ => Ok(()),
        }
    }

    /// Short label such as `static:2` or `noisy:0,0.1`.
    pub fn label(&self) -> String {
        match self.kind {
            LearnerKind::Static => format!("static:{}", self.true_theta),
            LearnerKind::Improving { delta_per_correct } => format!("improving:{},{}", self.true_theta, delta_per_correct),
            LearnerKind::Noisy { flip_prob } => format!("noisy:{},{}", self.true_theta, flip_prob),
        }
    }
}

impl FromStr for SyntheticLearner {
    type Err = SimError;

    /// Parses `static:<theta>`, `improving:<theta>,<delta>` or
    /// `noisy:<theta>,<p>`.
    fn from_str(s: &str) -> Result<Self, SimError> {
        let err = || SimError::Parse {
            what: "learner",
            input: s.to_string(),
        };
        let (kind, args) = s.split_once(':').ok_or_else(err)?;
        let nums: Vec<f64> = args
            .split(',')
            .map(|a| a.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|_| err())?;
        let learner = match (kind.trim(), nums.as_slice()) {
            ("static", [theta]) => SyntheticLearner::fixed(*theta),
            ("improving", [theta, delta]) => SyntheticLearner::new(*theta, LearnerKind::Improving { delta_per_correct: *delta }),
            ("noisy", [theta, p]) => SyntheticLearner::new(*theta, LearnerKind::Noisy { flip_prob: *p }),
            _ => return Err(err()),
        };
        learner.validate()?;
        Ok(learner)
    }
}

/// CLI label for a policy mode: `hybrid`, `stat`, `rl` or `fixed:<level>`.
pub fn policy_label(mode: PolicyMode) -> String {
    match mode {
        PolicyMode::Hybrid => "hybrid".into(),
        PolicyMode::StatOnly => "stat".into(),
        PolicyMode::RlOnly => "rl".into(),
        PolicyMode::Fixed(d) => format!("fixed:{d}"),
    }
}

pub fn parse_policy(s: &str) -> Result<PolicyMode, SimError> {
    let err = || SimError::Parse {
        what: "policy",
        input: s.to_string(),
    };
    match s.trim() {
        "hybrid" => Ok(PolicyMode::Hybrid),
        "stat" | "stat_only" => Ok(PolicyMode::StatOnly),
        "rl" | "rl_only" => Ok(PolicyMode::RlOnly),
        other => {
            let level = other.strip_prefix("fixed:").ok_or_else(err)?;
            level.parse().map(PolicyMode::Fixed).map_err(|_| err())
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimulatedResponse {
    pub correct: bool,
    pub response_time: f64,
}

/// Anything that can answer questions in an episode.
pub trait Responder {
    /// Ability used to score time-in-zone and the final estimate error.
    fn true_theta(&self) -> f64;
    fn respond(&mut self, item: &ItemParams, time_limit: f64, rng: &mut ChaCha8Rng) -> SimulatedResponse;
}

/// One 2PL response. Two uniforms are always drawn (outcome, then flip) so
/// the noisy kind with `flip_prob = 0` consumes the stream exactly like the
/// static kind.
pub fn simulate_response(learner: &SyntheticLearner, item: &ItemParams, time_limit: f64, rng: &mut ChaCha8Rng) -> SimulatedResponse {
    let p = success_probability(learner.true_theta, item);
    let mut correct = rng.random::<f64>() < p;
    let flip = rng.random::<f64>();
    if let LearnerKind::Noisy { flip_prob } = learner.kind {
        if flip < flip_prob {
            correct = !correct;
        }
    }
    SimulatedResponse {
        correct,
        response_time: learner.base_response_time * time_limit * (1.0 + 0.5 * (1.0 - p)),
    }
}

impl Responder for SyntheticLearner {
    fn true_theta(&self) -> f64 {
        self.true_theta
    }

    fn respond(&mut self, item: &ItemParams, time_limit: f64, rng: &mut ChaCha8Rng) -> SimulatedResponse {
        let r = simulate_response(self, item, time_limit, rng);
        if let (LearnerKind::Improving { delta_per_correct }, true) = (self.kind, r.correct) {
            self.true_theta += delta_per_correct;
        }
        r
    }
}

/// Replays a fixed correctness pattern, cycling when it runs out.
#[derive(Debug, Clone)]
pub struct ScriptedResponder {
    pub script: Vec<bool>,
    pub response_fraction: f64,
    next: usize,
}

impl ScriptedResponder {
    pub fn new(script: Vec<bool>) -> Self {
        assert!(!script.is_empty(), "script must not be empty");
        Self {
            script,
            response_fraction: 0.5,
            next: 0,
        }
    }

    /// Correct, wrong, correct, wrong, ...
    pub fn alternating() -> Self {
        Self::new(vec![true, false])
    }
}

impl Responder for ScriptedResponder {
    fn true_theta(&self) -> f64 {
        0.0
    }

    fn respond(&mut self, _item: &ItemParams, time_limit: f64, _rng: &mut ChaCha8Rng) -> SimulatedResponse {
        let correct = self.script[self.next % self.script.len()];
        self.next += 1;
        SimulatedResponse {
            correct,
            response_time: self.response_fraction * time_limit,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimMetrics {
    pub time_in_zone: f64,
    pub level_switches: u32,
    pub cumulative_reward: f64,
    /// |estimated skill − true ability| at the end of the episode.
    pub final_theta_error: f64,
    pub level_trace: Vec<Difficulty>,
    /// 1-based question number at which each level was first served.
    pub first_reach: PerLevel<Option<usize>>,
}

/// `per_level` questions at each difficulty, each with two options.
pub fn synthetic_bank(per_level: usize) -> BankFile {
    let mut questions = Vec::with_capacity(per_level * 3);
    for d in Difficulty::ALL {
        for i in 0..per_level {
            let n = questions.len();
            questions.push(QuestionRecord {
                q: format!("What is {d} item {i}?"),
                a: AnswerKey {
                    options: vec![format!("{d} answer {i}"), format!("{d} distractor {i}")],
                    correct_index: n % 2,
                },
                d,
                t: n as f64,
                c: String::new(),
            });
        }
    }
    BankFile {
        schema: BANK_SCHEMA.into(),
        source_id: "synthetic".into(),
        questions,
    }
}

/// Runs one episode with a synthetic learner.
pub fn run_episode(config: &PolicyConfig, learner: &SyntheticLearner, n_questions: usize, seed: u64) -> Result<SimMetrics, SimError> {
    learner.validate()?;
    run_episode_with(config, &mut learner.clone(), n_questions, seed)
}

/// Runs one episode with any responder. The session is seeded with `seed`;
/// the responder draws from a separate stream of the same seed.
pub fn run_episode_with<R: Responder>(config: &PolicyConfig, responder: &mut R, n_questions: usize, seed: u64) -> Result<SimMetrics, SimError> {
    if n_questions == 0 {
        return Err(SimError::InvalidEpisode("n_questions must be at least 1".into()));
    }
    let planned = u32::try_from(n_questions).map_err(|_| SimError::InvalidEpisode("too many questions".into()))?;
    let mut session_config = SessionConfig::new("synthetic", "sim", planned, seed);
    session_config.time_limit = DEFAULT_TIME_LIMIT;
    session_config.policy = config.clone();
    let mut session = Session::create(format!("sim-{seed}"), session_config, synthetic_bank(n_questions), 0)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(RESPONDER_STREAM);

    let mut in_zone = 0usize;
    let mut cumulative_reward = 0.0;
    let mut level_trace = Vec::with_capacity(n_questions);
    let mut first_reach = PerLevel::<Option<usize>>::default();
    while let NextQuestion::Served(q) = session.next_question(0)? {
        let item = *session.policy_config().prior.item(q.difficulty);
        let p_true = success_probability(responder.true_theta(), &item);
        if (ZONE.0..=ZONE.1).contains(&p_true) {
            in_zone += 1;
        }
        level_trace.push(q.difficulty);
        first_reach[q.difficulty].get_or_insert(level_trace.len());
        let r = responder.respond(&item, DEFAULT_TIME_LIMIT, &mut rng);
        let key = q.record.a.correct_index;
        let choice = if r.correct { key } else { (key + 1) % q.record.a.options.len() };
        let result = session.submit_answer(q.question_id, choice, r.response_time, 0)?;
        cumulative_reward += result.reward.total;
    }
    let served = level_trace.len().max(1);
    Ok(SimMetrics {
        time_in_zone: in_zone as f64 / served as f64,
        level_switches: level_trace.windows(2).filter(|w| w[0] != w[1]).count() as u32,
        cumulative_reward,
        final_theta_error: (session.policy.learner.skill - responder.true_theta()).abs(),
        level_trace,
        first_reach,
    })
}

/// One episode per seed, returned in seed order.
pub fn sweep(config: &PolicyConfig, learner: &SyntheticLearner, n_questions: usize, seeds: &[u64], exec: Execution) -> Result<Vec<SimMetrics>, SimError> {
    if seeds.is_empty() {
        return Err(SimError::Empty("seed list"));
    }
    exec.map(seeds, |&s| run_episode(config, learner, n_questions, s))
        .into_iter()
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    /// Sample standard deviation; 0 for a single value.
    pub std: f64,
}

impl MeanStd {
    pub fn of(values: &[f64]) -> Self {
        let n = values.len() as f64;
        if values.is_empty() {
            return Self { mean: f64::NAN, std: f64::NAN };
        }
        let mean = values.iter().sum::<f64>() / n;
        let std = if values.len() > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        Self { mean, std }
    }
}

pub const METRIC_NAMES: [&str; 7] = [
    "time_in_zone",
    "level_switches",
    "cumulative_reward",
    "final_theta_error",
    "first_reach_easy",
    "first_reach_medium",
    "first_reach_hard",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub policy: String,
    pub learner: String,
    /// Aligned with [`METRIC_NAMES`]. First-reach statistics only cover
    /// episodes that reached the level (NaN when none did).
    pub metrics: Vec<MeanStd>,
    /// Fraction of episodes that reached each level.
    pub reach_rate: PerLevel<f64>,
    /// Most served level over the second half of all episodes, pooled.
    pub modal_level: Difficulty,
}

impl ComparisonRow {
    pub fn metric(&self, name: &str) -> Option<MeanStd> {
        METRIC_NAMES.iter().position(|m| *m == name).map(|i| self.metrics[i])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub n_questions: usize,
    pub seeds: Vec<u64>,
    pub rows: Vec<ComparisonRow>,
}

fn summarize(policy: PolicyMode, learner: &SyntheticLearner, runs: &[SimMetrics]) -> ComparisonRow {
    let col = |f: &dyn Fn(&SimMetrics) -> Option<f64>| MeanStd::of(&runs.iter().filter_map(f).collect::<Vec<_>>());
    let mut metrics = vec![
        col(&|m| Some(m.time_in_zone)),
        col(&|m| Some(m.level_switches as f64)),
        col(&|m| Some(m.cumulative_reward)),
        col(&|m| Some(m.final_theta_error)),
    ];
    for d in Difficulty::ALL {
        metrics.push(col(&|m| m.first_reach[d].map(|q| q as f64)));
    }
    let n = runs.len() as f64;
    let reach_rate = PerLevel::from_fn(|d| runs.iter().filter(|m| m.first_reach[d].is_some()).count() as f64 / n);
    let mut counts = PerLevel::<usize>::default();
    for m in runs {
        for d in &m.level_trace[m.level_trace.len() / 2..] {
            counts[*d] += 1;
        }
    }
    let modal_level = Difficulty::ALL
        .into_iter()
        .max_by_key(|d| (counts[*d], std::cmp::Reverse(*d)))
        .expect("three levels");
    ComparisonRow {
        policy: policy_label(policy),
        learner: learner.label(),
        metrics,
        reach_rate,
        modal_level,
    }
}

/// Every policy against every learner over the same seeds. `base` supplies
/// everything but the mode.
pub fn compare_policies(
    base: &PolicyConfig,
    policies: &[PolicyMode],
    population: &[SyntheticLearner],
    seeds: &[u64],
    n_questions: usize,
    exec: Execution,
) -> Result<ComparisonReport, SimError> {
    if policies.is_empty() {
        return Err(SimError::Empty("policy list"));
    }
    if population.is_empty() {
        return Err(SimError::Empty("learner population"));
    }
    if seeds.is_empty() {
        return Err(SimError::Empty("seed list"));
    }
    let mut rows = Vec::with_capacity(policies.len() * population.len());
    for &mode in policies {
        let config = PolicyConfig { mode, ..base.clone() };
        for learner in population {
            let runs = sweep(&config, learner, n_questions, seeds, exec)?;
            rows.push(summarize(mode, learner, &runs));
        }
    }
    Ok(ComparisonReport {
        n_questions,
        seeds: seeds.to_vec(),
        rows,
    })
}

impl ComparisonReport {
    pub fn row(&self, policy: PolicyMode, learner: &SyntheticLearner) -> Option<&ComparisonRow> {
        let (p, l) = (policy_label(policy), learner.label());
        self.rows.iter().find(|r| r.policy == p && r.learner == l)
    }

    /// Fixed-width table, one line per (policy, learner, metric).
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{} questions, {} seeds", self.n_questions, self.seeds.len());
        let _ = writeln!(out, "{:<12} {:<22} {:<20} {:>12} {:>12}", "policy", "learner", "metric", "mean", "std");
        for row in &self.rows {
            for (name, m) in METRIC_NAMES.iter().zip(&row.metrics) {
                let _ = writeln!(out, "{:<12} {:<22} {:<20} {:>12.4} {:>12.4}", row.policy, row.learner, name, m.mean, m.std);
            }
            let _ = writeln!(out, "{:<12} {:<22} {:<20} {:>12}", row.policy, row.learner, "modal_level", row.modal_level.as_str());
        }
        out
    }

    /// Long-format CSV: `policy,learner,metric,mean,std`.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["policy", "learner", "metric", "mean", "std"]).expect("in-memory write");
        for row in &self.rows {
            for (name, m) in METRIC_NAMES.iter().zip(&row.metrics) {
                w.write_record([&row.policy, &row.learner, *name, &m.mean.to_string(), &m.std.to_string()])
                    .expect("in-memory write");
            }
            for d in Difficulty::ALL {
                let name = format!("reach_rate_{d}");
                w.write_record([&row.policy, &row.learner, &name, &row.reach_rate[d].to_string(), "0"])
                    .expect("in-memory write");
            }
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv output is utf-8")
    }
}
