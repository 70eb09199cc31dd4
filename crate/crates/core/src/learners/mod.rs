//! Episodic environment and the two tabular learners.
//!
//! Each flight is an agent whose local state is its current delay plus the
//! number of hotspots it takes part in. At every step an agent either holds
//! or adds one minute of delay. Independent learners keep one Q-table per
//! agent. Edge-based learners keep one Q-table per coordination-graph edge
//! over the joint state and joint action of its two endpoints, and share
//! rewards along edges in proportion to neighbourhood sizes.

mod edmarl;
mod env;
mod irl;
mod oracle;
pub mod qstore;
mod train;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::reward::RewardError;
use crate::scenario::{FlightId, Minute, ScenarioError};
use crate::traffic::TrafficError;

pub use edmarl::{edmarl_agent_value, edmarl_joint_value, edmarl_update, EdgeKey, EdgeTransition, EdgeQTable, EdmarlLearner};
pub use env::{DcbProblem, Environment, StepOutcome, View};
pub use irl::{irl_select, irl_update, AgentQTable, IrlLearner};
pub use oracle::{brute_force_oracle, Objective, OracleOutcome, DEFAULT_ORACLE_BUDGET};
pub use qstore::{Incumbent, QStore, QTables, QSTORE_FORMAT, QSTORE_VERSION};
pub use train::{run_episode, train, train_resume, CurvePoint, EpisodeResult, Learner, TrainOutcome};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AgentAction {
    Hold,
    Increment,
}

impl AgentAction {
    /// Fixed order used for tie-breaking: `Hold` before `Increment`.
    pub const ALL: [AgentAction; 2] = [AgentAction::Hold, AgentAction::Increment];

    #[inline]
    pub fn index(self) -> usize {
        self as usize
    }

    #[inline]
    pub fn from_index(i: usize) -> Self {
        Self::ALL[i]
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LocalState {
    pub delay: Minute,
    /// Hotspots the agent takes part in, clamped at the configured cap.
    pub hotspot_count: u32,
}

impl LocalState {
    pub fn new(delay: Minute, hotspot_count: u32) -> Self {
        LocalState { delay, hotspot_count }
    }

    /// Dense index for a table with the given hotspot cap.
    #[inline]
    pub fn index(self, cap: u32) -> u32 {
        self.delay * (cap + 1) + self.hotspot_count.min(cap)
    }

    pub fn from_index(index: u32, cap: u32) -> Self {
        LocalState {
            delay: index / (cap + 1),
            hotspot_count: index % (cap + 1),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpsilonSchedule {
    pub start: f64,
    pub decrement: f64,
    /// Episodes between decrements.
    pub interval: u32,
    /// From this episode on exploration is off.
    pub floor_episode: u32,
}

impl Default for EpsilonSchedule {
    fn default() -> Self {
        EpsilonSchedule {
            start: 0.9,
            decrement: 0.01,
            interval: 120,
            floor_episode: 10_800,
        }
    }
}

/// How the all-hold fixed point that ends an episode is valued.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FixedPointRule {
    /// The fixed point repeats forever: the target is the discounted sum
    /// `r / (1 − γ)` with no bootstrap. Falls back to `Absorbing` at γ = 1.
    #[default]
    Persistent,
    /// The final update bootstraps from the unchanged state.
    Absorbing,
    /// The final update uses no bootstrap term.
    Terminal,
}

/// What the target of an update bootstraps from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Bootstrap {
    /// `γ · max Q(s')`.
    Next,
    /// Nothing; the reward is the whole target.
    None,
    /// Nothing, with rewards scaled by `1 / (1 − γ)`.
    Geometric,
}

impl Bootstrap {
    /// Reward multiplier and whether the update is terminal.
    pub fn resolve(self, gamma: f64) -> (f64, bool) {
        match self {
            Bootstrap::Next => (1.0, false),
            Bootstrap::None => (1.0, true),
            Bootstrap::Geometric if gamma < 1.0 => (1.0 / (1.0 - gamma), true),
            Bootstrap::Geometric => (1.0, false),
        }
    }
}

impl FixedPointRule {
    pub fn bootstrap(self) -> Bootstrap {
        match self {
            FixedPointRule::Persistent => Bootstrap::Geometric,
            FixedPointRule::Absorbing => Bootstrap::Next,
            FixedPointRule::Terminal => Bootstrap::None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LearnerConfig {
    pub alpha: f64,
    pub gamma: f64,
    pub episodes: u32,
    pub epsilon: EpsilonSchedule,
    pub hotspot_cap: u32,
    pub seed: u64,
    #[serde(default)]
    pub fixed_point: FixedPointRule,
}

impl Default for LearnerConfig {
    fn default() -> Self {
        LearnerConfig {
            alpha: 0.01,
            gamma: 0.99,
            episodes: 15_000,
            epsilon: EpsilonSchedule::default(),
            hotspot_cap: 10,
            seed: 0,
            fixed_point: FixedPointRule::Persistent,
        }
    }
}

impl LearnerConfig {
    pub fn validate(&self) -> Result<(), LearnerError> {
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(LearnerError::InvalidConfig(format!("alpha {} not in (0, 1]", self.alpha)));
        }
        if !(0.0..=1.0).contains(&self.gamma) {
            return Err(LearnerError::InvalidConfig(format!("gamma {} not in [0, 1]", self.gamma)));
        }
        if self.epsilon.interval == 0 {
            return Err(LearnerError::InvalidConfig("epsilon interval must be positive".into()));
        }
        Ok(())
    }
}

/// Exploration probability for `episode`.
pub fn epsilon_at(episode: u32, cfg: &LearnerConfig) -> f64 {
    let s = &cfg.epsilon;
    if episode >= s.floor_episode {
        return 0.0;
    }
    let steps = (episode / s.interval) as f64;
    (s.start - s.decrement * steps).max(0.0)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Irl,
    #[serde(rename = "edmarl")]
    EdMarl,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Irl => "irl",
            Method::EdMarl => "edmarl",
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "irl" => Ok(Method::Irl),
            "edmarl" | "ed-marl" => Ok(Method::EdMarl),
            other => Err(format!("unknown method {other:?} (expected irl or edmarl)")),
        }
    }
}

#[derive(Debug, Error)]
pub enum LearnerError {
    #[error("flight {flight} cannot increment past its max delay {max}")]
    IllegalAction { flight: FlightId, max: Minute },
    #[error("expected {expected} actions, got {got}")]
    ActionCount { expected: usize, got: usize },
    #[error("agent {0} has no neighbours")]
    NoNeighbours(usize),
    #[error("oracle search space of {size} assignments exceeds budget {budget}")]
    OracleTooLarge { size: u128, budget: u64 },
    #[error("invalid learner config: {0}")]
    InvalidConfig(String),
    #[error("q-store: {0}")]
    QStore(String),
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Traffic(#[from] TrafficError),
    #[error(transparent)]
    Reward(#[from] RewardError),
}
