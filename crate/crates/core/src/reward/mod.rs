//! Individual delay reward, strategic delay cost and the global reward.
//!
//! An agent's reward is its hotspot term minus `lambda` times its strategic
//! delay cost. The hotspot term is `-TDC × hotspot_rate` while the flight
//! sits in congestion and a flat `positive_reward` otherwise.

mod properties;

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scenario::{DelayAssignment, FlightId, Minute, Scenario};
use crate::traffic::{self, TrafficError};

pub use properties::{
    estimate_factoredness, estimate_learnability, exhaustive_agent_pairs, exhaustive_alternatives,
    LearnabilityEstimate, RandomAlternativeSampler, RandomPairSampler,
};

#[derive(Debug, Error)]
pub enum RewardError {
    #[error("aircraft class {0:?} missing from cost table")]
    UnknownClass(String),
    #[error("invalid cost table: {0}")]
    InvalidTable(String),
    #[error("invalid reward parameters: {0}")]
    InvalidParams(String),
    #[error("no samples")]
    NoSamples,
    #[error("sample pair differs in flight {0}, not only in the probed agent")]
    ForeignChange(FlightId),
    #[error("every sample had a zero denominator ({0} excluded)")]
    UndefinedRatio(usize),
    #[error(transparent)]
    Traffic(#[from] TrafficError),
    #[error("reading cost table: {0}")]
    Io(#[from] std::io::Error),
    #[error("parsing cost table: {0}")]
    Parse(#[from] serde_json::Error),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RewardParams {
    /// Weight of the strategic delay cost.
    pub lambda: f64,
    /// Reward for taking part in no hotspot.
    pub positive_reward: f64,
    /// Cost per congested minute.
    pub hotspot_rate: f64,
}

impl Default for RewardParams {
    fn default() -> Self {
        RewardParams {
            lambda: 20.0,
            positive_reward: 60.0,
            hotspot_rate: 81.0,
        }
    }
}

impl RewardParams {
    pub fn validate(&self) -> Result<(), RewardError> {
        if self.lambda.is_nan() || self.lambda < 0.0 {
            return Err(RewardError::InvalidParams("lambda must be >= 0".into()));
        }
        if self.positive_reward.is_nan() || self.positive_reward <= 0.0 {
            return Err(RewardError::InvalidParams("positive_reward must be > 0".into()));
        }
        if self.hotspot_rate.is_nan() || self.hotspot_rate <= 0.0 {
            return Err(RewardError::InvalidParams("hotspot_rate must be > 0".into()));
        }
        Ok(())
    }
}

/// Hotspot term for a congested duration of `tdc` minutes.
pub fn hotspot_cost(tdc: Minute, params: &RewardParams) -> f64 {
    if tdc > 0 {
        -(tdc as f64) * params.hotspot_rate
    } else {
        params.positive_reward
    }
}

/// One piece of a cost curve: `rate_per_min` applies from the previous
/// segment's bound up to `up_to_min` (unbounded when absent).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CostSegment {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub up_to_min: Option<Minute>,
    pub rate_per_min: f64,
}

/// Piecewise-linear strategic delay cost per aircraft class.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct StrategicCostTable {
    pub classes: BTreeMap<String, Vec<CostSegment>>,
}

impl Default for StrategicCostTable {
    /// Linear curves: light 0.5, medium 1.0, heavy 2.0 per minute.
    fn default() -> Self {
        let linear = |rate| {
            vec![CostSegment {
                up_to_min: None,
                rate_per_min: rate,
            }]
        };
        StrategicCostTable {
            classes: BTreeMap::from([
                ("light".to_string(), linear(0.5)),
                ("medium".to_string(), linear(1.0)),
                ("heavy".to_string(), linear(2.0)),
            ]),
        }
    }
}

impl StrategicCostTable {
    pub fn linear(class: &str, rate: f64) -> Self {
        StrategicCostTable {
            classes: BTreeMap::from([(
                class.to_string(),
                vec![CostSegment {
                    up_to_min: None,
                    rate_per_min: rate,
                }],
            )]),
        }
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, RewardError> {
        let table: Self = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        table.validate()?;
        Ok(table)
    }

    pub fn validate(&self) -> Result<(), RewardError> {
        for (class, curve) in &self.classes {
            if curve.is_empty() {
                return Err(RewardError::InvalidTable(format!("{class}: empty curve")));
            }
            let mut prev = 0;
            for (i, seg) in curve.iter().enumerate() {
                if seg.rate_per_min < 0.0 || !seg.rate_per_min.is_finite() {
                    return Err(RewardError::InvalidTable(format!("{class}: negative or non-finite rate")));
                }
                match seg.up_to_min {
                    Some(b) if b <= prev && i > 0 => {
                        return Err(RewardError::InvalidTable(format!("{class}: bounds must increase")));
                    }
                    Some(b) => prev = b,
                    None if i + 1 != curve.len() => {
                        return Err(RewardError::InvalidTable(format!(
                            "{class}: only the last segment may be unbounded"
                        )));
                    }
                    None => {}
                }
            }
            if curve.last().is_some_and(|s| s.up_to_min.is_some()) {
                return Err(RewardError::InvalidTable(format!("{class}: last segment must be unbounded")));
            }
        }
        Ok(())
    }
}

/// Accumulated cost of `delay` minutes for aircraft class `class`.
pub fn delay_cost(delay: Minute, class: &str, table: &StrategicCostTable) -> Result<f64, RewardError> {
    let curve = table
        .classes
        .get(class)
        .ok_or_else(|| RewardError::UnknownClass(class.to_string()))?;
    let mut cost = 0.0;
    let mut from = 0;
    for seg in curve {
        let to = seg.up_to_min.unwrap_or(Minute::MAX).min(delay);
        if to > from {
            cost += (to - from) as f64 * seg.rate_per_min;
            from = to;
        }
        if from >= delay {
            break;
        }
    }
    Ok(cost)
}

/// What one agent's reward depends on.
#[derive(Clone, Debug, PartialEq)]
pub struct AgentContext<'a> {
    pub delay: Minute,
    pub tdc: Minute,
    pub aircraft_class: &'a str,
}

/// Reward parameters paired with a cost table.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RewardModel {
    pub params: RewardParams,
    pub costs: StrategicCostTable,
}

impl RewardModel {
    pub fn new(params: RewardParams, costs: StrategicCostTable) -> Self {
        RewardModel { params, costs }
    }

    pub fn local_reward(&self, ctx: &AgentContext<'_>) -> Result<f64, RewardError> {
        Ok(hotspot_cost(ctx.tdc, &self.params)
            - self.params.lambda * delay_cost(ctx.delay, ctx.aircraft_class, &self.costs)?)
    }

    pub fn global_reward<'a, I>(&self, agents: I) -> Result<f64, RewardError>
    where
        I: IntoIterator<Item = AgentContext<'a>>,
    {
        agents.into_iter().map(|ctx| self.local_reward(&ctx)).sum()
    }

    /// `lambda × delay_cost` for every (flight, delay) pair, indexed
    /// `[flight][delay]`.
    pub fn delay_penalties(&self, s: &Scenario) -> Result<Vec<Vec<f64>>, RewardError> {
        s.flights
            .iter()
            .map(|f| {
                (0..=f.effective_max_delay())
                    .map(|d| Ok(self.params.lambda * delay_cost(d, &f.aircraft_class, &self.costs)?))
                    .collect()
            })
            .collect()
    }
}

/// Computes per-agent rewards for whole joint assignments of one scenario.
#[derive(Clone, Debug)]
pub struct RewardEvaluator<'a> {
    pub scenario: &'a Scenario,
    pub model: &'a RewardModel,
}

impl<'a> RewardEvaluator<'a> {
    pub fn new(scenario: &'a Scenario, model: &'a RewardModel) -> Self {
        RewardEvaluator { scenario, model }
    }

    /// Local reward of every flight, in scenario order.
    pub fn agent_rewards(&self, d: &DelayAssignment) -> Result<Vec<f64>, RewardError> {
        let tdc = traffic::congested_durations(self.scenario, d)?;
        self.scenario
            .flights
            .iter()
            .zip(tdc)
            .map(|(f, tdc)| {
                self.model.local_reward(&AgentContext {
                    delay: d.get(&f.id),
                    tdc,
                    aircraft_class: &f.aircraft_class,
                })
            })
            .collect()
    }

    pub fn global_reward(&self, d: &DelayAssignment) -> Result<f64, RewardError> {
        Ok(self.agent_rewards(d)?.iter().sum())
    }

    pub fn agent_and_global(&self, agent: usize, d: &DelayAssignment) -> Result<(f64, f64), RewardError> {
        let r = self.agent_rewards(d)?;
        Ok((r[agent], r.iter().sum()))
    }
}
