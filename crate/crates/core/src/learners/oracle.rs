//! Exhaustive search for small scenarios.

use super::LearnerError;
use crate::reward::RewardModel;
use crate::scenario::{DelayAssignment, Minute, Scenario};
use crate::traffic::{TrafficModel, TrafficState};

pub const DEFAULT_ORACLE_BUDGET: u64 = 10_000_000;

#[derive(Clone, Debug, PartialEq)]
pub enum Objective {
    /// Sum of delays over all flights.
    TotalDelay,
    /// Negated global reward of a hotspot-free assignment.
    RewardCost(RewardModel),
}

#[derive(Clone, Debug, PartialEq)]
pub enum OracleOutcome {
    Optimal {
        assignment: DelayAssignment,
        objective: f64,
        evaluated: u64,
    },
    /// No joint assignment within the max delays removes every hotspot.
    Infeasible { evaluated: u64 },
}

impl OracleOutcome {
    pub fn objective(&self) -> Option<f64> {
        match self {
            OracleOutcome::Optimal { objective, .. } => Some(*objective),
            OracleOutcome::Infeasible { .. } => None,
        }
    }
}

/// Minimises `objective` over every joint assignment with no hotspots. Ties
/// keep the first assignment in odometer order (first flight fastest).
pub fn brute_force_oracle(s: &Scenario, objective: &Objective, budget: u64) -> Result<OracleOutcome, LearnerError> {
    let maxes: Vec<Minute> = s.flights.iter().map(|f| f.effective_max_delay()).collect();
    let size = maxes.iter().fold(1u128, |acc, &m| acc.saturating_mul(m as u128 + 1));
    if size > budget as u128 {
        return Err(LearnerError::OracleTooLarge { size, budget });
    }
    let costs: Vec<Vec<f64>> = match objective {
        Objective::TotalDelay => maxes.iter().map(|&m| (0..=m).map(|d| d as f64).collect()).collect(),
        Objective::RewardCost(model) => {
            model.params.validate()?;
            let base = model.params.positive_reward;
            model
                .delay_penalties(s)?
                .into_iter()
                .map(|row| row.into_iter().map(|p| p - base).collect())
                .collect()
        }
    };
    let model = TrafficModel::compile(s)?;
    let mut state = TrafficState::new(&model);
    let mut delays = vec![0 as Minute; maxes.len()];
    let mut best: Option<(Vec<Minute>, f64)> = None;
    let mut evaluated = 0u64;
    loop {
        evaluated += 1;
        if state.hotspot_total() == 0 {
            let value: f64 = delays.iter().enumerate().map(|(f, &d)| costs[f][d as usize]).sum();
            if best.as_ref().is_none_or(|(_, b)| value < *b) {
                best = Some((delays.clone(), value));
            }
        }
        let mut i = 0;
        loop {
            if i == delays.len() {
                return Ok(match best {
                    Some((d, objective)) => OracleOutcome::Optimal {
                        assignment: DelayAssignment::from_indexed(s, &d),
                        objective,
                        evaluated,
                    },
                    None => OracleOutcome::Infeasible { evaluated },
                });
            }
            if delays[i] < maxes[i] {
                delays[i] += 1;
                state.set_delay(i, delays[i]);
                break;
            }
            delays[i] = 0;
            state.set_delay(i, 0);
            i += 1;
        }
    }
}
