//! Sampling estimators for reward factoredness and learnability.
//!
//! Joint states are delay assignments. Replacing one agent's component of a
//! state means substituting that agent's delay.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{RewardError, RewardEvaluator};
use crate::scenario::{DelayAssignment, FlightId, Scenario, ScenarioError};

fn agent_index(eval: &RewardEvaluator<'_>, agent: &FlightId) -> Result<usize, RewardError> {
    eval.scenario
        .flight_index(agent)
        .ok_or_else(|| RewardError::Traffic(ScenarioError::UnknownFlight(agent.clone()).into()))
}

/// Fraction of sampled pairs `(s, s')`, differing only in `agent`'s delay,
/// where the agent's reward and the global reward move in the same strict
/// direction. Pairs with either difference equal to zero count as misses.
pub fn estimate_factoredness<I>(eval: &RewardEvaluator<'_>, agent: &FlightId, pairs: I) -> Result<f64, RewardError>
where
    I: IntoIterator<Item = (DelayAssignment, DelayAssignment)>,
{
    let idx = agent_index(eval, agent)?;
    let mut n = 0usize;
    let mut aligned = 0usize;
    for (s, s2) in pairs {
        for f in &eval.scenario.flights {
            if &f.id != agent && s.get(&f.id) != s2.get(&f.id) {
                return Err(RewardError::ForeignChange(f.id.clone()));
            }
        }
        let (ri, r) = eval.agent_and_global(idx, &s)?;
        let (ri2, r2) = eval.agent_and_global(idx, &s2)?;
        if (ri - ri2) * (r - r2) > 0.0 {
            aligned += 1;
        }
        n += 1;
    }
    if n == 0 {
        return Err(RewardError::NoSamples);
    }
    Ok(aligned as f64 / n as f64)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LearnabilityEstimate {
    pub value: f64,
    pub used: usize,
    /// Samples dropped because the others-change left the reward unchanged.
    pub excluded: usize,
}

/// Mean point learnability of `agent` at `state` over the alternatives.
///
/// Each alternative `s'` contributes
/// `|R(s) − R(s with own delay from s')| / |R(s) − R(s' with own delay from s)|`.
pub fn estimate_learnability<I>(
    eval: &RewardEvaluator<'_>,
    agent: &FlightId,
    state: &DelayAssignment,
    alternatives: I,
) -> Result<LearnabilityEstimate, RewardError>
where
    I: IntoIterator<Item = DelayAssignment>,
{
    let idx = agent_index(eval, agent)?;
    let base = eval.agent_rewards(state)?[idx];
    let own = state.get(agent);
    let mut sum = 0.0;
    let mut used = 0;
    let mut excluded = 0;
    for alt in alternatives {
        let mut own_moved = state.clone();
        own_moved.set(agent.clone(), alt.get(agent));
        let mut others_moved = alt;
        others_moved.set(agent.clone(), own);

        let num = (base - eval.agent_rewards(&own_moved)?[idx]).abs();
        let den = (base - eval.agent_rewards(&others_moved)?[idx]).abs();
        if den == 0.0 {
            excluded += 1;
        } else {
            sum += num / den;
            used += 1;
        }
    }
    if used == 0 {
        return Err(if excluded == 0 {
            RewardError::NoSamples
        } else {
            RewardError::UndefinedRatio(excluded)
        });
    }
    Ok(LearnabilityEstimate {
        value: sum / used as f64,
        used,
        excluded,
    })
}

/// All `(base with agent at d, base with agent at d')` pairs.
pub fn exhaustive_agent_pairs(
    s: &Scenario,
    base: &DelayAssignment,
    agent: &FlightId,
) -> Vec<(DelayAssignment, DelayAssignment)> {
    let max = s.flight(agent).map_or(0, |f| f.effective_max_delay());
    let with = |d| {
        let mut a = base.clone();
        a.set(agent.clone(), d);
        a
    };
    (0..=max)
        .flat_map(|d| (0..=max).map(move |d2| (d, d2)))
        .map(|(d, d2)| (with(d), with(d2)))
        .collect()
}

/// Every feasible joint assignment of the scenario, in odometer order.
/// Only sensible for tiny scenarios.
pub fn exhaustive_alternatives(s: &Scenario) -> Vec<DelayAssignment> {
    let maxes: Vec<u32> = s.flights.iter().map(|f| f.effective_max_delay()).collect();
    let mut current = vec![0u32; maxes.len()];
    let mut out = Vec::new();
    loop {
        out.push(DelayAssignment::from_indexed(s, &current));
        let mut i = 0;
        loop {
            if i == current.len() {
                return out;
            }
            if current[i] < maxes[i] {
                current[i] += 1;
                break;
            }
            current[i] = 0;
            i += 1;
        }
    }
}

fn random_assignment(s: &Scenario, rng: &mut ChaCha8Rng) -> DelayAssignment {
    let delays: Vec<u32> = s
        .flights
        .iter()
        .map(|f| rng.gen_range(0..=f.effective_max_delay()))
        .collect();
    DelayAssignment::from_indexed(s, &delays)
}

/// Endless stream of pairs: a uniform random joint assignment and the same
/// assignment with the agent's delay redrawn.
pub struct RandomPairSampler<'a> {
    scenario: &'a Scenario,
    agent: FlightId,
    max: u32,
    rng: ChaCha8Rng,
}

impl<'a> RandomPairSampler<'a> {
    pub fn new(scenario: &'a Scenario, agent: FlightId, seed: u64) -> Self {
        let max = scenario.flight(&agent).map_or(0, |f| f.effective_max_delay());
        RandomPairSampler {
            scenario,
            agent,
            max,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }
}

impl Iterator for RandomPairSampler<'_> {
    type Item = (DelayAssignment, DelayAssignment);

    fn next(&mut self) -> Option<Self::Item> {
        let s = random_assignment(self.scenario, &mut self.rng);
        let mut s2 = s.clone();
        s2.set(self.agent.clone(), self.rng.gen_range(0..=self.max));
        Some((s, s2))
    }
}

/// Endless stream of uniform random joint assignments.
pub struct RandomAlternativeSampler<'a> {
    scenario: &'a Scenario,
    rng: ChaCha8Rng,
}

impl<'a> RandomAlternativeSampler<'a> {
    pub fn new(scenario: &'a Scenario, seed: u64) -> Self {
        RandomAlternativeSampler {
            scenario,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }
}

impl Iterator for RandomAlternativeSampler<'_> {
    type Item = DelayAssignment;

    fn next(&mut self) -> Option<DelayAssignment> {
        Some(random_assignment(self.scenario, &mut self.rng))
    }
}
