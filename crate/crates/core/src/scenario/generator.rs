//! Seeded synthetic scenario generator.
//!
//! Flights follow random walks over the sector set with contiguous crossings
//! and departures spread over the horizon, leaving room for their max delay.
//! Capacities are then lowered sector by sector until the zero-delay demand
//! produces the requested number of hotspots. Draws can be restricted to
//! ones where a greedy search finds a hotspot-free assignment.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{
    ConfigurationInterval, CountingRule, DelayAssignment, FlightId, FlightPlan, Minute, Scenario, Sector,
    SectorCrossing, SectorId,
};
use crate::traffic;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CapacityMode {
    /// Every sector gets the same capacity.
    Fixed(u32),
    /// Capacities are tuned so the zero-delay hotspot count lands in
    /// `target ± tolerance`. Capacities never drop below 1.
    Calibrated { target_hotspots: usize, tolerance: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeneratorParams {
    pub n_flights: usize,
    pub n_sectors: usize,
    pub horizon: Minute,
    pub period_duration: Minute,
    pub period_step: Minute,
    /// Inclusive range each flight's max delay is drawn from.
    pub max_delay: (Minute, Minute),
    /// Inclusive range for the number of crossings per flight.
    pub crossings_per_flight: (usize, usize),
    /// Inclusive range for a single crossing's duration.
    pub crossing_duration: (Minute, Minute),
    pub capacity: CapacityMode,
    /// Share of flights marked non-regulatable.
    pub non_regulatable_fraction: f64,
    pub aircraft_classes: Vec<String>,
    /// Redraws allowed until a draw is certified solvable; 0 skips the check.
    #[serde(default)]
    pub solvable_attempts: u32,
}

impl GeneratorParams {
    /// Desk-scale default: 60 flights over 6 sectors, ~8 initial hotspots.
    pub fn desk() -> Self {
        GeneratorParams {
            n_flights: 60,
            n_sectors: 6,
            horizon: 360,
            period_duration: 60,
            period_step: 30,
            max_delay: (20, 30),
            crossings_per_flight: (1, 3),
            crossing_duration: (10, 30),
            capacity: CapacityMode::Calibrated {
                target_hotspots: 8,
                tolerance: 1,
            },
            non_regulatable_fraction: 0.0,
            aircraft_classes: vec!["light".into(), "medium".into(), "heavy".into()],
            solvable_attempts: 200,
        }
    }

    /// Micro scenarios small enough for exhaustive search. Periods and
    /// crossings are short so that delays of a few minutes matter.
    pub fn micro(n_flights: usize, n_sectors: usize, max_delay: Minute) -> Self {
        GeneratorParams {
            n_flights,
            n_sectors,
            horizon: 60,
            period_duration: 10,
            period_step: 5,
            max_delay: (1.min(max_delay), max_delay),
            crossings_per_flight: (1, 2),
            crossing_duration: (2, 8),
            capacity: CapacityMode::Calibrated {
                target_hotspots: 2,
                tolerance: 1,
            },
            non_regulatable_fraction: 0.0,
            aircraft_classes: vec!["medium".into()],
            solvable_attempts: 100,
        }
    }
}

#[derive(Debug, Error)]
pub enum GenerationError {
    #[error("invalid generator parameters: {0}")]
    InvalidParams(String),
    #[error("cannot reach {target} ± {tolerance} hotspots: got {achieved} (at most {achievable} reachable with capacity >= 1)")]
    TargetUnreachable {
        target: usize,
        tolerance: usize,
        achieved: usize,
        achievable: usize,
    },
    #[error("no draw in {attempts} attempts was certified solvable")]
    NoSolvableDraw { attempts: u32 },
}

/// Builds a scenario as a pure function of `(params, seed)`.
///
/// With `solvable_attempts > 0`, draws are repeated on successive RNG
/// streams until [`greedy_witness`] finds a hotspot-free assignment.
pub fn generate_scenario(params: &GeneratorParams, seed: u64) -> Result<Scenario, GenerationError> {
    check_params(params)?;
    if params.solvable_attempts == 0 {
        return generate_once(params, &mut ChaCha8Rng::seed_from_u64(seed));
    }
    let mut last_miss = None;
    for attempt in 0..params.solvable_attempts {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(attempt as u64);
        match generate_once(params, &mut rng) {
            Ok(s) if greedy_witness(&s)?.is_some() => return Ok(s),
            Ok(_) => {}
            Err(e @ GenerationError::TargetUnreachable { .. }) => last_miss = Some(e),
            Err(e) => return Err(e),
        }
    }
    Err(last_miss.unwrap_or(GenerationError::NoSolvableDraw {
        attempts: params.solvable_attempts,
    }))
}

/// Coordinate descent on total excess demand: each pass sets every flight
/// to the delay that minimises excess, preferring smaller delays. Returns
/// the delays once excess reaches zero, or `None` when a pass stalls.
pub fn greedy_witness(s: &Scenario) -> Result<Option<Vec<Minute>>, GenerationError> {
    let model = traffic::TrafficModel::compile(s).map_err(|e| GenerationError::InvalidParams(e.to_string()))?;
    let mut state = traffic::TrafficState::new(&model);
    loop {
        if state.excess() == 0 {
            return Ok(Some(state.delays().to_vec()));
        }
        let mut improved = false;
        for f in 0..model.n_flights() {
            let current = (state.excess(), state.delay(f));
            let mut best = current;
            for d in 0..=model.max_delay(f) {
                state.set_delay(f, d);
                best = best.min((state.excess(), d));
            }
            state.set_delay(f, best.1);
            improved |= best < current;
        }
        if !improved {
            return Ok(None);
        }
    }
}

fn generate_once(params: &GeneratorParams, rng: &mut ChaCha8Rng) -> Result<Scenario, GenerationError> {

    let sector_ids: Vec<SectorId> = (1..=params.n_sectors).map(|i| SectorId(format!("S{i}"))).collect();
    let width = params.n_flights.to_string().len().max(3);

    let n_fixed = (params.non_regulatable_fraction * params.n_flights as f64).round() as usize;
    let mut fixed = vec![false; params.n_flights];
    for slot in fixed.iter_mut().take(n_fixed) {
        *slot = true;
    }
    fixed.shuffle(rng);

    let mut flights = Vec::with_capacity(params.n_flights);
    for (i, &non_reg) in fixed.iter().enumerate() {
        let max_delay = rng.gen_range(params.max_delay.0..=params.max_delay.1);
        let hops = rng.gen_range(params.crossings_per_flight.0..=params.crossings_per_flight.1);
        let durations: Vec<Minute> = (0..hops)
            .map(|_| rng.gen_range(params.crossing_duration.0..=params.crossing_duration.1))
            .collect();
        let route_len: Minute = durations.iter().sum();
        let latest = params.horizon - route_len - max_delay;
        let mut t = rng.gen_range(0..=latest);

        let mut crossings = Vec::with_capacity(hops);
        let mut current: Option<usize> = None;
        for d in durations {
            let next = loop {
                let candidate = rng.gen_range(0..params.n_sectors);
                if params.n_sectors == 1 || Some(candidate) != current {
                    break candidate;
                }
            };
            crossings.push(SectorCrossing {
                sector: sector_ids[next].clone(),
                entry: t,
                exit: t + d,
            });
            t += d;
            current = Some(next);
        }
        let class = params.aircraft_classes[rng.gen_range(0..params.aircraft_classes.len())].clone();
        flights.push(FlightPlan {
            id: FlightId(format!("F{:0width$}", i + 1)),
            crossings,
            max_delay,
            aircraft_class: class,
            regulatable: !non_reg,
        });
    }

    let initial_capacity = match params.capacity {
        CapacityMode::Fixed(c) => c,
        CapacityMode::Calibrated { .. } => u32::MAX,
    };
    let mut scenario = Scenario {
        sectors: sector_ids
            .iter()
            .map(|id| Sector {
                id: id.clone(),
                capacity: initial_capacity,
            })
            .collect(),
        timeline: vec![ConfigurationInterval {
            start: 0,
            end: params.horizon,
            mapping: sector_ids.iter().map(|id| (id.clone(), id.clone())).collect(),
        }],
        flights,
        horizon: params.horizon,
        period_duration: params.period_duration,
        period_step: params.period_step,
        counting_rule: CountingRule::Overlap,
    };

    if let CapacityMode::Calibrated {
        target_hotspots,
        tolerance,
    } = params.capacity
    {
        calibrate_capacities(&mut scenario, target_hotspots, tolerance, rng)?;
    }
    Ok(scenario)
}

fn check_params(p: &GeneratorParams) -> Result<(), GenerationError> {
    let bad = |msg: &str| Err(GenerationError::InvalidParams(msg.to_string()));
    if p.n_sectors == 0 {
        return bad("need at least one sector");
    }
    if p.period_step == 0 || p.period_step > p.period_duration || p.period_duration > p.horizon {
        return bad("need 0 < period_step <= period_duration <= horizon");
    }
    if p.max_delay.0 > p.max_delay.1 {
        return bad("empty max_delay range");
    }
    if p.crossings_per_flight.0 == 0 || p.crossings_per_flight.0 > p.crossings_per_flight.1 {
        return bad("crossings_per_flight must be a non-empty range starting at >= 1");
    }
    if p.crossing_duration.0 == 0 || p.crossing_duration.0 > p.crossing_duration.1 {
        return bad("crossing_duration must be a non-empty range starting at >= 1");
    }
    let longest = p.crossings_per_flight.1 as u64 * p.crossing_duration.1 as u64 + p.max_delay.1 as u64;
    if longest > p.horizon as u64 {
        return bad("longest route plus max delay does not fit in the horizon");
    }
    if p.aircraft_classes.is_empty() {
        return bad("need at least one aircraft class");
    }
    if !(0.0..=1.0).contains(&p.non_regulatable_fraction) {
        return bad("non_regulatable_fraction must lie in [0, 1]");
    }
    Ok(())
}

/// Lowers capacities, one demand level at a time, until the zero-delay
/// hotspot count reaches the target.
fn calibrate_capacities(
    scenario: &mut Scenario,
    target: usize,
    tolerance: usize,
    rng: &mut ChaCha8Rng,
) -> Result<(), GenerationError> {
    let demand = traffic::compute_demand(scenario, &DelayAssignment::zeros())
        .map_err(|e| GenerationError::InvalidParams(e.to_string()))?;
    let n_periods = demand.periods.len();
    let per_sector: Vec<Vec<u32>> = (0..scenario.sectors.len())
        .map(|s| (0..n_periods).map(|p| demand.count_at(s, p)).collect())
        .collect();

    let achievable: usize = per_sector.iter().flatten().filter(|&&d| d >= 2).count();
    if target.saturating_sub(tolerance) > achievable {
        return Err(GenerationError::TargetUnreachable {
            target,
            tolerance,
            achieved: 0,
            achievable,
        });
    }

    let hot = |s: usize, cap: u32| per_sector[s].iter().filter(|&&d| d > cap).count();
    let mut caps: Vec<u32> = per_sector.iter().map(|d| d.iter().copied().max().unwrap_or(0).max(1)).collect();
    let mut total = 0usize;

    while total < target {
        // Each move drops a sector's capacity to just below its highest
        // still-uncongested demand level.
        let mut moves: BTreeMap<usize, Vec<(usize, u32)>> = BTreeMap::new();
        for (s, demands) in per_sector.iter().enumerate() {
            let level = demands.iter().copied().filter(|&d| d <= caps[s]).max().unwrap_or(0);
            if level >= 2 {
                let new_cap = level - 1;
                let gain = hot(s, new_cap) - hot(s, caps[s]);
                moves.entry(gain).or_default().push((s, new_cap));
            }
        }
        let remaining = target - total;
        let pick = moves
            .range(..=remaining)
            .next_back()
            .or_else(|| moves.range(remaining + 1..=remaining + tolerance).next())
            .map(|(_, v)| v.clone());
        let Some(options) = pick else { break };
        let &(s, new_cap) = options.choose(rng).expect("non-empty move list");
        total += hot(s, new_cap) - hot(s, caps[s]);
        caps[s] = new_cap;
    }

    if total + tolerance < target || total > target + tolerance {
        return Err(GenerationError::TargetUnreachable {
            target,
            tolerance,
            achieved: total,
            achievable,
        });
    }
    for (sector, cap) in scenario.sectors.iter_mut().zip(caps) {
        sector.capacity = cap;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::validate_scenario;
    use crate::traffic::detect_hotspots;

    #[test]
    fn same_seed_same_scenario() {
        let p = GeneratorParams::desk();
        assert_eq!(generate_scenario(&p, 7).unwrap(), generate_scenario(&p, 7).unwrap());
        assert_ne!(generate_scenario(&p, 7).unwrap(), generate_scenario(&p, 8).unwrap());
    }

    #[test]
    fn generated_scenarios_validate() {
        for seed in 0..10 {
            let s = generate_scenario(&GeneratorParams::desk(), seed).unwrap();
            let report = validate_scenario(&s);
            assert!(report.is_empty(), "seed {seed}: {report}");
        }
    }

    #[test]
    fn calibrated_hotspots_within_tolerance() {
        let mut p = GeneratorParams::desk();
        p.n_flights = 50;
        let s = generate_scenario(&p, 7).unwrap();
        let n = detect_hotspots(&s, &DelayAssignment::zeros()).unwrap().len();
        assert!((7..=9).contains(&n), "got {n} hotspots");
    }

    #[test]
    fn roomy_single_sector_has_no_hotspots() {
        let mut p = GeneratorParams::micro(12, 1, 5);
        p.capacity = CapacityMode::Fixed(12);
        let s = generate_scenario(&p, 3).unwrap();
        assert!(detect_hotspots(&s, &DelayAssignment::zeros()).unwrap().is_empty());
    }

    #[test]
    fn unreachable_target_fails() {
        let mut p = GeneratorParams::micro(3, 1, 5);
        p.capacity = CapacityMode::Calibrated {
            target_hotspots: 500,
            tolerance: 0,
        };
        assert!(matches!(
            generate_scenario(&p, 1),
            Err(GenerationError::TargetUnreachable { .. })
        ));
    }

    #[test]
    fn bad_params_fail() {
        let mut p = GeneratorParams::desk();
        p.n_sectors = 0;
        assert!(matches!(generate_scenario(&p, 1), Err(GenerationError::InvalidParams(_))));
        let mut p = GeneratorParams::desk();
        p.horizon = 50;
        p.period_duration = 50;
        assert!(matches!(generate_scenario(&p, 1), Err(GenerationError::InvalidParams(_))));
    }

    #[test]
    fn non_regulatable_share() {
        let mut p = GeneratorParams::desk();
        p.non_regulatable_fraction = 0.1;
        let s = generate_scenario(&p, 2).unwrap();
        assert_eq!(s.flights.iter().filter(|f| !f.regulatable).count(), 6);
    }
}
