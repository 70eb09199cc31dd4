//! Random micro-scenarios and minute-by-minute reference computations.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use dcb_marl::scenario::{
    ConfigurationInterval, CountingRule, DelayAssignment, FlightId, FlightPlan, Minute, Scenario, Sector,
    SectorCrossing, SectorId,
};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const HORIZON: Minute = 120;

/// Up to 5 flights over 3 elementary sectors mapped onto 1 or 2 open
/// sectors, with an optional reconfiguration and max delays up to 6.
pub fn random_scenario(seed: u64) -> Scenario {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_open = rng.gen_range(1..=2);
    let open: Vec<SectorId> = ["A", "B"][..n_open].iter().map(|s| SectorId::new(*s)).collect();
    let elementary: Vec<SectorId> = ["e1", "e2", "e3"].iter().map(|s| SectorId::new(*s)).collect();
    let mut cuts = vec![0, HORIZON];
    if rng.gen_bool(0.5) {
        cuts.insert(1, rng.gen_range(1..HORIZON / 10) * 10 + rng.gen_range(0..3));
    }
    let timeline = cuts
        .windows(2)
        .map(|w| ConfigurationInterval {
            start: w[0],
            end: w[1],
            mapping: elementary
                .iter()
                .map(|e| (e.clone(), open.choose(&mut rng).unwrap().clone()))
                .collect(),
        })
        .collect();
    let (period_duration, period_step) = *[(30, 15), (30, 30), (60, 30), (20, 10), (60, 60)].choose(&mut rng).unwrap();
    let flights = (0..rng.gen_range(1..=5))
        .map(|k| {
            let max_delay = rng.gen_range(0..=6);
            let mut t = rng.gen_range(0..70);
            let crossings = (0..rng.gen_range(1..=3))
                .map(|_| {
                    let len = rng.gen_range(1..=15);
                    let c = SectorCrossing {
                        sector: elementary.choose(&mut rng).unwrap().clone(),
                        entry: t,
                        exit: t + len,
                    };
                    t += len;
                    c
                })
                .collect();
            FlightPlan {
                id: FlightId::new(format!("x{k}")),
                crossings,
                max_delay,
                aircraft_class: "medium".into(),
                regulatable: rng.gen_bool(0.85),
            }
        })
        .collect();
    Scenario {
        sectors: open
            .iter()
            .map(|id| Sector {
                id: id.clone(),
                capacity: rng.gen_range(0..=2),
            })
            .collect(),
        timeline,
        flights,
        horizon: HORIZON,
        period_duration,
        period_step,
        counting_rule: if rng.gen_bool(0.25) {
            CountingRule::EntryOnly
        } else {
            CountingRule::Overlap
        },
    }
}

/// A feasible assignment drawn uniformly per flight.
pub fn random_delays(s: &Scenario, seed: u64) -> DelayAssignment {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let mut d = DelayAssignment::zeros();
    for f in &s.flights {
        d.set(f.id.clone(), rng.gen_range(0..=f.effective_max_delay()));
    }
    d
}

/// Open sector occupied by `f` at minute `t`, if any.
pub fn open_sector_at(s: &Scenario, f: &FlightPlan, delay: Minute, t: Minute) -> Option<SectorId> {
    let c = f.crossings.iter().find(|c| c.entry + delay <= t && t < c.exit + delay)?;
    let interval = s.timeline.iter().find(|i| i.start <= t && t < i.end)?;
    Some(interval.mapping.get(&c.sector).cloned().unwrap_or_else(|| c.sector.clone()))
}

/// Periods as `(start, end)`: every start below the horizon, the last ones
/// running past it.
pub fn periods(s: &Scenario) -> Vec<(Minute, Minute)> {
    let mut out = Vec::new();
    let mut start = 0;
    while start < s.horizon {
        out.push((start, start + s.period_duration));
        start += s.period_step;
    }
    out
}

/// Whether `f` is counted in `(sector, [start, end))`, decided minute by minute.
pub fn counted(s: &Scenario, f: &FlightPlan, delay: Minute, sector: &SectorId, start: Minute, end: Minute) -> bool {
    (start..end).any(|t| {
        let here = open_sector_at(s, f, delay, t).as_ref() == Some(sector);
        match s.counting_rule {
            CountingRule::Overlap => here,
            CountingRule::EntryOnly => {
                here && (t == 0 || open_sector_at(s, f, delay, t - 1).as_ref() != Some(sector))
            }
        }
    })
}

/// Flights counted in every (sector, period index) cell.
pub fn scan_members(s: &Scenario, d: &DelayAssignment) -> BTreeMap<(SectorId, usize), BTreeSet<FlightId>> {
    let mut out = BTreeMap::new();
    for sector in &s.sectors {
        for (p, &(start, end)) in periods(s).iter().enumerate() {
            let members = s
                .flights
                .iter()
                .filter(|f| counted(s, f, d.get(&f.id), &sector.id, start, end))
                .map(|f| f.id.clone())
                .collect();
            out.insert((sector.id.clone(), p), members);
        }
    }
    out
}

/// Minutes during which `flight` sits in a cell it makes congested.
pub fn scan_tdc(s: &Scenario, d: &DelayAssignment, flight: &FlightId) -> Minute {
    let f = s.flights.iter().find(|f| &f.id == flight).unwrap();
    let cap: BTreeMap<&SectorId, u32> = s.sectors.iter().map(|x| (&x.id, x.capacity)).collect();
    let ps = periods(s);
    let hot: Vec<(SectorId, Minute, Minute)> = scan_members(s, d)
        .into_iter()
        .filter(|((sector, _), m)| m.len() as u32 > cap[sector] && m.contains(flight))
        .map(|((sector, p), _)| (sector, ps[p].0, ps[p].1))
        .collect();
    let delay = d.get(flight);
    (0..s.horizon)
        .filter(|&t| {
            let here = open_sector_at(s, f, delay, t);
            hot.iter()
                .any(|(sector, a, b)| *a <= t && t < *b && here.as_ref() == Some(sector))
        })
        .count() as Minute
}

/// Smallest total delay of a hotspot-free assignment, by plain enumeration.
pub fn scan_min_total_delay(s: &Scenario) -> Option<u64> {
    let maxes: Vec<Minute> = s.flights.iter().map(|f| f.effective_max_delay()).collect();
    let cap: BTreeMap<&SectorId, u32> = s.sectors.iter().map(|x| (&x.id, x.capacity)).collect();
    let mut best = None;
    let mut delays = vec![0; maxes.len()];
    loop {
        let total: u64 = delays.iter().map(|&x| x as u64).sum();
        if best.is_none_or(|b| total < b) {
            let d = DelayAssignment::from_indexed(s, &delays);
            if scan_members(s, &d).iter().all(|((sector, _), m)| m.len() as u32 <= cap[sector]) {
                best = Some(total);
            }
        }
        let mut k = 0;
        loop {
            if k == delays.len() {
                return best;
            }
            if delays[k] < maxes[k] {
                delays[k] += 1;
                break;
            }
            delays[k] = 0;
            k += 1;
        }
    }
}
