//! Counting periods, demand tables, hotspots, congested duration and the
//! coordination graph.
//!
//! The free functions here work straight from a [`Scenario`] and a
//! [`DelayAssignment`] and are the reference path. [`TrafficModel`] is a
//! precompiled equivalent used in training loops, where one flight's delay
//! changes at a time.

mod compiled;

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scenario::{
    resolve_crossings, CountingRule, DelayAssignment, FlightId, Minute, ResolvedCrossing, Scenario, ScenarioError,
    SectorId,
};

pub use compiled::{Analysis, TrafficModel, TrafficState};

#[derive(Debug, Error)]
pub enum TrafficError {
    #[error("counting parameters: {0}")]
    Parameter(String),
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error("resolved crossing names unknown open sector {0}")]
    UnknownSector(SectorId),
}

/// A counting window `[start, end)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct CountingPeriod {
    pub index: usize,
    pub start: Minute,
    pub end: Minute,
}

impl CountingPeriod {
    pub fn overlaps(&self, entry: Minute, exit: Minute) -> bool {
        entry.max(self.start) < exit.min(self.end)
    }

    pub fn contains(&self, t: Minute) -> bool {
        self.start <= t && t < self.end
    }
}

/// Periods starting at `0, step, 2·step, …` while the start is before the
/// horizon. Trailing periods may run past the horizon.
pub fn counting_periods(horizon: Minute, duration: Minute, step: Minute) -> Result<Vec<CountingPeriod>, TrafficError> {
    if step == 0 || duration == 0 {
        return Err(TrafficError::Parameter("step and duration must be positive".into()));
    }
    if step > duration || duration > horizon {
        return Err(TrafficError::Parameter(format!(
            "need step ({step}) <= duration ({duration}) <= horizon ({horizon})"
        )));
    }
    Ok((0..)
        .map(|k| k * step)
        .take_while(|&start| start < horizon)
        .enumerate()
        .map(|(index, start)| CountingPeriod {
            index,
            start,
            end: start + duration,
        })
        .collect())
}

pub(crate) fn scenario_periods(s: &Scenario) -> Result<Vec<CountingPeriod>, TrafficError> {
    counting_periods(s.horizon, s.period_duration, s.period_step)
}

/// Whether a flight's fragments in one sector put it into `period`.
pub(crate) fn counts_in(rule: CountingRule, fragments: &[&ResolvedCrossing], period: &CountingPeriod) -> bool {
    match rule {
        CountingRule::Overlap => fragments.iter().any(|c| period.overlaps(c.entry, c.exit)),
        CountingRule::EntryOnly => fragments.iter().any(|c| period.contains(c.entry)),
    }
}

/// Entry counts per (open sector, counting period).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DemandTable {
    pub sectors: Vec<SectorId>,
    pub capacities: Vec<u32>,
    pub periods: Vec<CountingPeriod>,
    /// Row-major by sector, then period.
    counts: Vec<u32>,
}

impl DemandTable {
    pub fn count_at(&self, sector: usize, period: usize) -> u32 {
        self.counts[sector * self.periods.len() + period]
    }

    pub fn get(&self, sector: &SectorId, period: usize) -> Option<u32> {
        let s = self.sectors.iter().position(|x| x == sector)?;
        (period < self.periods.len()).then(|| self.count_at(s, period))
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().map(|&c| c as u64).sum()
    }

    /// `(sector, period, demand, capacity)` for every cell.
    pub fn cells(&self) -> impl Iterator<Item = (&SectorId, &CountingPeriod, u32, u32)> + '_ {
        self.sectors.iter().enumerate().flat_map(move |(s, id)| {
            self.periods
                .iter()
                .enumerate()
                .map(move |(p, period)| (id, period, self.count_at(s, p), self.capacities[s]))
        })
    }

    /// Rows `sector,period_start,period_end,demand,capacity,excess`.
    pub fn write_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(HOTSPOT_CSV_HEADER)?;
        for (id, period, demand, capacity) in self.cells() {
            w.write_record(csv_row(id, period, demand, capacity))?;
        }
        w.flush()?;
        Ok(())
    }
}

const HOTSPOT_CSV_HEADER: [&str; 6] = ["sector", "period_start", "period_end", "demand", "capacity", "excess"];

fn csv_row(id: &SectorId, period: &CountingPeriod, demand: u32, capacity: u32) -> [String; 6] {
    [
        id.to_string(),
        period.start.to_string(),
        period.end.to_string(),
        demand.to_string(),
        capacity.to_string(),
        demand.saturating_sub(capacity).to_string(),
    ]
}

/// Resolved fragments for every flight under `d`, grouped by open sector.
type Presence = Vec<BTreeMap<usize, Vec<ResolvedCrossing>>>;

fn resolve_all(s: &Scenario, d: &DelayAssignment) -> Result<Presence, TrafficError> {
    let sector_index: BTreeMap<&SectorId, usize> = s.sectors.iter().enumerate().map(|(i, x)| (&x.id, i)).collect();
    let mut out = Vec::with_capacity(s.flights.len());
    for f in &s.flights {
        let mut by_sector: BTreeMap<usize, Vec<ResolvedCrossing>> = BTreeMap::new();
        for c in resolve_crossings(f, d.get(&f.id), s)? {
            let idx = *sector_index
                .get(&c.sector)
                .ok_or_else(|| TrafficError::UnknownSector(c.sector.clone()))?;
            by_sector.entry(idx).or_default().push(c);
        }
        out.push(by_sector);
    }
    Ok(out)
}

/// Flight indices counted in each (sector, period) cell.
fn cell_members(s: &Scenario, presence: &Presence, periods: &[CountingPeriod]) -> Vec<Vec<usize>> {
    let mut members = vec![Vec::new(); s.sectors.len() * periods.len()];
    for (fi, by_sector) in presence.iter().enumerate() {
        for (&sector, fragments) in by_sector {
            let refs: Vec<&ResolvedCrossing> = fragments.iter().collect();
            for period in periods {
                if counts_in(s.counting_rule, &refs, period) {
                    members[sector * periods.len() + period.index].push(fi);
                }
            }
        }
    }
    members
}

/// Demand per (open sector, counting period). A flight counts at most once
/// per cell, however many fragments it has there.
pub fn compute_demand(s: &Scenario, d: &DelayAssignment) -> Result<DemandTable, TrafficError> {
    let periods = scenario_periods(s)?;
    let presence = resolve_all(s, d)?;
    let members = cell_members(s, &presence, &periods);
    Ok(DemandTable {
        sectors: s.sectors.iter().map(|x| x.id.clone()).collect(),
        capacities: s.sectors.iter().map(|x| x.capacity).collect(),
        periods,
        counts: members.iter().map(|m| m.len() as u32).collect(),
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Hotspot {
    pub sector: SectorId,
    pub period: CountingPeriod,
    pub demand: u32,
    pub capacity: u32,
    pub participants: BTreeSet<FlightId>,
}

impl Hotspot {
    pub fn excess(&self) -> u32 {
        self.demand - self.capacity
    }
}

/// Every (sector, period) whose demand exceeds capacity, ordered by sector
/// (scenario order) then period.
pub fn detect_hotspots(s: &Scenario, d: &DelayAssignment) -> Result<Vec<Hotspot>, TrafficError> {
    let periods = scenario_periods(s)?;
    let presence = resolve_all(s, d)?;
    Ok(hotspots_from(s, &presence, &periods))
}

fn hotspots_from(s: &Scenario, presence: &Presence, periods: &[CountingPeriod]) -> Vec<Hotspot> {
    let members = cell_members(s, presence, periods);
    let mut out = Vec::new();
    for (si, sector) in s.sectors.iter().enumerate() {
        for period in periods {
            let m = &members[si * periods.len() + period.index];
            if m.len() as u32 > sector.capacity {
                out.push(Hotspot {
                    sector: sector.id.clone(),
                    period: *period,
                    demand: m.len() as u32,
                    capacity: sector.capacity,
                    participants: m.iter().map(|&fi| s.flights[fi].id.clone()).collect(),
                });
            }
        }
    }
    out
}

/// Measure of the union of half-open intervals.
pub(crate) fn union_measure(intervals: &mut [(Minute, Minute)]) -> Minute {
    intervals.sort_unstable();
    let mut total = 0;
    let mut current: Option<(Minute, Minute)> = None;
    for &(lo, hi) in intervals.iter() {
        if lo >= hi {
            continue;
        }
        match current {
            Some((a, b)) if lo <= b => current = Some((a, b.max(hi))),
            Some((a, b)) => {
                total += b - a;
                current = Some((lo, hi));
            }
            None => current = Some((lo, hi)),
        }
    }
    if let Some((a, b)) = current {
        total += b - a;
    }
    total
}

fn tdc_of(fi: usize, flight: &FlightId, s: &Scenario, presence: &Presence, hotspots: &[Hotspot]) -> Minute {
    let sector_index: BTreeMap<&SectorId, usize> = s.sectors.iter().enumerate().map(|(i, x)| (&x.id, i)).collect();
    let mut spans = Vec::new();
    for h in hotspots.iter().filter(|h| h.participants.contains(flight)) {
        let Some(fragments) = presence[fi].get(&sector_index[&h.sector]) else {
            continue;
        };
        for c in fragments {
            let lo = c.entry.max(h.period.start);
            let hi = c.exit.min(h.period.end);
            if lo < hi {
                spans.push((lo, hi));
            }
        }
    }
    union_measure(&mut spans)
}

/// Minutes of `flight`'s presence that fall inside at least one hotspot it
/// takes part in. Overlapping congested periods count each minute once.
pub fn congested_duration(flight: &FlightId, s: &Scenario, d: &DelayAssignment) -> Result<Minute, TrafficError> {
    let fi = s
        .flight_index(flight)
        .ok_or_else(|| ScenarioError::UnknownFlight(flight.clone()))?;
    let periods = scenario_periods(s)?;
    let presence = resolve_all(s, d)?;
    let hotspots = hotspots_from(s, &presence, &periods);
    Ok(tdc_of(fi, flight, s, &presence, &hotspots))
}

/// Congested duration of every flight, in scenario order.
pub fn congested_durations(s: &Scenario, d: &DelayAssignment) -> Result<Vec<Minute>, TrafficError> {
    let periods = scenario_periods(s)?;
    let presence = resolve_all(s, d)?;
    let hotspots = hotspots_from(s, &presence, &periods);
    Ok(s.flights
        .iter()
        .enumerate()
        .map(|(fi, f)| tdc_of(fi, &f.id, s, &presence, &hotspots))
        .collect())
}

/// Writes hotspot rows in the same layout as [`DemandTable::write_csv`].
pub fn write_hotspots_csv<W: Write>(hotspots: &[Hotspot], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(HOTSPOT_CSV_HEADER)?;
    for h in hotspots {
        w.write_record(csv_row(&h.sector, &h.period, h.demand, h.capacity))?;
    }
    w.flush()?;
    Ok(())
}

/// Undirected graph linking flights that share at least one hotspot.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoordinationGraph {
    pub vertices: Vec<FlightId>,
    /// Each edge stored once with the smaller id first.
    pub edges: BTreeSet<(FlightId, FlightId)>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DegreeStats {
    pub min: usize,
    pub max: usize,
    /// Mean over vertices with at least one edge.
    pub mean_non_isolated: f64,
    pub mean_all: f64,
    pub non_isolated: usize,
}

impl CoordinationGraph {
    pub fn has_edge(&self, a: &FlightId, b: &FlightId) -> bool {
        let key = if a <= b { (a.clone(), b.clone()) } else { (b.clone(), a.clone()) };
        self.edges.contains(&key)
    }

    pub fn degree(&self, v: &FlightId) -> usize {
        self.edges.iter().filter(|(a, b)| a == v || b == v).count()
    }

    /// Neighbours of `v` including `v` itself.
    pub fn neighbourhood(&self, v: &FlightId) -> BTreeSet<FlightId> {
        let mut out: BTreeSet<FlightId> = self
            .edges
            .iter()
            .filter_map(|(a, b)| {
                if a == v {
                    Some(b.clone())
                } else if b == v {
                    Some(a.clone())
                } else {
                    None
                }
            })
            .collect();
        out.insert(v.clone());
        out
    }

    /// Degree statistics; `min`/`max` ignore isolated vertices.
    pub fn degree_stats(&self) -> DegreeStats {
        let mut degree: BTreeMap<&FlightId, usize> = self.vertices.iter().map(|v| (v, 0)).collect();
        for (a, b) in &self.edges {
            *degree.entry(a).or_default() += 1;
            *degree.entry(b).or_default() += 1;
        }
        let nz: Vec<usize> = degree.values().copied().filter(|&d| d > 0).collect();
        let sum: usize = nz.iter().sum();
        DegreeStats {
            min: nz.iter().copied().min().unwrap_or(0),
            max: nz.iter().copied().max().unwrap_or(0),
            mean_non_isolated: if nz.is_empty() { 0.0 } else { sum as f64 / nz.len() as f64 },
            mean_all: if degree.is_empty() { 0.0 } else { sum as f64 / degree.len() as f64 },
            non_isolated: nz.len(),
        }
    }
}

/// Vertex set is every flight of the scenario; edges are the union of all
/// participant pairs over `hotspots`.
pub fn build_graph(s: &Scenario, hotspots: &[Hotspot]) -> CoordinationGraph {
    let mut edges = BTreeSet::new();
    for h in hotspots {
        let ps: Vec<&FlightId> = h.participants.iter().collect();
        for (i, a) in ps.iter().enumerate() {
            for b in &ps[i + 1..] {
                edges.insert(((*a).clone(), (*b).clone()));
            }
        }
    }
    CoordinationGraph {
        vertices: s.flights.iter().map(|f| f.id.clone()).collect(),
        edges,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::{tiny3, FlightPlan, Sector, SectorCrossing};

    fn fid(s: &str) -> FlightId {
        FlightId::new(s)
    }

    #[test]
    fn periods_tiling_and_sliding() {
        let p = counting_periods(120, 60, 60).unwrap();
        assert_eq!(p.iter().map(|p| (p.start, p.end)).collect::<Vec<_>>(), vec![(0, 60), (60, 120)]);
        let p = counting_periods(120, 60, 30).unwrap();
        assert_eq!(
            p.iter().map(|p| (p.start, p.end)).collect::<Vec<_>>(),
            vec![(0, 60), (30, 90), (60, 120), (90, 150)]
        );
        let p = counting_periods(60, 60, 60).unwrap();
        assert_eq!(p.len(), 1);
        assert!(counting_periods(60, 0, 10).is_err());
        assert!(counting_periods(60, 30, 0).is_err());
        assert!(counting_periods(60, 30, 40).is_err());
    }

    #[test]
    fn tiny3_demand() {
        let s = tiny3();
        let s1 = SectorId::new("S1");
        let d = compute_demand(&s, &DelayAssignment::zeros()).unwrap();
        assert_eq!(d.get(&s1, 0), Some(3));
        assert_eq!(d.get(&s1, 1), Some(0));
        let d = compute_demand(&s, &DelayAssignment::from_pairs([("f3", 10)])).unwrap();
        assert_eq!(d.get(&s1, 0), Some(2));
        assert_eq!(d.get(&s1, 1), Some(1));
    }

    #[test]
    fn empty_flights_zero_demand() {
        let mut s = tiny3();
        s.flights.clear();
        let d = compute_demand(&s, &DelayAssignment::zeros()).unwrap();
        assert_eq!(d.total(), 0);
        assert!(detect_hotspots(&s, &DelayAssignment::zeros()).unwrap().is_empty());
    }

    #[test]
    fn tiny3_hotspots() {
        let s = tiny3();
        let h = detect_hotspots(&s, &DelayAssignment::zeros()).unwrap();
        assert_eq!(h.len(), 1);
        assert_eq!(h[0].sector, SectorId::new("S1"));
        assert_eq!((h[0].period.start, h[0].period.end), (0, 60));
        assert_eq!((h[0].demand, h[0].capacity), (3, 2));
        assert_eq!(h[0].participants, [fid("f1"), fid("f2"), fid("f3")].into_iter().collect());
        assert!(detect_hotspots(&s, &DelayAssignment::from_pairs([("f3", 10)])).unwrap().is_empty());
    }

    #[test]
    fn zero_capacity_every_demanded_cell_is_hot() {
        let mut s = tiny3();
        s.sectors[0].capacity = 0;
        s.period_step = 30;
        let demand = compute_demand(&s, &DelayAssignment::zeros()).unwrap();
        let hot = detect_hotspots(&s, &DelayAssignment::zeros()).unwrap();
        let demanded = demand.cells().filter(|c| c.2 > 0).count();
        assert_eq!(hot.len(), demanded);
        assert!(demanded > 0);
    }

    #[test]
    fn tiny3_congested_duration() {
        let s = tiny3();
        let zero = DelayAssignment::zeros();
        assert_eq!(congested_duration(&fid("f3"), &s, &zero).unwrap(), 9);
        assert_eq!(congested_durations(&s, &zero).unwrap(), vec![10, 10, 9]);
        let fixed = DelayAssignment::from_pairs([("f3", 10)]);
        assert_eq!(congested_durations(&s, &fixed).unwrap(), vec![0, 0, 0]);
    }

    #[test]
    fn overlapping_congested_periods_count_once() {
        let crossing = |entry, exit| SectorCrossing {
            sector: SectorId::new("S"),
            entry,
            exit,
        };
        let flight = |id: &str, entry, exit| FlightPlan {
            id: fid(id),
            crossings: vec![crossing(entry, exit)],
            max_delay: 0,
            aircraft_class: "medium".into(),
            regulatable: true,
        };
        let s = Scenario {
            sectors: vec![Sector {
                id: SectorId::new("S"),
                capacity: 1,
            }],
            timeline: vec![],
            flights: vec![flight("a", 55, 65), flight("b", 40, 70)],
            horizon: 120,
            period_duration: 60,
            period_step: 30,
            counting_rule: CountingRule::Overlap,
        };
        let hot = detect_hotspots(&s, &DelayAssignment::zeros()).unwrap();
        assert_eq!(
            hot.iter().map(|h| h.period.start).collect::<Vec<_>>(),
            vec![0, 30, 60]
        );
        assert_eq!(congested_duration(&fid("a"), &s, &DelayAssignment::zeros()).unwrap(), 10);
    }

    #[test]
    fn entry_only_rule() {
        let mut s = tiny3();
        s.counting_rule = CountingRule::EntryOnly;
        s.flights[0].crossings[0].entry = 0;
        s.flights[0].crossings[0].exit = 70;
        s.flights[0].max_delay = 0;
        let d = compute_demand(&s, &DelayAssignment::from_pairs([("f3", 10)])).unwrap();
        assert_eq!(d.get(&SectorId::new("S1"), 1), Some(1));
        s.counting_rule = CountingRule::Overlap;
        let d = compute_demand(&s, &DelayAssignment::from_pairs([("f3", 10)])).unwrap();
        assert_eq!(d.get(&SectorId::new("S1"), 1), Some(2));
    }

    #[test]
    fn tiny3_graph_is_triangle() {
        let s = tiny3();
        let g = build_graph(&s, &detect_hotspots(&s, &DelayAssignment::zeros()).unwrap());
        assert_eq!(g.edges.len(), 3);
        assert!(g.has_edge(&fid("f1"), &fid("f2")));
        assert!(g.has_edge(&fid("f3"), &fid("f1")));
        assert_eq!(g.neighbourhood(&fid("f1")).len(), 3);
        let stats = g.degree_stats();
        assert_eq!((stats.min, stats.max), (2, 2));
        assert_eq!(stats.mean_non_isolated, 2.0);
    }

    #[test]
    fn graph_is_union_of_cliques() {
        let s = tiny3();
        assert!(build_graph(&s, &[]).edges.is_empty());
        let hs = |ids: [&str; 2], idx| Hotspot {
            sector: SectorId::new("S1"),
            period: CountingPeriod {
                index: idx,
                start: 0,
                end: 60,
            },
            demand: 2,
            capacity: 1,
            participants: ids.iter().map(|x| fid(x)).collect(),
        };
        let g = build_graph(&s, &[hs(["a", "b"], 0), hs(["c", "d"], 1)]);
        assert_eq!(g.edges.len(), 2);
        assert!(!g.has_edge(&fid("a"), &fid("c")));
        assert_eq!(g.neighbourhood(&fid("f1")).len(), 1);
    }

    #[test]
    fn union_measure_merges() {
        assert_eq!(union_measure(&mut [(55, 60), (55, 65)]), 10);
        assert_eq!(union_measure(&mut [(0, 5), (10, 15), (4, 11)]), 15);
        assert_eq!(union_measure(&mut []), 0);
    }

    #[test]
    fn demand_csv_layout() {
        let s = tiny3();
        let d = compute_demand(&s, &DelayAssignment::zeros()).unwrap();
        let mut buf = Vec::new();
        d.write_csv(&mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "sector,period_start,period_end,demand,capacity,excess\nS1,0,60,3,2,1\nS1,60,120,0,2,0\n"
        );
    }
}
