//! Airspace and flight data model.
//!
//! Flight plans reference *elementary* sectors. A configuration timeline maps
//! elementary sectors onto the *open* sectors that carry a capacity, one
//! mapping per time interval. A ground delay shifts the whole trajectory, so a
//! delayed flight can end up crossing a different set of open sectors.

mod generator;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use generator::{generate_scenario, greedy_witness, CapacityMode, GenerationError, GeneratorParams};

/// Integer minutes from scenario start.
pub type Minute = u32;

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SectorId(pub String);

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FlightId(pub String);

impl SectorId {
    pub fn new(id: impl Into<String>) -> Self {
        SectorId(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl FlightId {
    pub fn new(id: impl Into<String>) -> Self {
        FlightId(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for SectorId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Display for FlightId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// An open sector and its capacity (max entries per counting-period duration).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sector {
    pub id: SectorId,
    pub capacity: u32,
}

/// One active sector configuration over `[start, end)`.
///
/// Elementary sectors missing from `mapping` resolve to themselves, which
/// only validates when an open sector of that id exists.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfigurationInterval {
    #[serde(rename = "start_min")]
    pub start: Minute,
    #[serde(rename = "end_min")]
    pub end: Minute,
    #[serde(default)]
    pub mapping: BTreeMap<SectorId, SectorId>,
}

/// Presence of a flight in an elementary sector over `[entry, exit)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SectorCrossing {
    pub sector: SectorId,
    #[serde(rename = "entry_min")]
    pub entry: Minute,
    #[serde(rename = "exit_min")]
    pub exit: Minute,
}

fn default_class() -> String {
    "medium".to_string()
}

fn default_true() -> bool {
    true
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlightPlan {
    pub id: FlightId,
    pub crossings: Vec<SectorCrossing>,
    #[serde(rename = "max_delay_min")]
    pub max_delay: Minute,
    #[serde(default = "default_class")]
    pub aircraft_class: String,
    /// Non-commercial flights count towards demand but are never delayed.
    #[serde(default = "default_true")]
    pub regulatable: bool,
}

impl FlightPlan {
    /// Largest delay this flight may actually receive.
    pub fn effective_max_delay(&self) -> Minute {
        if self.regulatable {
            self.max_delay
        } else {
            0
        }
    }

    pub fn total_crossing_duration(&self) -> Minute {
        self.crossings.iter().map(|c| c.exit.saturating_sub(c.entry)).sum()
    }
}

/// How a flight is counted into a (sector, period) cell.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CountingRule {
    /// Presence interval overlaps the period.
    #[default]
    Overlap,
    /// Entry time falls inside the period.
    EntryOnly,
}

fn default_period_duration() -> Minute {
    60
}

fn default_period_step() -> Minute {
    30
}

fn is_default_rule(rule: &CountingRule) -> bool {
    *rule == CountingRule::Overlap
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub sectors: Vec<Sector>,
    #[serde(default)]
    pub timeline: Vec<ConfigurationInterval>,
    pub flights: Vec<FlightPlan>,
    #[serde(rename = "horizon_min")]
    pub horizon: Minute,
    #[serde(rename = "period_duration_min", default = "default_period_duration")]
    pub period_duration: Minute,
    #[serde(rename = "period_step_min", default = "default_period_step")]
    pub period_step: Minute,
    #[serde(default, skip_serializing_if = "is_default_rule")]
    pub counting_rule: CountingRule,
}

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("flight {flight}: delay {delay} outside [0, {max}]")]
    DelayOutOfRange {
        flight: FlightId,
        delay: Minute,
        max: Minute,
    },
    #[error("flight {flight}: crossing {index} delayed by {delay} ends at {end}, beyond horizon {horizon}")]
    OutOfHorizon {
        flight: FlightId,
        index: usize,
        delay: Minute,
        end: Minute,
        horizon: Minute,
    },
    #[error("elementary sector {sector} has no open sector at minute {at}")]
    Unmapped { sector: SectorId, at: Minute },
    #[error("unknown flight {0}")]
    UnknownFlight(FlightId),
    #[error("scenario is invalid:\n{0}")]
    Invalid(ValidationReport),
    #[error("reading scenario: {0}")]
    Io(#[from] std::io::Error),
    #[error("parsing scenario: {0}")]
    Parse(#[from] serde_json::Error),
}

impl Scenario {
    pub fn from_json_str(text: &str) -> Result<Self, ScenarioError> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ScenarioError> {
        let text = fs::read_to_string(path)?;
        Self::from_json_str(&text)
    }

    /// Loads and rejects any scenario with a non-empty validation report.
    pub fn load_validated(path: impl AsRef<Path>) -> Result<Self, ScenarioError> {
        let scenario = Self::load(path)?;
        let report = validate_scenario(&scenario);
        if report.is_empty() {
            Ok(scenario)
        } else {
            Err(ScenarioError::Invalid(report))
        }
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), ScenarioError> {
        fs::write(path, self.to_json_string() + "\n")?;
        Ok(())
    }

    pub fn flight(&self, id: &FlightId) -> Option<&FlightPlan> {
        self.flights.iter().find(|f| &f.id == id)
    }

    pub fn flight_index(&self, id: &FlightId) -> Option<usize> {
        self.flights.iter().position(|f| &f.id == id)
    }

    pub fn sector(&self, id: &SectorId) -> Option<&Sector> {
        self.sectors.iter().find(|s| &s.id == id)
    }

    /// Largest effective max delay over all flights.
    pub fn max_delay(&self) -> Minute {
        self.flights.iter().map(FlightPlan::effective_max_delay).max().unwrap_or(0)
    }

    /// The configuration intervals in effect, with an identity interval
    /// standing in for an empty timeline.
    pub fn effective_timeline(&self) -> Vec<ConfigurationInterval> {
        if self.timeline.is_empty() {
            vec![ConfigurationInterval {
                start: 0,
                end: self.horizon,
                mapping: BTreeMap::new(),
            }]
        } else {
            let mut t = self.timeline.clone();
            t.sort_by_key(|i| i.start);
            t
        }
    }

    fn open_sector_for(&self, interval: &ConfigurationInterval, elementary: &SectorId) -> Option<SectorId> {
        match interval.mapping.get(elementary) {
            Some(open) => Some(open.clone()),
            None => self.sector(elementary).map(|s| s.id.clone()),
        }
    }
}

/// A fragment of a resolved trajectory in an open sector over `[entry, exit)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResolvedCrossing {
    pub sector: SectorId,
    pub entry: Minute,
    pub exit: Minute,
}

impl ResolvedCrossing {
    pub fn new(sector: impl Into<String>, entry: Minute, exit: Minute) -> Self {
        ResolvedCrossing {
            sector: SectorId::new(sector),
            entry,
            exit,
        }
    }
}

/// Shifts every crossing of `flight` by `delay` minutes and maps the shifted
/// spans onto open sectors, splitting at configuration boundaries.
///
/// Abutting fragments that land in the same open sector are merged.
pub fn resolve_crossings(
    flight: &FlightPlan,
    delay: Minute,
    scenario: &Scenario,
) -> Result<Vec<ResolvedCrossing>, ScenarioError> {
    if delay > flight.effective_max_delay() {
        return Err(ScenarioError::DelayOutOfRange {
            flight: flight.id.clone(),
            delay,
            max: flight.effective_max_delay(),
        });
    }
    let timeline = scenario.effective_timeline();
    let mut out: Vec<ResolvedCrossing> = Vec::with_capacity(flight.crossings.len());
    for (index, crossing) in flight.crossings.iter().enumerate() {
        let lo = crossing.entry + delay;
        let hi = crossing.exit + delay;
        if hi > scenario.horizon {
            return Err(ScenarioError::OutOfHorizon {
                flight: flight.id.clone(),
                index,
                delay,
                end: hi,
                horizon: scenario.horizon,
            });
        }
        let mut covered = lo;
        for interval in &timeline {
            let a = lo.max(interval.start);
            let b = hi.min(interval.end);
            if a >= b {
                continue;
            }
            if a > covered {
                return Err(ScenarioError::Unmapped {
                    sector: crossing.sector.clone(),
                    at: covered,
                });
            }
            let open = scenario
                .open_sector_for(interval, &crossing.sector)
                .ok_or_else(|| ScenarioError::Unmapped {
                    sector: crossing.sector.clone(),
                    at: a,
                })?;
            match out.last_mut() {
                Some(prev) if prev.sector == open && prev.exit == a => prev.exit = b,
                _ => out.push(ResolvedCrossing {
                    sector: open,
                    entry: a,
                    exit: b,
                }),
            }
            covered = b;
        }
        if covered < hi {
            return Err(ScenarioError::Unmapped {
                sector: crossing.sector.clone(),
                at: covered,
            });
        }
    }
    Ok(out)
}

/// Minutes of ground delay per flight. Missing flights read as zero.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DelayAssignment {
    delays: BTreeMap<FlightId, Minute>,
}

impl DelayAssignment {
    pub fn zeros() -> Self {
        Self::default()
    }

    pub fn from_pairs<I, S>(pairs: I) -> Self
    where
        I: IntoIterator<Item = (S, Minute)>,
        S: Into<String>,
    {
        let mut out = Self::zeros();
        for (id, d) in pairs {
            out.set(FlightId::new(id), d);
        }
        out
    }

    /// Builds an assignment from delays listed in scenario flight order.
    pub fn from_indexed(scenario: &Scenario, delays: &[Minute]) -> Self {
        let mut out = Self::zeros();
        for (f, &d) in scenario.flights.iter().zip(delays) {
            out.set(f.id.clone(), d);
        }
        out
    }

    pub fn get(&self, id: &FlightId) -> Minute {
        self.delays.get(id).copied().unwrap_or(0)
    }

    pub fn set(&mut self, id: FlightId, delay: Minute) {
        if delay == 0 {
            self.delays.remove(&id);
        } else {
            self.delays.insert(id, delay);
        }
    }

    /// Non-zero entries in flight-id order.
    pub fn iter(&self) -> impl Iterator<Item = (&FlightId, Minute)> {
        self.delays.iter().map(|(k, v)| (k, *v))
    }

    pub fn total(&self) -> u64 {
        self.delays.values().map(|&d| d as u64).sum()
    }

    /// Delays in scenario flight order.
    pub fn to_indexed(&self, scenario: &Scenario) -> Vec<Minute> {
        scenario.flights.iter().map(|f| self.get(&f.id)).collect()
    }

    /// Checks every delay against its flight's bounds and that no delay names
    /// an unknown flight.
    pub fn check_feasible(&self, scenario: &Scenario) -> Result<(), ScenarioError> {
        for (id, d) in self.iter() {
            let flight = scenario
                .flight(id)
                .ok_or_else(|| ScenarioError::UnknownFlight(id.clone()))?;
            if d > flight.effective_max_delay() {
                return Err(ScenarioError::DelayOutOfRange {
                    flight: id.clone(),
                    delay: d,
                    max: flight.effective_max_delay(),
                });
            }
        }
        Ok(())
    }

    /// Writes `flight_id,delay_min` rows for every scenario flight.
    pub fn write_csv<W: std::io::Write>(&self, scenario: &Scenario, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["flight_id", "delay_min"])?;
        for f in &scenario.flights {
            w.write_record([f.id.as_str(), &self.get(&f.id).to_string()])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: std::io::Read>(input: R) -> csv::Result<Self> {
        #[derive(Deserialize)]
        struct Row {
            flight_id: String,
            delay_min: Minute,
        }
        let mut r = csv::Reader::from_reader(input);
        let mut out = Self::zeros();
        for row in r.deserialize() {
            let row: Row = row?;
            out.set(FlightId(row.flight_id), row.delay_min);
        }
        Ok(out)
    }
}

/// A single well-formedness problem found by [`validate_scenario`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Violation {
    DuplicateSector(SectorId),
    DuplicateFlight(FlightId),
    BadCountingParameters { duration: Minute, step: Minute, horizon: Minute },
    DegenerateCrossing { flight: FlightId, index: usize },
    UnorderedCrossings { flight: FlightId, index: usize },
    CrossingOutOfHorizon { flight: FlightId, index: usize },
    UnmappedSector { flight: FlightId, sector: SectorId, at: Minute },
    DegenerateInterval { start: Minute, end: Minute },
    TimelineOverlap { at: Minute },
    TimelineGap { start: Minute, end: Minute },
    UnknownOpenSector { interval_start: Minute, sector: SectorId },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::DuplicateSector(id) => write!(f, "duplicate sector id {id}"),
            Violation::DuplicateFlight(id) => write!(f, "duplicate flight id {id}"),
            Violation::BadCountingParameters { duration, step, horizon } => write!(
                f,
                "bad counting parameters: need 0 < step ({step}) <= duration ({duration}) <= horizon ({horizon})"
            ),
            Violation::DegenerateCrossing { flight, index } => {
                write!(f, "degenerate crossing: flight {flight} crossing {index} has entry >= exit")
            }
            Violation::UnorderedCrossings { flight, index } => {
                write!(f, "unordered crossings: flight {flight} crossing {index} starts before the previous one ends")
            }
            Violation::CrossingOutOfHorizon { flight, index } => write!(
                f,
                "crossing out of horizon: flight {flight} crossing {index} plus max delay ends after the horizon"
            ),
            Violation::UnmappedSector { flight, sector, at } => {
                write!(f, "unmapped sector: flight {flight} crosses {sector} with no open sector at minute {at}")
            }
            Violation::DegenerateInterval { start, end } => {
                write!(f, "degenerate configuration interval [{start}, {end})")
            }
            Violation::TimelineOverlap { at } => write!(f, "timeline overlap at minute {at}"),
            Violation::TimelineGap { start, end } => write!(f, "timeline gap over [{start}, {end})"),
            Violation::UnknownOpenSector { interval_start, sector } => write!(
                f,
                "configuration interval starting at {interval_start} maps to unknown open sector {sector}"
            ),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_empty(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn len(&self) -> usize {
        self.violations.len()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for v in &self.violations {
            writeln!(f, "  - {v}")?;
        }
        Ok(())
    }
}

/// Lists every violated invariant. An empty report means the scenario is
/// well-formed.
pub fn validate_scenario(s: &Scenario) -> ValidationReport {
    let mut v = Vec::new();

    let mut seen = BTreeSet::new();
    for sector in &s.sectors {
        if !seen.insert(&sector.id) {
            v.push(Violation::DuplicateSector(sector.id.clone()));
        }
    }
    let mut seen = BTreeSet::new();
    for flight in &s.flights {
        if !seen.insert(&flight.id) {
            v.push(Violation::DuplicateFlight(flight.id.clone()));
        }
    }

    if s.period_step == 0 || s.period_duration < s.period_step || s.horizon < s.period_duration {
        v.push(Violation::BadCountingParameters {
            duration: s.period_duration,
            step: s.period_step,
            horizon: s.horizon,
        });
    }

    let mut timeline_ok = true;
    if !s.timeline.is_empty() {
        let mut intervals: Vec<&ConfigurationInterval> = s.timeline.iter().collect();
        intervals.sort_by_key(|i| i.start);
        let mut cursor = 0;
        for interval in intervals {
            if interval.start >= interval.end {
                v.push(Violation::DegenerateInterval {
                    start: interval.start,
                    end: interval.end,
                });
                timeline_ok = false;
                continue;
            }
            if interval.start > cursor {
                v.push(Violation::TimelineGap {
                    start: cursor,
                    end: interval.start,
                });
                timeline_ok = false;
            } else if interval.start < cursor {
                v.push(Violation::TimelineOverlap { at: interval.start });
                timeline_ok = false;
            }
            cursor = cursor.max(interval.end);
            for open in interval.mapping.values() {
                if s.sector(open).is_none() {
                    v.push(Violation::UnknownOpenSector {
                        interval_start: interval.start,
                        sector: open.clone(),
                    });
                    timeline_ok = false;
                }
            }
        }
        if cursor < s.horizon {
            v.push(Violation::TimelineGap {
                start: cursor,
                end: s.horizon,
            });
            timeline_ok = false;
        }
    }

    for flight in &s.flights {
        let max_delay = flight.effective_max_delay();
        let mut crossings_ok = true;
        for (index, c) in flight.crossings.iter().enumerate() {
            if c.entry >= c.exit {
                v.push(Violation::DegenerateCrossing {
                    flight: flight.id.clone(),
                    index,
                });
                crossings_ok = false;
            }
            if index > 0 && flight.crossings[index - 1].exit > c.entry {
                v.push(Violation::UnorderedCrossings {
                    flight: flight.id.clone(),
                    index,
                });
                crossings_ok = false;
            }
            if c.exit as u64 + max_delay as u64 > s.horizon as u64 {
                v.push(Violation::CrossingOutOfHorizon {
                    flight: flight.id.clone(),
                    index,
                });
                crossings_ok = false;
            }
        }
        // Mapping coverage is only meaningful once times and timeline are sane.
        if crossings_ok && timeline_ok {
            let timeline = s.effective_timeline();
            'crossing: for c in &flight.crossings {
                let lo = c.entry;
                let hi = c.exit + max_delay;
                for interval in &timeline {
                    let a = lo.max(interval.start);
                    if a >= hi.min(interval.end) {
                        continue;
                    }
                    if s.open_sector_for(interval, &c.sector).is_none() {
                        v.push(Violation::UnmappedSector {
                            flight: flight.id.clone(),
                            sector: c.sector.clone(),
                            at: a,
                        });
                        continue 'crossing;
                    }
                }
            }
        }
    }

    ValidationReport { violations: v }
}

/// Caps the max delay of every flight matching `selector` at `cap` minutes.
/// The input scenario is left untouched.
pub fn apply_local_max_delay<F>(s: &Scenario, selector: F, cap: Minute) -> Scenario
where
    F: Fn(&FlightPlan) -> bool,
{
    let mut out = s.clone();
    for flight in &mut out.flights {
        if selector(flight) {
            flight.max_delay = flight.max_delay.min(cap);
        }
    }
    out
}

/// The reference fixture: one sector of capacity 2 and three flights, two of
/// which cannot leave the congested first hour. The unique cheapest fix
/// delays `f3` by ten minutes.
pub fn tiny3() -> Scenario {
    let crossing = |entry, exit| SectorCrossing {
        sector: SectorId::new("S1"),
        entry,
        exit,
    };
    let flight = |id: &str, entry, exit| FlightPlan {
        id: FlightId::new(id),
        crossings: vec![crossing(entry, exit)],
        max_delay: 10,
        aircraft_class: default_class(),
        regulatable: true,
    };
    Scenario {
        sectors: vec![Sector {
            id: SectorId::new("S1"),
            capacity: 2,
        }],
        timeline: vec![ConfigurationInterval {
            start: 0,
            end: 120,
            mapping: BTreeMap::from([(SectorId::new("S1"), SectorId::new("S1"))]),
        }],
        flights: vec![flight("f1", 10, 20), flight("f2", 15, 25), flight("f3", 50, 59)],
        horizon: 120,
        period_duration: 60,
        period_step: 60,
        counting_rule: CountingRule::Overlap,
    }
}
