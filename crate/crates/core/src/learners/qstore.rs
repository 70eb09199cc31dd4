//! Versioned JSON snapshots of learned tables.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{AgentQTable, EdgeKey, EdmarlLearner, IrlLearner, LearnerError, LocalState, Method};
use crate::scenario::{FlightId, Minute, Scenario};

pub const QSTORE_FORMAT: &str = "dcb-marl-qstore";
pub const QSTORE_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq)]
pub enum QTables {
    Irl(IrlLearner),
    EdMarl(EdmarlLearner),
}

/// Learned tables plus what is needed to resume training.
#[derive(Clone, Debug, PartialEq)]
pub struct QStore {
    pub method: Method,
    pub hotspot_cap: u32,
    pub episodes_completed: u32,
    /// Flight ids in the order used for agent indices.
    pub flights: Vec<FlightId>,
    pub tables: QTables,
    /// Best greedy episode seen so far.
    pub incumbent: Option<Incumbent>,
}

/// A joint assignment reached by a greedy episode during training.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Incumbent {
    pub episode: u32,
    /// Delays in flight order.
    pub delays: Vec<Minute>,
    pub hotspot_count: usize,
    pub global_reward: f64,
}

impl Incumbent {
    /// Fewer hotspots first, then higher global reward.
    pub fn beats(&self, other: &Incumbent) -> bool {
        (self.hotspot_count, -self.global_reward) < (other.hotspot_count, -other.global_reward)
    }
}

#[derive(Serialize, Deserialize)]
struct Document {
    format: String,
    version: u32,
    method: Method,
    hotspot_cap: u32,
    episodes_completed: u32,
    flights: Vec<FlightId>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    agents: Vec<AgentDoc>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    edges: Vec<EdgeDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    incumbent: Option<Incumbent>,
}

#[derive(Serialize, Deserialize)]
struct AgentDoc {
    flight: FlightId,
    max_delay: Minute,
    entries: Vec<AgentEntry>,
}

#[derive(Serialize, Deserialize)]
struct AgentEntry {
    delay: Minute,
    hotspots: u32,
    hold: f64,
    increment: f64,
}

#[derive(Serialize, Deserialize)]
struct EdgeDoc {
    a: FlightId,
    b: FlightId,
    a_state: LocalState,
    b_state: LocalState,
    /// Joint actions (hold,hold), (hold,inc), (inc,hold), (inc,inc) seen from `a`.
    q: [f64; 4],
}

impl QStore {
    pub fn empty(s: &Scenario, method: Method, hotspot_cap: u32) -> Self {
        QStore {
            method,
            hotspot_cap,
            episodes_completed: 0,
            flights: s.flights.iter().map(|f| f.id.clone()).collect(),
            tables: match method {
                Method::Irl => QTables::Irl(IrlLearner::for_scenario(s, hotspot_cap)),
                Method::EdMarl => QTables::EdMarl(EdmarlLearner::for_scenario(s)),
            },
            incumbent: None,
        }
    }

    pub fn check_compatible(&self, s: &Scenario, method: Method, hotspot_cap: u32) -> Result<(), LearnerError> {
        if self.method != method {
            return Err(LearnerError::QStore(format!(
                "store holds {} tables, not {method}",
                self.method
            )));
        }
        if self.hotspot_cap != hotspot_cap {
            return Err(LearnerError::QStore(format!(
                "store uses hotspot cap {}, not {hotspot_cap}",
                self.hotspot_cap
            )));
        }
        let ids: Vec<&FlightId> = s.flights.iter().map(|f| &f.id).collect();
        if ids.len() != self.flights.len() || ids.iter().zip(&self.flights).any(|(a, b)| *a != b) {
            return Err(LearnerError::QStore("flight list differs from the scenario".into()));
        }
        if let Some(b) = &self.incumbent {
            if b.delays.len() != s.flights.len()
                || b.delays.iter().zip(&s.flights).any(|(&d, f)| d > f.effective_max_delay())
            {
                return Err(LearnerError::QStore("incumbent does not fit the scenario".into()));
            }
        }
        if let QTables::Irl(l) = &self.tables {
            for (f, t) in s.flights.iter().zip(&l.tables) {
                if t.max_delay() != f.effective_max_delay() {
                    return Err(LearnerError::QStore(format!("max delay of {} changed", f.id)));
                }
            }
        }
        Ok(())
    }

    pub fn to_json_string(&self) -> String {
        let mut doc = Document {
            format: QSTORE_FORMAT.into(),
            version: QSTORE_VERSION,
            method: self.method,
            hotspot_cap: self.hotspot_cap,
            episodes_completed: self.episodes_completed,
            flights: self.flights.clone(),
            agents: Vec::new(),
            edges: Vec::new(),
            incumbent: self.incumbent.clone(),
        };
        match &self.tables {
            QTables::Irl(l) => {
                doc.agents = l
                    .tables
                    .iter()
                    .zip(&self.flights)
                    .map(|(t, id)| AgentDoc {
                        flight: id.clone(),
                        max_delay: t.max_delay(),
                        entries: t
                            .entries()
                            .map(|(s, q)| AgentEntry {
                                delay: s.delay,
                                hotspots: s.hotspot_count,
                                hold: q[0],
                                increment: q[1],
                            })
                            .collect(),
                    })
                    .collect();
            }
            QTables::EdMarl(l) => {
                let cap = self.hotspot_cap;
                doc.edges = l
                    .table
                    .sorted_entries()
                    .into_iter()
                    .map(|(k, q)| EdgeDoc {
                        a: self.flights[k.lo as usize].clone(),
                        b: self.flights[k.hi as usize].clone(),
                        a_state: LocalState::from_index(k.s_lo, cap),
                        b_state: LocalState::from_index(k.s_hi, cap),
                        q,
                    })
                    .collect();
            }
        }
        serde_json::to_string_pretty(&doc).expect("q-store serialises")
    }

    pub fn from_json_str(text: &str) -> Result<Self, LearnerError> {
        let doc: Document = serde_json::from_str(text).map_err(|e| LearnerError::QStore(e.to_string()))?;
        if doc.format != QSTORE_FORMAT {
            return Err(LearnerError::QStore(format!("unknown format {:?}", doc.format)));
        }
        if doc.version != QSTORE_VERSION {
            return Err(LearnerError::QStore(format!("unsupported version {}", doc.version)));
        }
        let cap = doc.hotspot_cap;
        if doc.incumbent.as_ref().is_some_and(|b| b.delays.len() != doc.flights.len()) {
            return Err(LearnerError::QStore("incumbent has the wrong number of delays".into()));
        }
        let index = |id: &FlightId| {
            doc.flights
                .iter()
                .position(|f| f == id)
                .ok_or_else(|| LearnerError::QStore(format!("unknown flight {id}")))
        };
        let tables = match doc.method {
            Method::Irl => {
                if doc.agents.len() != doc.flights.len() {
                    return Err(LearnerError::QStore("one agent table per flight expected".into()));
                }
                let mut tables = Vec::with_capacity(doc.agents.len());
                for (a, id) in doc.agents.iter().zip(&doc.flights) {
                    if &a.flight != id {
                        return Err(LearnerError::QStore(format!("agent table {} out of order", a.flight)));
                    }
                    let mut t = AgentQTable::new(a.max_delay, cap);
                    for e in &a.entries {
                        if e.delay > a.max_delay || e.hotspots > cap {
                            return Err(LearnerError::QStore(format!("entry out of range for {id}")));
                        }
                        let s = LocalState::new(e.delay, e.hotspots);
                        t.set(s, super::AgentAction::Hold, e.hold);
                        t.set(s, super::AgentAction::Increment, e.increment);
                    }
                    tables.push(t);
                }
                QTables::Irl(IrlLearner { tables })
            }
            Method::EdMarl => {
                let mut l = EdmarlLearner::new();
                for e in &doc.edges {
                    let (i, j) = (index(&e.a)? as u32, index(&e.b)? as u32);
                    if i >= j || e.a_state.hotspot_count > cap || e.b_state.hotspot_count > cap {
                        return Err(LearnerError::QStore(format!("malformed edge {}-{}", e.a, e.b)));
                    }
                    let key = EdgeKey {
                        lo: i,
                        hi: j,
                        s_lo: e.a_state.index(cap),
                        s_hi: e.b_state.index(cap),
                    };
                    l.table.insert(key, e.q);
                }
                QTables::EdMarl(l)
            }
        };
        Ok(QStore {
            method: doc.method,
            hotspot_cap: cap,
            episodes_completed: doc.episodes_completed,
            flights: doc.flights,
            tables,
            incumbent: doc.incumbent,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> std::io::Result<()> {
        fs::write(path, self.to_json_string())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, LearnerError> {
        let text = fs::read_to_string(path.as_ref())
            .map_err(|e| LearnerError::QStore(format!("{}: {e}", path.as_ref().display())))?;
        Self::from_json_str(&text)
    }
}
