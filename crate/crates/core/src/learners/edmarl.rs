use rand::Rng;
use rustc_hash::FxHashMap;
use serde::{Deserialize, Serialize};

use super::irl::epsilon_greedy;
use super::train::Learner;
use super::{AgentAction, Bootstrap, LearnerConfig, LearnerError, View};

/// An edge between agents `lo < hi` in a particular joint local state.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct EdgeKey {
    pub lo: u32,
    pub hi: u32,
    /// Dense local-state index of `lo`.
    pub s_lo: u32,
    pub s_hi: u32,
}

impl EdgeKey {
    /// Canonical key for the ordered pair `(i, j)` and whether it was swapped.
    #[inline]
    pub fn of(i: u32, j: u32, s_i: u32, s_j: u32) -> (Self, bool) {
        if i < j {
            (EdgeKey { lo: i, hi: j, s_lo: s_i, s_hi: s_j }, false)
        } else {
            (EdgeKey { lo: j, hi: i, s_lo: s_j, s_hi: s_i }, true)
        }
    }
}

#[inline]
fn joint_slot(a_i: AgentAction, a_j: AgentAction, swapped: bool) -> usize {
    if swapped {
        a_j.index() * 2 + a_i.index()
    } else {
        a_i.index() * 2 + a_j.index()
    }
}

/// Sparse edge Q-values; each entry is indexed `a_lo * 2 + a_hi`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct EdgeQTable {
    pub(crate) values: FxHashMap<EdgeKey, [f64; 4]>,
}

impl EdgeQTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// `Q_ij(s_i, s_j, a_i, a_j)` seen from `i`'s side.
    #[inline]
    pub fn get(&self, i: u32, j: u32, s_i: u32, s_j: u32, a_i: AgentAction, a_j: AgentAction) -> f64 {
        let (key, swapped) = EdgeKey::of(i, j, s_i, s_j);
        self.values
            .get(&key)
            .map_or(0.0, |q| q[joint_slot(a_i, a_j, swapped)])
    }

    #[allow(clippy::too_many_arguments)]
    pub fn set(&mut self, i: u32, j: u32, s_i: u32, s_j: u32, a_i: AgentAction, a_j: AgentAction, v: f64) {
        let (key, swapped) = EdgeKey::of(i, j, s_i, s_j);
        self.values.entry(key).or_insert([0.0; 4])[joint_slot(a_i, a_j, swapped)] = v;
    }

    /// Max over legal joint actions at a joint state.
    #[inline]
    pub fn max_legal(&self, i: u32, j: u32, s_i: u32, s_j: u32, inc_i: bool, inc_j: bool) -> f64 {
        let (key, swapped) = EdgeKey::of(i, j, s_i, s_j);
        let Some(q) = self.values.get(&key) else {
            return 0.0;
        };
        let (inc_lo, inc_hi) = if swapped { (inc_j, inc_i) } else { (inc_i, inc_j) };
        let mut best = q[0];
        if inc_hi {
            best = best.max(q[1]);
        }
        if inc_lo {
            best = best.max(q[2]);
            if inc_hi {
                best = best.max(q[3]);
            }
        }
        best
    }

    /// Entries sorted by key.
    pub fn sorted_entries(&self) -> Vec<(EdgeKey, [f64; 4])> {
        let mut out: Vec<_> = self.values.iter().map(|(k, v)| (*k, *v)).collect();
        out.sort_by_key(|(k, _)| *k);
        out
    }

    pub fn insert(&mut self, key: EdgeKey, q: [f64; 4]) {
        self.values.insert(key, q);
    }
}

/// Value of each own action for agent `i`: the sum over its neighbours `j`
/// of the best edge value across `j`'s legal actions.
pub fn edmarl_agent_value(table: &EdgeQTable, view: &View<'_>, i: usize) -> Result<[f64; 2], LearnerError> {
    let neighbours = view.neighbours(i);
    if neighbours.is_empty() {
        return Err(LearnerError::NoNeighbours(i));
    }
    let s_i = view.state_index(i);
    let mut out = [0.0; 2];
    for &j in neighbours {
        let s_j = view.state_index(j as usize);
        let (key, swapped) = EdgeKey::of(i as u32, j, s_i, s_j);
        let Some(q) = table.values.get(&key) else {
            continue;
        };
        let inc_j = view.can_increment(j as usize);
        for a in AgentAction::ALL {
            let hold = q[joint_slot(a, AgentAction::Hold, swapped)];
            out[a.index()] += if inc_j {
                hold.max(q[joint_slot(a, AgentAction::Increment, swapped)])
            } else {
                hold
            };
        }
    }
    Ok(out)
}

/// Value of a joint action: half the sum, over agents, of the edge values
/// to their neighbours. Every edge is seen from both ends, so each counts once.
pub fn edmarl_joint_value(table: &EdgeQTable, view: &View<'_>, actions: &[AgentAction]) -> f64 {
    let mut total = 0.0;
    for (i, &a_i) in actions.iter().enumerate() {
        let s_i = view.state_index(i);
        for &j in view.neighbours(i) {
            let ju = j as usize;
            total += table.get(i as u32, j, s_i, view.state_index(ju), a_i, actions[ju]);
        }
    }
    0.5 * total
}

/// One observed transition on edge `(i, j)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EdgeTransition {
    pub i: u32,
    pub j: u32,
    pub s_i: u32,
    pub s_j: u32,
    pub a_i: AgentAction,
    pub a_j: AgentAction,
    pub r_i: f64,
    pub r_j: f64,
    /// Neighbourhood sizes at the pre-transition state, each including the agent.
    pub n_i: usize,
    pub n_j: usize,
    pub next_s_i: u32,
    pub next_s_j: u32,
    pub next_inc_i: bool,
    pub next_inc_j: bool,
}

/// `Q ← (1−α)Q + α[r_i/|N_i| + r_j/|N_j| + γ max Q(s')]`. Returns the new value.
pub fn edmarl_update(table: &mut EdgeQTable, t: &EdgeTransition, alpha: f64, gamma: f64, terminal: bool) -> f64 {
    let bootstrap = if terminal {
        0.0
    } else {
        table.max_legal(t.i, t.j, t.next_s_i, t.next_s_j, t.next_inc_i, t.next_inc_j)
    };
    let old = table.get(t.i, t.j, t.s_i, t.s_j, t.a_i, t.a_j);
    let target = t.r_i / t.n_i as f64 + t.r_j / t.n_j as f64 + gamma * bootstrap;
    let new = (1.0 - alpha) * old + alpha * target;
    table.set(t.i, t.j, t.s_i, t.s_j, t.a_i, t.a_j, new);
    new
}

/// Edge-based learner: one shared table over all coordination-graph edges.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct EdmarlLearner {
    pub table: EdgeQTable,
}

impl EdmarlLearner {
    pub fn new() -> Self {
        Self::default()
    }
}

impl Learner for EdmarlLearner {
    fn select<R: Rng + ?Sized>(&self, view: &View<'_>, agent: usize, epsilon: f64, rng: &mut R) -> AgentAction {
        let values = edmarl_agent_value(&self.table, view, agent).unwrap_or([0.0; 2]);
        epsilon_greedy(values, view.can_increment(agent), epsilon, rng)
    }

    fn update(
        &mut self,
        before: &View<'_>,
        actions: &[AgentAction],
        after: &View<'_>,
        bootstrap: Bootstrap,
        cfg: &LearnerConfig,
    ) {
        let (scale, terminal) = bootstrap.resolve(cfg.gamma);
        for i in 0..actions.len() {
            for &j in before.neighbours(i) {
                let ju = j as usize;
                if ju < i {
                    continue;
                }
                let t = EdgeTransition {
                    i: i as u32,
                    j,
                    s_i: before.state_index(i),
                    s_j: before.state_index(ju),
                    a_i: actions[i],
                    a_j: actions[ju],
                    r_i: scale * after.reward(i),
                    r_j: scale * after.reward(ju),
                    n_i: before.neighbourhood_size(i),
                    n_j: before.neighbourhood_size(ju),
                    next_s_i: after.state_index(i),
                    next_s_j: after.state_index(ju),
                    next_inc_i: after.can_increment(i),
                    next_inc_j: after.can_increment(ju),
                };
                edmarl_update(&mut self.table, &t, cfg.alpha, cfg.gamma, terminal);
            }
        }
    }
}
