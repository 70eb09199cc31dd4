use rand::Rng;
use serde::{Deserialize, Serialize};

use super::train::Learner;
use super::{AgentAction, Bootstrap, LearnerConfig, LocalState, View};
use crate::scenario::Minute;

/// One agent's Q-table over (delay, clamped hotspot count) × action.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AgentQTable {
    cap: u32,
    max_delay: Minute,
    values: Vec<[f64; 2]>,
}

impl AgentQTable {
    pub fn new(max_delay: Minute, cap: u32) -> Self {
        AgentQTable {
            cap,
            max_delay,
            values: vec![[0.0; 2]; ((max_delay + 1) * (cap + 1)) as usize],
        }
    }

    pub fn hotspot_cap(&self) -> u32 {
        self.cap
    }

    pub fn max_delay(&self) -> Minute {
        self.max_delay
    }

    #[inline]
    fn slot(&self, s: LocalState) -> usize {
        debug_assert!(s.delay <= self.max_delay);
        s.index(self.cap) as usize
    }

    #[inline]
    pub fn get(&self, s: LocalState, a: AgentAction) -> f64 {
        self.values[self.slot(s)][a.index()]
    }

    #[inline]
    pub fn set(&mut self, s: LocalState, a: AgentAction, v: f64) {
        let i = self.slot(s);
        self.values[i][a.index()] = v;
    }

    /// Best value over the legal actions at `s`.
    #[inline]
    pub fn max_legal(&self, s: LocalState, can_increment: bool) -> f64 {
        let q = self.values[self.slot(s)];
        if can_increment {
            q[0].max(q[1])
        } else {
            q[0]
        }
    }

    /// Non-zero entries in state-index order.
    pub fn entries(&self) -> impl Iterator<Item = (LocalState, [f64; 2])> + '_ {
        self.values
            .iter()
            .enumerate()
            .filter(|(_, q)| q[0] != 0.0 || q[1] != 0.0)
            .map(|(i, q)| (LocalState::from_index(i as u32, self.cap), *q))
    }
}

/// Greedy action over the legal set, `Hold` on ties.
#[inline]
pub(crate) fn greedy(values: [f64; 2], can_increment: bool) -> AgentAction {
    if can_increment && values[1] > values[0] {
        AgentAction::Increment
    } else {
        AgentAction::Hold
    }
}

/// With probability `epsilon` a uniform legal action, otherwise greedy.
#[inline]
pub(crate) fn epsilon_greedy<R: Rng + ?Sized>(
    values: [f64; 2],
    can_increment: bool,
    epsilon: f64,
    rng: &mut R,
) -> AgentAction {
    if epsilon > 0.0 && rng.gen::<f64>() < epsilon {
        if can_increment && rng.gen::<bool>() {
            AgentAction::Increment
        } else {
            AgentAction::Hold
        }
    } else {
        greedy(values, can_increment)
    }
}

/// Epsilon-greedy choice from one agent's own table.
pub fn irl_select<R: Rng + ?Sized>(
    q: &AgentQTable,
    state: LocalState,
    can_increment: bool,
    epsilon: f64,
    rng: &mut R,
) -> AgentAction {
    let values = [q.get(state, AgentAction::Hold), q.get(state, AgentAction::Increment)];
    epsilon_greedy(values, can_increment, epsilon, rng)
}

/// One Q-learning update. Returns the new value of `(s, a)`.
#[allow(clippy::too_many_arguments)]
pub fn irl_update(
    q: &mut AgentQTable,
    s: LocalState,
    a: AgentAction,
    reward: f64,
    next: LocalState,
    next_can_increment: bool,
    alpha: f64,
    gamma: f64,
    terminal: bool,
) -> f64 {
    let bootstrap = if terminal {
        0.0
    } else {
        q.max_legal(next, next_can_increment)
    };
    let old = q.get(s, a);
    let new = old + alpha * (reward + gamma * bootstrap - old);
    q.set(s, a, new);
    new
}

/// Independent learners: one table per agent.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IrlLearner {
    pub tables: Vec<AgentQTable>,
}

impl IrlLearner {
    pub fn new(max_delays: &[Minute], cap: u32) -> Self {
        IrlLearner {
            tables: max_delays.iter().map(|&m| AgentQTable::new(m, cap)).collect(),
        }
    }
}

impl Learner for IrlLearner {
    fn select<R: Rng + ?Sized>(&self, view: &View<'_>, agent: usize, epsilon: f64, rng: &mut R) -> AgentAction {
        irl_select(
            &self.tables[agent],
            view.state(agent),
            view.can_increment(agent),
            epsilon,
            rng,
        )
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
        for (f, &a) in actions.iter().enumerate() {
            if !before.is_active(f) {
                continue;
            }
            irl_update(
                &mut self.tables[f],
                before.state(f),
                a,
                scale * after.reward(f),
                after.state(f),
                after.can_increment(f),
                cfg.alpha,
                cfg.gamma,
                terminal,
            );
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn terminal_update_from_zero() {
        let mut q = AgentQTable::new(5, 10);
        let s = LocalState::new(0, 1);
        let v = irl_update(&mut q, s, AgentAction::Hold, 10.0, s, true, 0.01, 0.99, true);
        assert!((v - 0.1).abs() < 1e-15);
    }

    #[test]
    fn bootstrap_ignores_illegal_increment() {
        let mut q = AgentQTable::new(2, 10);
        let top = LocalState::new(2, 0);
        q.set(top, AgentAction::Hold, -5.0);
        let s = LocalState::new(1, 0);
        let v = irl_update(&mut q, s, AgentAction::Increment, 0.0, top, false, 1.0, 1.0, false);
        assert_eq!(v, -5.0);
    }

    #[test]
    fn ties_hold_and_illegal_never_chosen() {
        let q = AgentQTable::new(3, 10);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let s = LocalState::new(0, 0);
        assert_eq!(irl_select(&q, s, true, 0.0, &mut rng), AgentAction::Hold);
        let top = LocalState::new(3, 0);
        for _ in 0..200 {
            assert_eq!(irl_select(&q, top, false, 1.0, &mut rng), AgentAction::Hold);
        }
    }

    #[test]
    fn full_exploration_is_uniform() {
        let q = AgentQTable::new(3, 10);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let s = LocalState::new(0, 0);
        let inc = (0..10_000)
            .filter(|_| irl_select(&q, s, true, 1.0, &mut rng) == AgentAction::Increment)
            .count();
        assert!((4_700..5_300).contains(&inc), "{inc}");
    }
}
