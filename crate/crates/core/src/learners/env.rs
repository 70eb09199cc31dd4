use std::mem;

use super::{AgentAction, LearnerError, LocalState};
use crate::reward::{hotspot_cost, RewardModel, RewardParams};
use crate::scenario::{DelayAssignment, FlightId, Minute, Scenario};
use crate::traffic::{build_graph, Analysis, CoordinationGraph, Hotspot, TrafficModel, TrafficState};

/// A scenario compiled for training: traffic footprints plus the delay
/// penalty of every (flight, delay) pair.
#[derive(Clone, Debug)]
pub struct DcbProblem {
    model: TrafficModel,
    penalties: Vec<Vec<f64>>,
    params: RewardParams,
    regulatable: Vec<bool>,
    scenario: Scenario,
}

impl DcbProblem {
    pub fn new(scenario: &Scenario, reward: &RewardModel) -> Result<Self, LearnerError> {
        reward.params.validate()?;
        Ok(DcbProblem {
            model: TrafficModel::compile(scenario)?,
            penalties: reward.delay_penalties(scenario)?,
            params: reward.params,
            regulatable: scenario.flights.iter().map(|f| f.regulatable).collect(),
            scenario: scenario.clone(),
        })
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    pub fn model(&self) -> &TrafficModel {
        &self.model
    }

    pub fn n_agents(&self) -> usize {
        self.model.n_flights()
    }

    pub fn max_delay(&self, f: usize) -> Minute {
        self.model.max_delay(f)
    }

    pub fn regulatable(&self, f: usize) -> bool {
        self.regulatable[f]
    }

    pub fn flight_id(&self, f: usize) -> &FlightId {
        self.model.flight_id(f)
    }

    /// Largest number of increments any agent can make.
    pub fn step_budget(&self) -> u32 {
        (0..self.n_agents()).map(|f| self.max_delay(f)).max().unwrap_or(0)
    }

    fn reward(&self, f: usize, delay: Minute, tdc: Minute) -> f64 {
        hotspot_cost(tdc, &self.params) - self.penalties[f][delay as usize]
    }
}

#[derive(Clone, Debug, Default)]
struct Frame {
    delays: Vec<Minute>,
    analysis: Analysis,
    rewards: Vec<f64>,
}

/// Read-only view of one joint state.
#[derive(Clone, Copy, Debug)]
pub struct View<'a> {
    problem: &'a DcbProblem,
    frame: &'a Frame,
    cap: u32,
}

impl<'a> View<'a> {
    pub fn n_agents(&self) -> usize {
        self.frame.delays.len()
    }

    pub fn hotspot_cap(&self) -> u32 {
        self.cap
    }

    pub fn delays(&self) -> &'a [Minute] {
        &self.frame.delays
    }

    #[inline]
    pub fn state(&self, f: usize) -> LocalState {
        LocalState::new(self.frame.delays[f], self.frame.analysis.hotspot_count[f].min(self.cap))
    }

    #[inline]
    pub fn state_index(&self, f: usize) -> u32 {
        self.state(f).index(self.cap)
    }

    /// True when `f` may add a minute in this state.
    #[inline]
    pub fn can_increment(&self, f: usize) -> bool {
        self.frame.delays[f] < self.problem.max_delay(f)
    }

    /// Neighbours of `f`, excluding itself.
    #[inline]
    pub fn neighbours(&self, f: usize) -> &'a [u32] {
        self.frame.analysis.neighbours(f)
    }

    /// Neighbourhood size including `f`.
    #[inline]
    pub fn neighbourhood_size(&self, f: usize) -> usize {
        self.frame.analysis.neighbourhood_size(f)
    }

    /// Whether `f` takes part in learning at this state.
    #[inline]
    pub fn is_active(&self, f: usize) -> bool {
        self.problem.regulatable(f) && !self.neighbours(f).is_empty()
    }

    #[inline]
    pub fn reward(&self, f: usize) -> f64 {
        self.frame.rewards[f]
    }

    pub fn rewards(&self) -> &'a [f64] {
        &self.frame.rewards
    }

    pub fn global_reward(&self) -> f64 {
        self.frame.rewards.iter().sum()
    }

    pub fn hotspot_total(&self) -> usize {
        self.frame.analysis.hotspot_total()
    }

    pub fn congested_duration(&self, f: usize) -> Minute {
        self.frame.analysis.tdc[f]
    }
}

/// What [`Environment::env_step`] reports after a transition.
#[derive(Clone, Debug, PartialEq)]
pub struct StepOutcome {
    pub delays: Vec<Minute>,
    pub states: Vec<LocalState>,
    pub hotspots: Vec<Hotspot>,
    pub rewards: Vec<f64>,
    pub graph: CoordinationGraph,
}

/// The joint delay state of one episode, plus the state before the last
/// transition.
#[derive(Clone, Debug)]
pub struct Environment<'p> {
    problem: &'p DcbProblem,
    traffic: TrafficState<'p>,
    cap: u32,
    current: Frame,
    previous: Frame,
}

impl<'p> Environment<'p> {
    pub fn new(problem: &'p DcbProblem, hotspot_cap: u32) -> Self {
        let mut env = Environment {
            problem,
            traffic: TrafficState::new(&problem.model),
            cap: hotspot_cap,
            current: Frame::default(),
            previous: Frame::default(),
        };
        env.reset();
        env
    }

    pub fn problem(&self) -> &'p DcbProblem {
        self.problem
    }

    /// Back to all-zero delays.
    pub fn reset(&mut self) {
        self.traffic.reset();
        self.current.delays.clear();
        self.current.delays.resize(self.problem.n_agents(), 0);
        self.refresh();
    }

    /// Jumps to an arbitrary feasible joint assignment.
    pub fn set_delays(&mut self, delays: &[Minute]) -> Result<(), LearnerError> {
        if delays.len() != self.problem.n_agents() {
            return Err(LearnerError::ActionCount {
                expected: self.problem.n_agents(),
                got: delays.len(),
            });
        }
        for (f, &d) in delays.iter().enumerate() {
            if d > self.problem.max_delay(f) {
                return Err(LearnerError::IllegalAction {
                    flight: self.problem.flight_id(f).clone(),
                    max: self.problem.max_delay(f),
                });
            }
        }
        self.traffic.set_all(delays);
        self.current.delays.clear();
        self.current.delays.extend_from_slice(delays);
        self.refresh();
        Ok(())
    }

    fn refresh(&mut self) {
        self.traffic.analyze(&mut self.current.analysis);
        let frame = &mut self.current;
        frame.rewards.clear();
        for f in 0..frame.delays.len() {
            frame
                .rewards
                .push(self.problem.reward(f, frame.delays[f], frame.analysis.tdc[f]));
        }
    }

    pub fn current(&self) -> View<'_> {
        View {
            problem: self.problem,
            frame: &self.current,
            cap: self.cap,
        }
    }

    /// State before the most recent [`Environment::apply`].
    pub fn previous(&self) -> View<'_> {
        View {
            problem: self.problem,
            frame: &self.previous,
            cap: self.cap,
        }
    }

    /// Applies a joint action. The pre-transition state stays available
    /// through [`Environment::previous`].
    pub fn apply(&mut self, actions: &[AgentAction]) -> Result<(), LearnerError> {
        let n = self.problem.n_agents();
        if actions.len() != n {
            return Err(LearnerError::ActionCount {
                expected: n,
                got: actions.len(),
            });
        }
        for (f, &a) in actions.iter().enumerate() {
            if a == AgentAction::Increment && self.current.delays[f] >= self.problem.max_delay(f) {
                return Err(LearnerError::IllegalAction {
                    flight: self.problem.flight_id(f).clone(),
                    max: self.problem.max_delay(f),
                });
            }
        }
        mem::swap(&mut self.current, &mut self.previous);
        self.current.delays.clear();
        self.current.delays.extend_from_slice(&self.previous.delays);
        for (f, &a) in actions.iter().enumerate() {
            if a == AgentAction::Increment {
                self.current.delays[f] += 1;
                self.traffic.set_delay(f, self.current.delays[f]);
            }
        }
        self.refresh();
        Ok(())
    }

    /// One transition, with hotspots and the coordination graph of the new
    /// joint state materialised.
    pub fn env_step(&mut self, actions: &[AgentAction]) -> Result<StepOutcome, LearnerError> {
        self.apply(actions)?;
        let view = self.current();
        let hotspots = self.traffic.hotspots(&self.current.analysis);
        let graph = build_graph(self.problem.scenario(), &hotspots);
        Ok(StepOutcome {
            delays: view.delays().to_vec(),
            states: (0..view.n_agents()).map(|f| view.state(f)).collect(),
            hotspots,
            rewards: view.rewards().to_vec(),
            graph,
        })
    }

    pub fn hotspots(&self) -> Vec<Hotspot> {
        self.traffic.hotspots(&self.current.analysis)
    }

    pub fn assignment(&self) -> DelayAssignment {
        DelayAssignment::from_indexed(self.problem.scenario(), &self.current.delays)
    }
}
