use log::{debug, info};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::qstore::QTables;
use super::{
    epsilon_at, AgentAction, Bootstrap, DcbProblem, EdmarlLearner, Environment, Incumbent, IrlLearner,
    LearnerConfig, LearnerError, Method, QStore, View,
};
use crate::experiments::regulated_average_delay;
use crate::reward::RewardModel;
use crate::scenario::{DelayAssignment, Minute, Scenario};

/// Action choice and value updates of a tabular learner.
pub trait Learner {
    fn select<R: Rng + ?Sized>(&self, view: &View<'_>, agent: usize, epsilon: f64, rng: &mut R) -> AgentAction;

    /// Learns from the transition `before --actions--> after`.
    fn update(
        &mut self,
        before: &View<'_>,
        actions: &[AgentAction],
        after: &View<'_>,
        bootstrap: Bootstrap,
        cfg: &LearnerConfig,
    );
}

#[derive(Clone, Debug, PartialEq)]
pub struct EpisodeResult {
    pub delays: Vec<Minute>,
    pub hotspot_count: usize,
    pub global_reward: f64,
    /// Sum of each agent's rewards over the episode.
    pub returns: Vec<f64>,
    pub steps: u32,
    /// False when the step budget ran out before every agent held.
    pub reached_fixed_point: bool,
}

/// Plays one episode from all-zero delays. With `learn` set the learner is
/// updated after every step.
pub fn run_episode<L: Learner, R: Rng>(
    learner: &mut L,
    env: &mut Environment<'_>,
    cfg: &LearnerConfig,
    epsilon: f64,
    rng: &mut R,
    learn: bool,
) -> Result<EpisodeResult, LearnerError> {
    env.reset();
    let n = env.problem().n_agents();
    let budget = env.problem().step_budget();
    let mut actions = vec![AgentAction::Hold; n];
    let mut returns = vec![0.0; n];
    let mut steps = 0;
    let mut reached_fixed_point = false;
    while steps < budget {
        let view = env.current();
        let mut any_increment = false;
        for (f, a) in actions.iter_mut().enumerate() {
            *a = if view.is_active(f) {
                learner.select(&view, f, epsilon, rng)
            } else {
                AgentAction::Hold
            };
            any_increment |= *a == AgentAction::Increment;
        }
        steps += 1;
        if !any_increment {
            for (r, x) in returns.iter_mut().zip(view.rewards()) {
                *r += x;
            }
            if learn {
                learner.update(&view, &actions, &view, cfg.fixed_point.bootstrap(), cfg);
            }
            reached_fixed_point = true;
            break;
        }
        env.apply(&actions)?;
        let (before, after) = (env.previous(), env.current());
        for (r, x) in returns.iter_mut().zip(after.rewards()) {
            *r += x;
        }
        if learn {
            learner.update(&before, &actions, &after, Bootstrap::Next, cfg);
        }
    }
    let view = env.current();
    Ok(EpisodeResult {
        delays: view.delays().to_vec(),
        hotspot_count: view.hotspot_total(),
        global_reward: view.global_reward(),
        returns,
        steps,
        reached_fixed_point,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub episode: u32,
    pub epsilon: f64,
    pub hotspot_count: usize,
    pub avg_delay: f64,
    pub global_reward: f64,
}

/// Result of a training run.
///
/// The returned assignment is the best one reached by any greedy episode:
/// the exploitation phase of training plus one final non-learning episode.
/// Fewer hotspots win, then higher global reward, then the earlier episode.
#[derive(Clone, Debug)]
pub struct TrainOutcome {
    pub solution: DelayAssignment,
    pub delays: Vec<Minute>,
    pub hotspots: usize,
    pub solved: bool,
    pub global_reward: f64,
    /// Episode that produced the solution; `cfg.episodes` for the final run.
    pub solution_episode: u32,
    /// One point per training episode run in this call.
    pub curve: Vec<CurvePoint>,
    pub qstore: QStore,
}

/// RNG for one episode; independent of how many episodes ran before.
pub(crate) fn episode_rng(seed: u64, episode: u32) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(episode as u64);
    rng
}

/// Trains from empty tables for `cfg.episodes` episodes.
pub fn train(
    scenario: &Scenario,
    method: Method,
    cfg: &LearnerConfig,
    reward: &RewardModel,
) -> Result<TrainOutcome, LearnerError> {
    train_resume(scenario, method, cfg, reward, None)
}

/// Continues training from a saved store up to `cfg.episodes` episodes in
/// total. Resuming gives the same tables as an uninterrupted run.
pub fn train_resume(
    scenario: &Scenario,
    method: Method,
    cfg: &LearnerConfig,
    reward: &RewardModel,
    resume: Option<QStore>,
) -> Result<TrainOutcome, LearnerError> {
    cfg.validate()?;
    let problem = DcbProblem::new(scenario, reward)?;
    let store = match resume {
        Some(store) => {
            store.check_compatible(scenario, method, cfg.hotspot_cap)?;
            store
        }
        None => QStore::empty(scenario, method, cfg.hotspot_cap),
    };
    let start = store.episodes_completed;
    let QStore { tables, incumbent, .. } = store;
    let mut run = Run {
        incumbent,
        curve: Vec::with_capacity(cfg.episodes.saturating_sub(start) as usize),
    };
    let (tables, last) = match tables {
        QTables::Irl(mut l) => {
            let r = drive(&mut l, &problem, cfg, start, &mut run)?;
            (QTables::Irl(l), r)
        }
        QTables::EdMarl(mut l) => {
            let r = drive(&mut l, &problem, cfg, start, &mut run)?;
            (QTables::EdMarl(l), r)
        }
    };
    let Run { incumbent, curve } = run;
    let result = match &incumbent {
        Some(b) if !last.beats(b) => b.clone(),
        _ => last,
    };
    let solved = result.hotspot_count == 0;
    info!(
        "{method} seed {}: {} hotspots, total delay {} after {} episodes",
        cfg.seed,
        result.hotspot_count,
        result.delays.iter().map(|&d| d as u64).sum::<u64>(),
        cfg.episodes.max(start)
    );
    Ok(TrainOutcome {
        solution: DelayAssignment::from_indexed(scenario, &result.delays),
        hotspots: result.hotspot_count,
        solved,
        global_reward: result.global_reward,
        solution_episode: result.episode,
        delays: result.delays,
        curve,
        qstore: QStore {
            method,
            hotspot_cap: cfg.hotspot_cap,
            episodes_completed: cfg.episodes.max(start),
            flights: scenario.flights.iter().map(|f| f.id.clone()).collect(),
            tables,
            incumbent,
        },
    })
}

struct Run {
    incumbent: Option<Incumbent>,
    curve: Vec<CurvePoint>,
}

fn as_incumbent(episode: u32, r: &EpisodeResult) -> Incumbent {
    Incumbent {
        episode,
        delays: r.delays.clone(),
        hotspot_count: r.hotspot_count,
        global_reward: r.global_reward,
    }
}

/// Trains episodes `start..cfg.episodes`, then plays one greedy episode
/// without learning.
fn drive<L: Learner>(
    learner: &mut L,
    problem: &DcbProblem,
    cfg: &LearnerConfig,
    start: u32,
    run: &mut Run,
) -> Result<Incumbent, LearnerError> {
    let mut env = Environment::new(problem, cfg.hotspot_cap);
    for episode in start..cfg.episodes {
        let epsilon = epsilon_at(episode, cfg);
        let mut rng = episode_rng(cfg.seed, episode);
        let r = run_episode(learner, &mut env, cfg, epsilon, &mut rng, true)?;
        if epsilon == 0.0 {
            let candidate = as_incumbent(episode, &r);
            if run.incumbent.as_ref().is_none_or(|b| candidate.beats(b)) {
                run.incumbent = Some(candidate);
            }
        }
        if episode % 1000 == 0 {
            debug!("episode {episode}: eps {epsilon:.2}, {} hotspots", r.hotspot_count);
        }
        run.curve.push(CurvePoint {
            episode,
            epsilon,
            hotspot_count: r.hotspot_count,
            avg_delay: regulated_average_delay(&r.delays),
            global_reward: r.global_reward,
        });
    }
    let mut rng = episode_rng(cfg.seed, cfg.episodes);
    let last = run_episode(learner, &mut env, cfg, 0.0, &mut rng, false)?;
    Ok(as_incumbent(cfg.episodes, &last))
}

impl IrlLearner {
    pub fn for_scenario(s: &Scenario, cap: u32) -> Self {
        let maxes: Vec<Minute> = s.flights.iter().map(|f| f.effective_max_delay()).collect();
        IrlLearner::new(&maxes, cap)
    }
}

impl EdmarlLearner {
    pub fn for_scenario(_s: &Scenario) -> Self {
        EdmarlLearner::new()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::tiny3;

    fn quick(method: Method, seed: u64, episodes: u32) -> TrainOutcome {
        let cfg = LearnerConfig {
            episodes,
            seed,
            ..Default::default()
        };
        train(&tiny3(), method, &cfg, &RewardModel::default()).unwrap()
    }

    #[test]
    fn training_is_deterministic() {
        for m in [Method::Irl, Method::EdMarl] {
            let a = quick(m, 4, 300);
            let b = quick(m, 4, 300);
            assert_eq!(a.delays, b.delays);
            assert_eq!(a.curve, b.curve);
            assert_eq!(a.qstore, b.qstore);
        }
    }

    #[test]
    fn resume_matches_uninterrupted() {
        let s = tiny3();
        let reward = RewardModel::default();
        for m in [Method::Irl, Method::EdMarl] {
            let full = quick(m, 2, 400);
            let first = train(
                &s,
                m,
                &LearnerConfig {
                    episodes: 150,
                    seed: 2,
                    ..Default::default()
                },
                &reward,
            )
            .unwrap();
            let rest = train_resume(
                &s,
                m,
                &LearnerConfig {
                    episodes: 400,
                    seed: 2,
                    ..Default::default()
                },
                &reward,
                Some(first.qstore),
            )
            .unwrap();
            assert_eq!(rest.qstore, full.qstore);
            assert_eq!(rest.delays, full.delays);
            assert_eq!(rest.curve.len(), 250);
            assert_eq!(rest.curve[..], full.curve[150..]);
        }
    }

    #[test]
    fn curve_follows_schedule() {
        let out = quick(Method::Irl, 0, 250);
        assert_eq!(out.curve.len(), 250);
        assert_eq!(out.curve[0].epsilon, 0.9);
        assert_eq!(out.curve[240].epsilon, 0.88);
    }

    #[test]
    fn episode_respects_budget_and_legality() {
        let s = tiny3();
        let p = DcbProblem::new(&s, &RewardModel::default()).unwrap();
        let mut env = Environment::new(&p, 10);
        let mut learner = IrlLearner::for_scenario(&s, 10);
        let cfg = LearnerConfig::default();
        for e in 0..200 {
            let mut rng = episode_rng(7, e);
            let r = run_episode(&mut learner, &mut env, &cfg, 1.0, &mut rng, true).unwrap();
            assert!(r.steps <= 10);
            assert!(r.delays.iter().all(|&d| d <= 10));
        }
    }
}
