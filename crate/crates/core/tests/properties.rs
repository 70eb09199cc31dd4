mod common;

use std::collections::BTreeSet;

use common::*;
use dcb_marl::experiments::{aggregate, delay_histogram, NO_DELAY_THRESHOLD};
use dcb_marl::learners::{
    brute_force_oracle, edmarl_joint_value, edmarl_update, irl_update, run_episode, train, train_resume,
    AgentAction, AgentQTable, Bootstrap, DcbProblem, EdgeQTable, EdgeTransition, EdmarlLearner, Environment,
    IrlLearner, Learner, LearnerConfig, LocalState, Method, Objective, QStore, View,
    DEFAULT_ORACLE_BUDGET,
};
use dcb_marl::reward::{
    delay_cost, hotspot_cost, AgentContext, CostSegment, RewardModel, RewardParams, StrategicCostTable,
};
use dcb_marl::scenario::{
    apply_local_max_delay, generate_scenario, resolve_crossings, tiny3, validate_scenario, FlightId,
    GeneratorParams, Scenario,
};
use dcb_marl::traffic::{build_graph, compute_demand, congested_durations, detect_hotspots};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn short_cfg(seed: u64, episodes: u32) -> LearnerConfig {
    let mut cfg = LearnerConfig {
        episodes,
        seed,
        alpha: 0.1,
        ..LearnerConfig::default()
    };
    cfg.epsilon.interval = 10;
    cfg.epsilon.decrement = 0.05;
    cfg.epsilon.floor_episode = episodes * 2 / 3;
    cfg
}

fn scaled_model(c: f64) -> RewardModel {
    let base = RewardModel::default();
    let mut costs = base.costs.clone();
    for curve in costs.classes.values_mut() {
        for seg in curve {
            seg.rate_per_min *= c;
        }
    }
    RewardModel::new(
        RewardParams {
            lambda: base.params.lambda,
            positive_reward: base.params.positive_reward * c,
            hotspot_rate: base.params.hotspot_rate * c,
        },
        costs,
    )
}

fn oracle_total(s: &Scenario) -> Option<f64> {
    brute_force_oracle(s, &Objective::TotalDelay, DEFAULT_ORACLE_BUDGET)
        .unwrap()
        .objective()
}

/// Checks each update against the no-neighbour rule before forwarding it.
struct Watched<L> {
    inner: L,
}

impl Learner for Watched<IrlLearner> {
    fn select<R: Rng + ?Sized>(&self, view: &View<'_>, agent: usize, epsilon: f64, rng: &mut R) -> AgentAction {
        assert!(view.is_active(agent), "inactive agent {agent} asked to choose");
        self.inner.select(view, agent, epsilon, rng)
    }

    fn update(
        &mut self,
        before: &View<'_>,
        actions: &[AgentAction],
        after: &View<'_>,
        bootstrap: Bootstrap,
        cfg: &LearnerConfig,
    ) {
        let old = self.inner.tables.clone();
        self.inner.update(before, actions, after, bootstrap, cfg);
        for f in 0..actions.len() {
            if !before.is_active(f) {
                assert_eq!(actions[f], AgentAction::Hold);
                assert_eq!(old[f], self.inner.tables[f], "agent {f} updated without neighbours");
            }
        }
    }
}

impl Learner for Watched<EdmarlLearner> {
    fn select<R: Rng + ?Sized>(&self, view: &View<'_>, agent: usize, epsilon: f64, rng: &mut R) -> AgentAction {
        assert!(view.is_active(agent), "inactive agent {agent} asked to choose");
        self.inner.select(view, agent, epsilon, rng)
    }

    fn update(
        &mut self,
        before: &View<'_>,
        actions: &[AgentAction],
        after: &View<'_>,
        bootstrap: Bootstrap,
        cfg: &LearnerConfig,
    ) {
        let lonely: Vec<u32> = (0..actions.len())
            .filter(|&f| before.neighbours(f).is_empty())
            .map(|f| f as u32)
            .collect();
        let touching = |t: &EdgeQTable| {
            t.sorted_entries()
                .into_iter()
                .filter(|(k, _)| lonely.contains(&k.lo) || lonely.contains(&k.hi))
                .collect::<Vec<_>>()
        };
        let old = touching(&self.inner.table);
        self.inner.update(before, actions, after, bootstrap, cfg);
        assert_eq!(old, touching(&self.inner.table));
    }
}

fn arb_segments() -> impl Strategy<Value = Vec<CostSegment>> {
    (prop::collection::vec((1u32..20, 0.0f64..5.0), 0..4), 0.0f64..5.0).prop_map(|(bounded, last)| {
        let mut bound = 0;
        let mut out: Vec<CostSegment> = bounded
            .into_iter()
            .map(|(step, rate)| {
                bound += step;
                CostSegment {
                    up_to_min: Some(bound),
                    rate_per_min: rate,
                }
            })
            .collect();
        out.push(CostSegment {
            up_to_min: None,
            rate_per_min: last,
        });
        out
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn demand_matches_minute_scan(seed in any::<u64>()) {
        let s = random_scenario(seed);
        let d = random_delays(&s, seed);
        let table = compute_demand(&s, &d).unwrap();
        let members = scan_members(&s, &d);
        for ((sector, p), m) in &members {
            prop_assert_eq!(table.get(sector, *p), Some(m.len() as u32), "{:?} period {}", sector, p);
        }
        prop_assert_eq!(table.total(), members.values().map(|m| m.len() as u64).sum::<u64>());
    }

    #[test]
    fn hotspots_are_exactly_the_overloaded_cells(seed in any::<u64>()) {
        let s = random_scenario(seed);
        let d = random_delays(&s, seed);
        let found: BTreeSet<_> = detect_hotspots(&s, &d)
            .unwrap()
            .into_iter()
            .map(|h| (h.sector.clone(), h.period.start, h.participants.clone()))
            .collect();
        let ps = periods(&s);
        let expected: BTreeSet<_> = scan_members(&s, &d)
            .into_iter()
            .filter(|((sector, _), m)| m.len() as u32 > s.sector(sector).unwrap().capacity)
            .map(|((sector, p), m)| (sector, ps[p].0, m))
            .collect();
        prop_assert_eq!(found, expected);
    }

    #[test]
    fn graph_is_the_union_of_hotspot_cliques(seed in any::<u64>()) {
        let s = random_scenario(seed);
        let d = random_delays(&s, seed);
        let hs = detect_hotspots(&s, &d).unwrap();
        let g = build_graph(&s, &hs);
        for a in &s.flights {
            for b in &s.flights {
                let shared = hs.iter().any(|h| h.participants.contains(&a.id) && h.participants.contains(&b.id));
                prop_assert_eq!(g.has_edge(&a.id, &b.id), a.id != b.id && shared);
                prop_assert_eq!(g.has_edge(&a.id, &b.id), g.has_edge(&b.id, &a.id));
            }
            let n = g.neighbourhood(&a.id);
            prop_assert!(n.contains(&a.id));
            prop_assert_eq!(n.len(), g.degree(&a.id) + 1);
        }
    }

    #[test]
    fn congested_duration_is_bounded_and_matches_scan(seed in any::<u64>()) {
        let s = random_scenario(seed);
        let d = random_delays(&s, seed);
        let hs = detect_hotspots(&s, &d).unwrap();
        let tdc = congested_durations(&s, &d).unwrap();
        for (f, &t) in s.flights.iter().zip(&tdc) {
            prop_assert_eq!(t, scan_tdc(&s, &d, &f.id), "flight {:?}", f.id);
            prop_assert!(t <= f.total_crossing_duration());
            let involved = hs.iter().any(|h| h.participants.contains(&f.id));
            prop_assert_eq!(t > 0, involved);
        }
    }

    #[test]
    fn delay_shifts_without_losing_minutes(seed in any::<u64>()) {
        let s = random_scenario(seed);
        let d = random_delays(&s, seed);
        for f in &s.flights {
            let delay = d.get(&f.id);
            let parts = resolve_crossings(f, delay, &s).unwrap();
            let total: u32 = parts.iter().map(|p| p.exit - p.entry).sum();
            prop_assert_eq!(total, f.total_crossing_duration());
            prop_assert_eq!(parts.first().unwrap().entry, f.crossings.first().unwrap().entry + delay);
            prop_assert_eq!(parts.last().unwrap().exit, f.crossings.last().unwrap().exit + delay);
            for w in parts.windows(2) {
                prop_assert!(w[0].exit <= w[1].entry);
            }
            for p in &parts {
                prop_assert!(p.entry < p.exit);
                for t in p.entry..p.exit.min(s.horizon) {
                    prop_assert_eq!(open_sector_at(&s, f, delay, t), Some(p.sector.clone()));
                }
            }
        }
    }

    #[test]
    fn reward_falls_with_congestion_and_delay(
        segs in arb_segments(),
        lambda in 0.0f64..50.0,
        positive in 0.1f64..100.0,
        rate in 0.1f64..100.0,
        delay in 0u32..200,
        tdc in 0u32..200,
    ) {
        let params = RewardParams { lambda, positive_reward: positive, hotspot_rate: rate };
        let table = StrategicCostTable { classes: [("c".to_string(), segs)].into() };
        table.validate().unwrap();
        let model = RewardModel::new(params, table.clone());
        prop_assert!(hotspot_cost(tdc + 1, &params) <= hotspot_cost(tdc, &params));
        prop_assert!(hotspot_cost(tdc + 1, &params) < 0.0);
        prop_assert!(delay_cost(delay + 1, "c", &table).unwrap() >= delay_cost(delay, "c", &table).unwrap());
        let r = |delay, tdc| model.local_reward(&AgentContext { delay, tdc, aircraft_class: "c" }).unwrap();
        prop_assert!(r(delay + 1, tdc) <= r(delay, tdc));
        prop_assert!(r(delay, tdc + 1) <= r(delay, tdc));
    }

    #[test]
    fn irl_update_moves_towards_target(
        old in -1e4f64..1e4,
        reward in -1e4f64..1e4,
        next_hold in -1e4f64..1e4,
        next_inc in -1e4f64..1e4,
        alpha in 0.0f64..=1.0,
        gamma in 0.0f64..=1.0,
        can_inc in any::<bool>(),
        terminal in any::<bool>(),
    ) {
        let mut q = AgentQTable::new(5, 3);
        let s = LocalState::new(1, 2);
        let next = LocalState::new(2, 1);
        q.set(s, AgentAction::Increment, old);
        q.set(next, AgentAction::Hold, next_hold);
        q.set(next, AgentAction::Increment, next_inc);
        let best = if can_inc { next_hold.max(next_inc) } else { next_hold };
        let target = reward + if terminal { 0.0 } else { gamma * best };
        let new = irl_update(&mut q, s, AgentAction::Increment, reward, next, can_inc, alpha, gamma, terminal);
        let (lo, hi) = (old.min(target), old.max(target));
        let slack = 1e-9 * (1.0 + lo.abs() + hi.abs());
        prop_assert!(lo - slack <= new && new <= hi + slack);
        prop_assert_eq!(q.get(s, AgentAction::Hold), 0.0);
        if alpha == 1.0 {
            prop_assert!((new - target).abs() <= slack);
        }
    }

    #[test]
    fn edge_update_ignores_orientation(
        old in -1e3f64..1e3,
        r_i in -1e3f64..1e3,
        r_j in -1e3f64..1e3,
        n_i in 2usize..6,
        n_j in 2usize..6,
        next_q in prop::array::uniform4(-1e3f64..1e3),
        a_i in 0usize..2,
        a_j in 0usize..2,
        inc in (any::<bool>(), any::<bool>()),
        alpha in 0.0f64..=1.0,
        gamma in 0.0f64..=1.0,
    ) {
        let (a_i, a_j) = (AgentAction::from_index(a_i), AgentAction::from_index(a_j));
        let build = || {
            let mut t = EdgeQTable::new();
            t.set(2, 5, 1, 3, a_i, a_j, old);
            for (k, &v) in next_q.iter().enumerate() {
                t.set(2, 5, 4, 6, AgentAction::from_index(k / 2), AgentAction::from_index(k % 2), v);
            }
            t
        };
        let fwd = EdgeTransition {
            i: 2, j: 5, s_i: 1, s_j: 3, a_i, a_j, r_i, r_j, n_i, n_j,
            next_s_i: 4, next_s_j: 6, next_inc_i: inc.0, next_inc_j: inc.1,
        };
        let rev = EdgeTransition {
            i: 5, j: 2, s_i: 3, s_j: 1, a_i: a_j, a_j: a_i, r_i: r_j, r_j: r_i, n_i: n_j, n_j: n_i,
            next_s_i: 6, next_s_j: 4, next_inc_i: inc.1, next_inc_j: inc.0,
        };
        let (mut t1, mut t2) = (build(), build());
        let v1 = edmarl_update(&mut t1, &fwd, alpha, gamma, false);
        let v2 = edmarl_update(&mut t2, &rev, alpha, gamma, false);
        prop_assert!((v1 - v2).abs() <= 1e-9 * (1.0 + v1.abs()));
        prop_assert_eq!(t2.get(2, 5, 1, 3, a_i, a_j), v2);
    }

    #[test]
    fn joint_value_counts_each_edge_once(seed in any::<u64>(), values in prop::collection::vec(-100.0f64..100.0, 64)) {
        let s = random_scenario(seed);
        let problem = DcbProblem::new(&s, &RewardModel::default()).unwrap();
        let mut env = Environment::new(&problem, 10);
        let delays = random_delays(&s, seed).to_indexed(&s);
        env.set_delays(&delays).unwrap();
        let view = env.current();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let actions: Vec<AgentAction> = (0..view.n_agents()).map(|_| AgentAction::from_index(rng.gen_range(0..2))).collect();
        let mut table = EdgeQTable::new();
        let mut k = 0;
        let mut edge_sum = 0.0;
        for i in 0..view.n_agents() {
            for &j in view.neighbours(i) {
                let ju = j as usize;
                if ju < i {
                    continue;
                }
                for a in AgentAction::ALL {
                    for b in AgentAction::ALL {
                        table.set(i as u32, j, view.state_index(i), view.state_index(ju), a, b, values[k % 64]);
                        if (a, b) == (actions[i], actions[ju]) {
                            edge_sum += values[k % 64];
                        }
                        k += 1;
                    }
                }
            }
        }
        let v = edmarl_joint_value(&table, &view, &actions);
        prop_assert!((v - edge_sum).abs() <= 1e-9 * (1.0 + edge_sum.abs()));
    }

    #[test]
    fn histogram_holds_every_regulated_delay(delays in prop::collection::vec(0u32..200, 0..50), max in 0u32..200) {
        let bins = delay_histogram(&delays, max);
        let regulated = delays.iter().filter(|&&d| d > NO_DELAY_THRESHOLD).count();
        prop_assert_eq!(bins.iter().map(|b| b.count).sum::<usize>(), regulated);
        for w in bins.windows(2) {
            prop_assert_eq!(w[0].hi + 1, w[1].lo);
        }
        prop_assert_eq!(bins[0].lo, NO_DELAY_THRESHOLD + 1);
        prop_assert!(bins.last().unwrap().hi >= max);
        for &d in delays.iter().filter(|&&d| d > NO_DELAY_THRESHOLD) {
            prop_assert!(bins.iter().any(|b| b.lo <= d && d <= b.hi));
        }
    }

    #[test]
    fn aggregation_ignores_run_order(values in prop::collection::vec(-1e6f64..1e6, 2..40), seed in any::<u64>()) {
        let mut shuffled = values.clone();
        shuffled.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        prop_assert_eq!(aggregate(&values).unwrap(), aggregate(&shuffled).unwrap());
        if let Some(p) = aggregate(&values).unwrap().ks_p_value {
            prop_assert!((0.0..=1.0).contains(&p));
        }
    }

    #[test]
    fn local_cap_never_raises_max_delay(seed in any::<u64>(), cap in 0u32..10, mask in any::<u8>()) {
        let s = random_scenario(seed);
        let pick = |f: &dcb_marl::scenario::FlightPlan| {
            let k: u32 = f.id.as_str()[1..].parse().unwrap();
            mask & (1 << k) != 0
        };
        let capped = apply_local_max_delay(&s, pick, cap);
        prop_assert_eq!(s.flights.len(), capped.flights.len());
        for (a, b) in s.flights.iter().zip(&capped.flights) {
            prop_assert!(b.max_delay <= a.max_delay);
            let expected = if pick(a) { a.max_delay.min(cap) } else { a.max_delay };
            prop_assert_eq!(b.max_delay, expected);
            prop_assert_eq!(&a.crossings, &b.crossings);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn episodes_only_take_legal_actions(seed in any::<u64>(), method_irl in any::<bool>()) {
        let s = random_scenario(seed);
        let problem = DcbProblem::new(&s, &RewardModel::default()).unwrap();
        let mut env = Environment::new(&problem, 10);
        let cfg = LearnerConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..20 {
            let result = if method_irl {
                let mut l = Watched { inner: IrlLearner::new(&problem_maxes(&problem), 10) };
                run_episode(&mut l, &mut env, &cfg, 1.0, &mut rng, true).unwrap()
            } else {
                let mut l = Watched { inner: EdmarlLearner::new() };
                run_episode(&mut l, &mut env, &cfg, 1.0, &mut rng, true).unwrap()
            };
            for (f, &d) in s.flights.iter().zip(&result.delays) {
                prop_assert!(d <= f.effective_max_delay());
                if !f.regulatable {
                    prop_assert_eq!(d, 0);
                }
            }
            prop_assert!(result.steps <= problem.step_budget().max(1));
        }
    }

    #[test]
    fn oracle_is_never_beaten(seed in any::<u64>(), method_irl in any::<bool>()) {
        let s = random_scenario(seed);
        let method = if method_irl { Method::Irl } else { Method::EdMarl };
        let out = train(&s, method, &short_cfg(seed, 300), &RewardModel::default()).unwrap();
        match oracle_total(&s) {
            Some(best) => {
                if out.solved {
                    prop_assert!(out.solution.total() as f64 >= best);
                }
            }
            None => prop_assert!(!out.solved),
        }
    }

    #[test]
    fn looser_caps_never_hurt_feasibility(seed in any::<u64>(), lo in 0u32..6, extra in 0u32..4) {
        let s = random_scenario(seed);
        let tight = oracle_total(&apply_local_max_delay(&s, |_| true, lo));
        let loose = oracle_total(&apply_local_max_delay(&s, |_| true, lo + extra));
        match (tight, loose) {
            (Some(t), Some(l)) => prop_assert!(l <= t),
            (Some(_), None) => prop_assert!(false, "feasible at {} but not at {}", lo, lo + extra),
            _ => {}
        }
    }

    #[test]
    fn positive_power_of_two_scaling_keeps_the_policy(seed in 0u64..1000, exp in -3i32..4, method_irl in any::<bool>()) {
        let s = random_scenario(seed);
        let method = if method_irl { Method::Irl } else { Method::EdMarl };
        let cfg = short_cfg(seed, 200);
        let base = train(&s, method, &cfg, &RewardModel::default()).unwrap();
        let scaled = train(&s, method, &cfg, &scaled_model(2f64.powi(exp))).unwrap();
        prop_assert_eq!(&base.delays, &scaled.delays);
        let hs = |c: &[dcb_marl::learners::CurvePoint]| c.iter().map(|p| (p.hotspot_count, p.avg_delay.to_bits())).collect::<Vec<_>>();
        prop_assert_eq!(hs(&base.curve), hs(&scaled.curve));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn training_is_deterministic_and_resumable(seed in any::<u64>(), method_irl in any::<bool>(), cut in 1u32..299) {
        let s = random_scenario(seed);
        let method = if method_irl { Method::Irl } else { Method::EdMarl };
        let cfg = short_cfg(seed, 300);
        let model = RewardModel::default();
        let a = train(&s, method, &cfg, &model).unwrap();
        let b = train(&s, method, &cfg, &model).unwrap();
        prop_assert_eq!(&a.delays, &b.delays);
        prop_assert_eq!(&a.curve, &b.curve);
        let json = a.qstore.to_json_string();
        prop_assert_eq!(&json, &b.qstore.to_json_string());
        let reloaded = QStore::from_json_str(&json).unwrap();
        prop_assert_eq!(&reloaded, &a.qstore);

        let head = train(&s, method, &LearnerConfig { episodes: cut, ..cfg.clone() }, &model).unwrap();
        let stored = QStore::from_json_str(&head.qstore.to_json_string()).unwrap();
        let rest = train_resume(&s, method, &cfg, &model, Some(stored)).unwrap();
        prop_assert_eq!(&rest.delays, &a.delays);
        prop_assert_eq!(rest.solution_episode, a.solution_episode);
        prop_assert_eq!(rest.qstore.to_json_string(), json);
        prop_assert_eq!(&rest.curve[..], &a.curve[cut as usize..]);
    }

    #[test]
    fn generator_is_deterministic_and_valid(seed in 0u64..10_000, n in 2usize..6, sectors in 1usize..3) {
        let params = GeneratorParams::micro(n, sectors, 6);
        let a = generate_scenario(&params, seed).unwrap();
        let b = generate_scenario(&params, seed).unwrap();
        prop_assert_eq!(&a, &b);
        prop_assert!(validate_scenario(&a).is_empty());
        prop_assert_eq!(a.flights.len(), n);
        prop_assert!(oracle_total(&a).is_some());
    }
}

fn problem_maxes(p: &DcbProblem) -> Vec<u32> {
    (0..p.n_agents()).map(|f| p.max_delay(f)).collect()
}

#[test]
fn tiny3_neighbourhoods_include_the_agent() {
    let s = tiny3();
    let d = dcb_marl::scenario::DelayAssignment::zeros();
    let g = build_graph(&s, &detect_hotspots(&s, &d).unwrap());
    let ids: BTreeSet<FlightId> = ["f1", "f2", "f3"].into_iter().map(FlightId::new).collect();
    for id in &ids {
        assert_eq!(g.neighbourhood(id), ids);
    }
}
