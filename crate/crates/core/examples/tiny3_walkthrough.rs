//! The three-flight fixture from congestion to the cheapest fix.

use dcb_marl::learners::{brute_force_oracle, Objective, OracleOutcome, DEFAULT_ORACLE_BUDGET};
use dcb_marl::reward::{RewardEvaluator, RewardModel};
use dcb_marl::scenario::{tiny3, DelayAssignment};
use dcb_marl::traffic::{build_graph, compute_demand, congested_durations, detect_hotspots};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let s = tiny3();
    let model = RewardModel::default();
    let eval = RewardEvaluator::new(&s, &model);

    for d in [DelayAssignment::zeros(), DelayAssignment::from_pairs([("f3", 10)])] {
        println!("delays {:?}", d.to_indexed(&s));
        for (sector, period, demand, cap) in compute_demand(&s, &d)?.cells() {
            println!("  {} [{},{}) demand {demand} capacity {cap}", sector.as_str(), period.start, period.end);
        }
        let hotspots = detect_hotspots(&s, &d)?;
        let graph = build_graph(&s, &hotspots);
        println!("  hotspots {} edges {}", hotspots.len(), graph.edges.len());
        println!("  congested minutes {:?}", congested_durations(&s, &d)?);
        println!("  rewards {:?} global {}", eval.agent_rewards(&d)?, eval.global_reward(&d)?);
    }

    if let OracleOutcome::Optimal { assignment, objective, evaluated } =
        brute_force_oracle(&s, &Objective::TotalDelay, DEFAULT_ORACLE_BUDGET)?
    {
        println!("optimum {:?} total {objective} after {evaluated} assignments", assignment.to_indexed(&s));
    }
    Ok(())
}
