//! IRL against Ed-MARL on a generated micro scenario, with the exact optimum.

use dcb_marl::experiments::run_metrics;
use dcb_marl::learners::{brute_force_oracle, train, LearnerConfig, Method, Objective, DEFAULT_ORACLE_BUDGET};
use dcb_marl::reward::RewardModel;
use dcb_marl::scenario::{generate_scenario, GeneratorParams};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let seed = std::env::args().nth(1).map_or(Ok(2), |a| a.parse())?;
    let s = generate_scenario(&GeneratorParams::micro(5, 2, 6), seed)?;
    let model = RewardModel::default();
    let best = brute_force_oracle(&s, &Objective::TotalDelay, DEFAULT_ORACLE_BUDGET)?;
    println!("oracle total delay: {:?}", best.objective());

    for method in [Method::Irl, Method::EdMarl] {
        let cfg = LearnerConfig { seed: 0, ..LearnerConfig::default() };
        let out = train(&s, method, &cfg, &model)?;
        let m = run_metrics(&s, &out.solution)?;
        println!(
            "{method}: delays {:?} hotspots {} total {} avg {:.3} (episode {})",
            out.delays, m.remaining_hotspots, m.total_delay, m.avg_delay, out.solution_episode
        );
    }
    Ok(())
}
