//! Seeded repetitions and their summary statistics.

use dcb_marl::experiments::{delay_histogram, experiment};
use dcb_marl::learners::{LearnerConfig, Method};
use dcb_marl::reward::RewardModel;
use dcb_marl::scenario::{generate_scenario, GeneratorParams};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let s = generate_scenario(&GeneratorParams::micro(5, 2, 6), 4)?;
    let mut cfg = LearnerConfig { episodes: 3000, ..LearnerConfig::default() };
    cfg.epsilon.interval = 24;
    cfg.epsilon.floor_episode = 2160;
    let report = experiment(&s, Method::EdMarl, &cfg, &RewardModel::default(), 8, 1)?;
    let sum = &report.summary;
    println!("solved {}/{}", sum.solved_runs, sum.n_runs);
    for (name, st) in [("avg delay", &sum.avg_delay), ("total delay", &sum.total_delay)] {
        println!(
            "{name}: mean {:.3} std {:.3} median {:.3} ks p {:?}",
            st.mean, st.std, st.median, st.ks_p_value
        );
    }
    let all: Vec<u32> = report.runs.iter().flat_map(|r| r.solution.to_indexed(&s)).collect();
    for b in delay_histogram(&all, s.max_delay()) {
        println!("[{:>2},{:>2}] {}", b.lo, b.hi, b.count);
    }
    Ok(())
}

