//! Tightening the local max delay until the congestion cannot be cleared.

use dcb_marl::experiments::cap_sweep;
use dcb_marl::learners::{LearnerConfig, Method};
use dcb_marl::reward::RewardModel;
use dcb_marl::scenario::tiny3;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let s = tiny3();
    let cfg = LearnerConfig::default();
    for method in [Method::Irl, Method::EdMarl] {
        let rows = cap_sweep(&s, |_| true, &[5, 8, 10], method, &cfg, &RewardModel::default(), 5, 1)?;
        for r in rows {
            println!(
                "{method} cap {:>2}: solved {}/{} remaining {:.1} oracle {:?}",
                r.cap, r.solved_runs, r.n_runs, r.mean_remaining_hotspots, r.oracle_feasible
            );
        }
    }
    Ok(())
}
