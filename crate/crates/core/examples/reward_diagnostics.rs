//! Factoredness and learnability of local rewards, exhaustive on tiny3.

use dcb_marl::reward::{
    estimate_factoredness, estimate_learnability, exhaustive_agent_pairs, exhaustive_alternatives,
    RewardError, RewardEvaluator, RewardModel,
};
use dcb_marl::scenario::{tiny3, DelayAssignment};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let s = tiny3();
    let model = RewardModel::default();
    let eval = RewardEvaluator::new(&s, &model);
    let all = exhaustive_alternatives(&s);
    let state = DelayAssignment::from_pairs([("f1", 3), ("f2", 3), ("f3", 3)]);

    for f in &s.flights {
        let pairs = exhaustive_agent_pairs(&s, &state, &f.id);
        let factoredness = estimate_factoredness(&eval, &f.id, pairs)?;
        match estimate_learnability(&eval, &f.id, &state, all.iter().cloned()) {
            Ok(l) => println!(
                "{}: factoredness {factoredness:.3} learnability {:.4} ({} used, {} excluded)",
                f.id.as_str(),
                l.value,
                l.used,
                l.excluded
            ),
            Err(RewardError::UndefinedRatio(n)) => println!(
                "{}: factoredness {factoredness:.3} learnability undefined (all {n} samples excluded)",
                f.id.as_str()
            ),
            Err(e) => return Err(e.into()),
        }
    }
    Ok(())
}
