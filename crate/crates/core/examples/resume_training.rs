//! Training in two legs through a saved Q-store.

use dcb_marl::learners::{train, train_resume, LearnerConfig, Method, QStore};
use dcb_marl::reward::RewardModel;
use dcb_marl::scenario::tiny3;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let s = tiny3();
    let model = RewardModel::default();
    let mut cfg = LearnerConfig { episodes: 4000, seed: 2, ..LearnerConfig::default() };
    cfg.epsilon.interval = 32;
    cfg.epsilon.floor_episode = 2880;

    let first = train(&s, Method::EdMarl, &LearnerConfig { episodes: 1500, ..cfg.clone() }, &model)?;
    let path = std::env::temp_dir().join("tiny3_qstore.json");
    first.qstore.save(&path)?;
    let resumed = train_resume(&s, Method::EdMarl, &cfg, &model, Some(QStore::load(&path)?))?;
    let straight = train(&s, Method::EdMarl, &cfg, &model)?;

    println!("resumed  {:?} hotspots {}", resumed.delays, resumed.hotspots);
    println!("straight {:?} hotspots {}", straight.delays, straight.hotspots);
    println!("identical stores: {}", resumed.qstore == straight.qstore);
    Ok(())
}
