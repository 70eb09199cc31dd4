//! Demand-capacity balancing simulator with multiagent tabular Q-learning
//! for ground delay assignment.
//!
//! Flights are agents. Each one repeatedly chooses between holding its
//! current ground delay and adding a minute, until no sector is loaded above
//! capacity in any counting period.

pub mod cli;
pub mod experiments;
pub mod learners;
pub mod reward;
pub mod scenario;
pub mod traffic;
