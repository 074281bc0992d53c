//! Cooperative kitchen gridworld with a parameterized Theory-of-Mind partner
//! model, scripted edge-case partners and a scenario-based robustness test
//! harness.

pub mod assets;
pub mod eval;
pub mod grid;
pub mod harness;
mod parallel;
pub mod planning;
pub mod policy;
pub mod rollout;
pub mod seed;
pub mod tom;
