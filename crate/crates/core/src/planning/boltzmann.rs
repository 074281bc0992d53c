use rand::Rng;
use thiserror::Error;

use crate::grid::Action;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum BoltzmannError {
    #[error("no action has a finite cost")]
    EmptyCosts,
}

/// Softmax over negative costs: `P(a) ∝ exp(-beta * cost(a))`, restricted to
/// actions with a finite cost. Shifted by the minimum cost for stability.
pub fn boltzmann_probabilities(
    costs: &[(Action, f64)],
    beta: f64,
) -> Result<Vec<(Action, f64)>, BoltzmannError> {
    let min = costs
        .iter()
        .map(|(_, c)| *c)
        .filter(|c| c.is_finite())
        .fold(f64::INFINITY, f64::min);
    if !min.is_finite() {
        return Err(BoltzmannError::EmptyCosts);
    }
    let weights: Vec<(Action, f64)> = costs
        .iter()
        .filter(|(_, c)| c.is_finite())
        .map(|(a, c)| (*a, (-beta * (c - min)).exp()))
        .collect();
    let total: f64 = weights.iter().map(|(_, w)| w).sum();
    Ok(weights.into_iter().map(|(a, w)| (a, w / total)).collect())
}

/// Sample an action from the Boltzmann distribution over `costs`.
pub fn boltzmann_select<R: Rng + ?Sized>(
    costs: &[(Action, f64)],
    beta: f64,
    rng: &mut R,
) -> Result<Action, BoltzmannError> {
    let probs = boltzmann_probabilities(costs, beta)?;
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (a, p) in &probs {
        acc += p;
        if u < acc {
            return Ok(*a);
        }
    }
    Ok(probs.last().unwrap().0)
}

/// Finite entries of a per-action cost array, in `Action::ALL` order.
pub fn finite_costs(costs: &[Option<u32>; 6]) -> Vec<(Action, f64)> {
    Action::ALL
        .into_iter()
        .zip(costs.iter())
        .filter_map(|(a, c)| c.map(|c| (a, c as f64)))
        .collect()
}
