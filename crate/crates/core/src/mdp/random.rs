use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};

use super::{Policy, TabularMdp};
use crate::error::Result;

/// Draws a Dirichlet(1, …, 1) vector by normalizing unit exponentials.
fn flat_dirichlet<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<f64> {
    let mut xs: Vec<f64> = (0..n).map(|_| Exp1.sample(rng)).collect();
    let total: f64 = xs.iter().sum();
    for x in &mut xs {
        *x /= total;
    }
    xs
}

/// Random MDP with Dirichlet(1) transition rows, uniform rewards in `[-1, 1]`
/// and `d₀` concentrated on state 0.
pub fn random_mdp(n_states: usize, n_actions: usize, gamma: f64, seed: u64) -> Result<TabularMdp> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut transition = Vec::with_capacity(n_states * n_actions * n_states);
    for _ in 0..n_states * n_actions {
        transition.extend(flat_dirichlet(n_states, &mut rng));
    }
    let reward = (0..n_states * n_actions * n_states)
        .map(|_| rng.random_range(-1.0..=1.0))
        .collect();
    TabularMdp::with_start_state(n_states, n_actions, transition, reward, gamma)
}

/// Policy with independent Dirichlet(1) rows.
pub fn random_policy<R: Rng + ?Sized>(n_states: usize, n_actions: usize, rng: &mut R) -> Policy {
    let probs = (0..n_states)
        .flat_map(|_| flat_dirichlet(n_actions, rng))
        .collect();
    Policy::from_flat(n_states, n_actions, probs).expect("dirichlet rows are simplex vectors")
}
