//! Finite MDPs, tabular policies and the exact linear-solve oracles built on
//! top of them.
//!
//! Tensors are stored flat in row-major order: `transition[(s * n_actions + a) * n_states + s']`.

mod fixture;
mod oracle;
mod random;

pub use fixture::MdpFixture;
pub use oracle::{
    advantage, discounted_return, exact_q, exact_v, expected_reward, performance_difference,
    policy_advantage, policy_advantage_from, state_kernel, stationary_distribution,
    undiscounted_horizon_return, unnormalized_return, PerformanceDifference, PolicyAdvantage,
};
pub use random::{random_mdp, random_policy};

use crate::error::{domain, Error, Result};

/// Tolerance used when checking that rows are probability vectors.
pub const SIMPLEX_TOL: f64 = 1e-12;

pub(crate) fn check_simplex(row: &[f64], index: usize, tol: f64) -> Result<()> {
    let mut sum = 0.0;
    for &p in row {
        if !p.is_finite() || p < 0.0 {
            return Err(Error::NotSimplex {
                row: index,
                reason: format!("entry {p} is negative or not finite"),
            });
        }
        sum += p;
    }
    if (sum - 1.0).abs() > tol {
        return Err(Error::NotSimplex {
            row: index,
            reason: format!("sums to {sum}"),
        });
    }
    Ok(())
}

/// A finite discounted MDP.
#[derive(Debug, Clone, PartialEq)]
pub struct TabularMdp {
    n_states: usize,
    n_actions: usize,
    transition: Vec<f64>,
    reward: Vec<f64>,
    gamma: f64,
    initial: Vec<f64>,
}

impl TabularMdp {
    /// Builds an MDP and checks every invariant.
    ///
    /// Rewards only need to be finite here; [`TabularMdp::reward_bound`] reports
    /// the largest magnitude so callers relying on `|r| <= 1` can check it.
    pub fn new(
        n_states: usize,
        n_actions: usize,
        transition: Vec<f64>,
        reward: Vec<f64>,
        gamma: f64,
        initial: Vec<f64>,
    ) -> Result<Self> {
        if n_states == 0 || n_actions == 0 {
            return Err(Error::Shape("MDP needs at least one state and one action".into()));
        }
        let len = n_states * n_actions * n_states;
        if transition.len() != len || reward.len() != len {
            return Err(Error::Shape(format!(
                "expected {len} transition/reward entries, got {}/{}",
                transition.len(),
                reward.len()
            )));
        }
        if initial.len() != n_states {
            return Err(Error::Shape(format!(
                "initial distribution has {} entries for {n_states} states",
                initial.len()
            )));
        }
        if !(gamma > 0.0 && gamma < 1.0) {
            return Err(domain("gamma", format!("{gamma} is not in (0, 1)")));
        }
        for (i, row) in transition.chunks(n_states).enumerate() {
            check_simplex(row, i, SIMPLEX_TOL)?;
        }
        check_simplex(&initial, 0, SIMPLEX_TOL)?;
        if let Some(r) = reward.iter().find(|r| !r.is_finite()) {
            return Err(domain("reward", format!("{r} is not finite")));
        }
        Ok(Self {
            n_states,
            n_actions,
            transition,
            reward,
            gamma,
            initial,
        })
    }

    /// Same as [`TabularMdp::new`] with the initial distribution concentrated on state 0.
    pub fn with_start_state(
        n_states: usize,
        n_actions: usize,
        transition: Vec<f64>,
        reward: Vec<f64>,
        gamma: f64,
    ) -> Result<Self> {
        let mut initial = vec![0.0; n_states.max(1)];
        initial[0] = 1.0;
        Self::new(n_states, n_actions, transition, reward, gamma, initial)
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn initial_distribution(&self) -> &[f64] {
        &self.initial
    }

    pub fn transition(&self) -> &[f64] {
        &self.transition
    }

    pub fn reward(&self) -> &[f64] {
        &self.reward
    }

    /// Next-state distribution for `(s, a)`.
    pub fn next_states(&self, s: usize, a: usize) -> &[f64] {
        let start = (s * self.n_actions + a) * self.n_states;
        &self.transition[start..start + self.n_states]
    }

    /// Rewards `r(s, a, ·)`.
    pub fn rewards(&self, s: usize, a: usize) -> &[f64] {
        let start = (s * self.n_actions + a) * self.n_states;
        &self.reward[start..start + self.n_states]
    }

    /// Largest reward magnitude.
    pub fn reward_bound(&self) -> f64 {
        self.reward.iter().fold(0.0_f64, |m, r| m.max(r.abs()))
    }

    /// Returns a copy with a different discount factor.
    pub fn with_gamma(&self, gamma: f64) -> Result<Self> {
        Self::new(
            self.n_states,
            self.n_actions,
            self.transition.clone(),
            self.reward.clone(),
            gamma,
            self.initial.clone(),
        )
    }

    pub(crate) fn check_policy(&self, pi: &Policy) -> Result<()> {
        if pi.n_states() != self.n_states || pi.n_actions() != self.n_actions {
            return Err(Error::Shape(format!(
                "policy is {}x{}, MDP is {}x{}",
                pi.n_states(),
                pi.n_actions(),
                self.n_states,
                self.n_actions
            )));
        }
        Ok(())
    }

    pub(crate) fn check_q(&self, q: &QFunction) -> Result<()> {
        if q.n_states() != self.n_states || q.n_actions() != self.n_actions {
            return Err(Error::Shape(format!(
                "Q is {}x{}, MDP is {}x{}",
                q.n_states(),
                q.n_actions(),
                self.n_states,
                self.n_actions
            )));
        }
        Ok(())
    }
}

/// A stationary stochastic policy `π(a|s)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Policy {
    n_states: usize,
    n_actions: usize,
    probs: Vec<f64>,
}

impl Policy {
    pub fn from_flat(n_states: usize, n_actions: usize, probs: Vec<f64>) -> Result<Self> {
        if n_states == 0 || n_actions == 0 || probs.len() != n_states * n_actions {
            return Err(Error::Shape(format!(
                "{} entries for a {n_states}x{n_actions} policy",
                probs.len()
            )));
        }
        for (s, row) in probs.chunks(n_actions).enumerate() {
            check_simplex(row, s, SIMPLEX_TOL)?;
        }
        Ok(Self {
            n_states,
            n_actions,
            probs,
        })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n_actions = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != n_actions) {
            return Err(Error::Shape("ragged policy rows".into()));
        }
        Self::from_flat(rows.len(), n_actions, rows.concat())
    }

    pub fn uniform(n_states: usize, n_actions: usize) -> Self {
        Self {
            n_states,
            n_actions,
            probs: vec![1.0 / n_actions as f64; n_states * n_actions],
        }
    }

    /// Deterministic policy picking `actions[s]` in state `s`.
    pub fn deterministic(n_actions: usize, actions: &[usize]) -> Result<Self> {
        let mut probs = vec![0.0; actions.len() * n_actions];
        for (s, &a) in actions.iter().enumerate() {
            if a >= n_actions {
                return Err(Error::Shape(format!("action {a} out of range at state {s}")));
            }
            probs[s * n_actions + a] = 1.0;
        }
        Self::from_flat(actions.len(), n_actions, probs)
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    pub fn row(&self, s: usize) -> &[f64] {
        &self.probs[s * self.n_actions..(s + 1) * self.n_actions]
    }

    pub fn prob(&self, s: usize, a: usize) -> f64 {
        self.probs[s * self.n_actions + a]
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.probs
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.probs.chunks(self.n_actions)
    }

    /// Greedy deterministic policy with respect to `q` (ties go to the lowest action).
    pub fn greedy(q: &QFunction) -> Self {
        let actions: Vec<usize> = (0..q.n_states()).map(|s| argmax(q.row(s))).collect();
        Self::deterministic(q.n_actions(), &actions).expect("argmax is always in range")
    }

    /// Largest per-state total variation `½ Σ_a |π(a|s) − μ(a|s)|`.
    pub fn max_total_variation(&self, other: &Policy) -> f64 {
        self.rows()
            .zip(other.rows())
            .map(|(p, q)| total_variation(p, q))
            .fold(0.0, f64::max)
    }

    pub(crate) fn same_shape(&self, other: &Policy) -> Result<()> {
        if self.n_states != other.n_states || self.n_actions != other.n_actions {
            return Err(Error::Shape(format!(
                "policies are {}x{} and {}x{}",
                self.n_states, self.n_actions, other.n_states, other.n_actions
            )));
        }
        Ok(())
    }
}

/// Total variation distance between two distributions on the same support.
pub fn total_variation(p: &[f64], q: &[f64]) -> f64 {
    0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>()
}

pub(crate) fn argmax(xs: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in xs.iter().enumerate() {
        if x > xs[best] {
            best = i;
        }
    }
    best
}

/// State-action values `Q(s, a)`.
#[derive(Debug, Clone, PartialEq)]
pub struct QFunction {
    n_states: usize,
    n_actions: usize,
    values: Vec<f64>,
}

impl QFunction {
    pub fn zeros(n_states: usize, n_actions: usize) -> Self {
        Self {
            n_states,
            n_actions,
            values: vec![0.0; n_states * n_actions],
        }
    }

    pub fn from_flat(n_states: usize, n_actions: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != n_states * n_actions {
            return Err(Error::Shape(format!(
                "{} entries for a {n_states}x{n_actions} Q-function",
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(domain("q", "entries must be finite"));
        }
        Ok(Self {
            n_states,
            n_actions,
            values,
        })
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    pub fn get(&self, s: usize, a: usize) -> f64 {
        self.values[s * self.n_actions + a]
    }

    pub fn row(&self, s: usize) -> &[f64] {
        &self.values[s * self.n_actions..(s + 1) * self.n_actions]
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.values
    }

    pub(crate) fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    /// `V(s) = Σ_a π(a|s) Q(s, a)`.
    pub fn state_values(&self, pi: &Policy) -> ValueFunction {
        ValueFunction(
            (0..self.n_states)
                .map(|s| dot(pi.row(s), self.row(s)))
                .collect(),
        )
    }

    pub fn sup_distance(&self, other: &QFunction) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// State values `V(s)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueFunction(pub Vec<f64>);

/// Normalized discounted state occupancy `d^π`.
#[derive(Debug, Clone, PartialEq)]
pub struct StationaryDistribution(pub Vec<f64>);

impl StationaryDistribution {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
