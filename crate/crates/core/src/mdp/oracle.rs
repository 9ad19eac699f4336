use nalgebra::{DMatrix, DVector};

use super::{dot, Policy, QFunction, StationaryDistribution, TabularMdp, ValueFunction};
use crate::error::{Error, Result};

/// `r̄(s, a) = Σ_{s'} T(s'|s, a) r(s, a, s')`.
pub fn expected_reward(mdp: &TabularMdp) -> QFunction {
    let (ns, na) = (mdp.n_states(), mdp.n_actions());
    let mut values = Vec::with_capacity(ns * na);
    for s in 0..ns {
        for a in 0..na {
            values.push(dot(mdp.next_states(s, a), mdp.rewards(s, a)));
        }
    }
    QFunction::from_flat(ns, na, values).expect("shape matches the MDP")
}

/// State-to-state kernel `P^π(s'|s)` as a dense matrix.
pub fn state_kernel(mdp: &TabularMdp, pi: &Policy) -> Result<DMatrix<f64>> {
    mdp.check_policy(pi)?;
    let ns = mdp.n_states();
    let mut p = DMatrix::zeros(ns, ns);
    for s in 0..ns {
        for (a, &w) in pi.row(s).iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            for (s2, &t) in mdp.next_states(s, a).iter().enumerate() {
                p[(s, s2)] += w * t;
            }
        }
    }
    Ok(p)
}

fn resolvent(mdp: &TabularMdp, pi: &Policy) -> Result<DMatrix<f64>> {
    let p = state_kernel(mdp, pi)?;
    let ns = mdp.n_states();
    Ok(DMatrix::identity(ns, ns) - p * mdp.gamma())
}

fn solve(a: DMatrix<f64>, b: DVector<f64>) -> Result<DVector<f64>> {
    a.lu()
        .solve(&b)
        .ok_or_else(|| Error::Solver("singular (I - γP) system".into()))
}

/// `V^π` from `(I − γ P^π) V = r^π`.
pub fn exact_v(mdp: &TabularMdp, pi: &Policy) -> Result<ValueFunction> {
    let a = resolvent(mdp, pi)?;
    let rbar = expected_reward(mdp);
    let r_pi = DVector::from_iterator(
        mdp.n_states(),
        (0..mdp.n_states()).map(|s| dot(pi.row(s), rbar.row(s))),
    );
    Ok(ValueFunction(solve(a, r_pi)?.iter().copied().collect()))
}

/// `Q^π(s, a) = r̄(s, a) + γ Σ_{s'} T(s'|s, a) V^π(s')`.
pub fn exact_q(mdp: &TabularMdp, pi: &Policy) -> Result<QFunction> {
    let v = exact_v(mdp, pi)?;
    let mut q = expected_reward(mdp);
    let (ns, na, g) = (mdp.n_states(), mdp.n_actions(), mdp.gamma());
    let values = q.values_mut();
    for s in 0..ns {
        for a in 0..na {
            values[s * na + a] += g * dot(mdp.next_states(s, a), &v.0);
        }
    }
    Ok(q)
}

/// `A^π(s, a) = Q^π(s, a) − V^π(s)` from a precomputed `Q^π`.
pub fn advantage(q: &QFunction, pi: &Policy) -> QFunction {
    let v = q.state_values(pi);
    let na = q.n_actions();
    let values = q
        .as_flat()
        .iter()
        .enumerate()
        .map(|(i, x)| x - v.0[i / na])
        .collect();
    QFunction::from_flat(q.n_states(), na, values).expect("same shape as q")
}

/// `d^π = (1 − γ) d₀ᵀ (I − γ P^π)⁻¹`.
pub fn stationary_distribution(mdp: &TabularMdp, pi: &Policy) -> Result<StationaryDistribution> {
    let a = resolvent(mdp, pi)?.transpose();
    let b = DVector::from_iterator(
        mdp.n_states(),
        mdp.initial_distribution()
            .iter()
            .map(|p| (1.0 - mdp.gamma()) * p),
    );
    Ok(StationaryDistribution(solve(a, b)?.iter().copied().collect()))
}

/// Normalized return `J^π = Σ_s d^π(s) Σ_a π(a|s) r̄(s, a)`.
pub fn discounted_return(mdp: &TabularMdp, pi: &Policy) -> Result<f64> {
    let d = stationary_distribution(mdp, pi)?;
    let rbar = expected_reward(mdp);
    Ok((0..mdp.n_states())
        .map(|s| d.0[s] * dot(pi.row(s), rbar.row(s)))
        .sum())
}

/// Unnormalized return `d₀ᵀ V^π`.
pub fn unnormalized_return(mdp: &TabularMdp, pi: &Policy) -> Result<f64> {
    let v = exact_v(mdp, pi)?;
    Ok(dot(mdp.initial_distribution(), &v.0))
}

/// Expected undiscounted reward collected over `horizon` steps from `d₀`.
pub fn undiscounted_horizon_return(mdp: &TabularMdp, pi: &Policy, horizon: usize) -> Result<f64> {
    mdp.check_policy(pi)?;
    let rbar = expected_reward(mdp);
    let r_pi: Vec<f64> = (0..mdp.n_states())
        .map(|s| dot(pi.row(s), rbar.row(s)))
        .collect();
    let p = state_kernel(mdp, pi)?;
    let mut dist = DVector::from_column_slice(mdp.initial_distribution());
    let mut total = 0.0;
    for _ in 0..horizon {
        total += dot(dist.as_slice(), &r_pi);
        dist = p.tr_mul(&dist);
    }
    Ok(total)
}

/// Per-state and occupancy-weighted policy advantage of `pi_new` over `pi_base`.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyAdvantage {
    pub per_state: Vec<f64>,
    pub expected: f64,
}

/// `A(s) = Σ_a (π_new − π_base)(a|s) Q_base(s, a)` and its `d^{π_base}`-expectation.
pub fn policy_advantage(mdp: &TabularMdp, pi_new: &Policy, pi_base: &Policy) -> Result<PolicyAdvantage> {
    pi_new.same_shape(pi_base)?;
    let q = exact_q(mdp, pi_base)?;
    let d = stationary_distribution(mdp, pi_base)?;
    Ok(policy_advantage_from(&q, &d, pi_new, pi_base))
}

/// [`policy_advantage`] with `Q_base` and `d^{π_base}` already computed.
pub fn policy_advantage_from(
    q_base: &QFunction,
    d_base: &StationaryDistribution,
    pi_new: &Policy,
    pi_base: &Policy,
) -> PolicyAdvantage {
    let per_state: Vec<f64> = (0..q_base.n_states())
        .map(|s| {
            pi_new
                .row(s)
                .iter()
                .zip(pi_base.row(s))
                .zip(q_base.row(s))
                .map(|((n, b), q)| (n - b) * q)
                .sum()
        })
        .collect();
    let expected = dot(&d_base.0, &per_state);
    PolicyAdvantage {
        per_state,
        expected,
    }
}

/// Both sides of the performance-difference identity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PerformanceDifference {
    /// `J^{π_new} − J^{π_base}`.
    pub lhs: f64,
    /// `Σ_s d^{π_new}(s) Σ_a π_new(a|s) A^{π_base}(s, a)`.
    pub rhs: f64,
}

pub fn performance_difference(
    mdp: &TabularMdp,
    pi_new: &Policy,
    pi_base: &Policy,
) -> Result<PerformanceDifference> {
    pi_new.same_shape(pi_base)?;
    let lhs = discounted_return(mdp, pi_new)? - discounted_return(mdp, pi_base)?;
    let adv = advantage(&exact_q(mdp, pi_base)?, pi_base);
    let d_new = stationary_distribution(mdp, pi_new)?;
    let rhs = (0..mdp.n_states())
        .map(|s| d_new.0[s] * dot(pi_new.row(s), adv.row(s)))
        .sum();
    Ok(PerformanceDifference { lhs, rhs })
}
