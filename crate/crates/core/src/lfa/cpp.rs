use nalgebra::DVector;
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;

use super::{estimate_advantages, fit, Features, LinearQ, LogitPolicy, MixturePolicy, OnPolicyBuffer};
use crate::envs::Environment;
use crate::error::{domain, Result};
use crate::monotonic::{compute_c_k, tv_bound, CoefficientRule, ZetaInputs};
use crate::regularized::RegularizationParams;

#[derive(Debug, Clone, PartialEq)]
pub struct LinearCppConfig {
    pub params: RegularizationParams,
    pub gamma: f64,
    /// Transitions collected per iteration; an episode ending earlier stops collection.
    pub steps_per_iter: usize,
    pub ridge: f64,
    /// Shrink toward the previous weights instead of toward zero, so features
    /// absent from the batch keep their old values.
    pub anchor: bool,
    /// Half-width of the uniform draw for the initial weights.
    pub init_scale: f64,
    /// Reward bound `r_max`; advantages are divided by it before the
    /// coefficient rule sees them, so rules assume rewards in `[−1, 1]`.
    pub reward_bound: f64,
}

impl LinearCppConfig {
    pub fn new(params: RegularizationParams, gamma: f64, steps_per_iter: usize) -> Self {
        Self {
            params,
            gamma,
            steps_per_iter,
            ridge: 1e-6,
            anchor: false,
            init_scale: 0.01,
            reward_bound: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return Err(domain("gamma", format!("{} is not in (0, 1)", self.gamma)));
        }
        if self.steps_per_iter == 0 {
            return Err(domain("steps_per_iter", "must be positive"));
        }
        if !(self.reward_bound > 0.0 && self.reward_bound.is_finite()) {
            return Err(domain("reward_bound", format!("{} must be positive", self.reward_bound)));
        }
        if self.ridge.is_nan() || self.ridge < 0.0 {
            return Err(domain("ridge", format!("{} must be non-negative", self.ridge)));
        }
        Ok(())
    }
}

/// State of the linear cautious loop. The Boltzmann chain `π_K`
/// (`policy`) drives learning; `behavior` only collects samples.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearCppState {
    /// Index of the next iteration, starting at 1.
    pub k: usize,
    /// `Q_K`.
    pub q: LinearQ,
    /// `π_K` with logits `ψ_K = αψ_{K−1} + βθ_{K−1}`.
    pub policy: LogitPolicy,
    pub behavior: MixturePolicy,
    pub rule: CoefficientRule,
}

impl LinearCppState {
    /// Random small weights and a uniform initial policy.
    pub fn new<R: Rng + ?Sized>(dim: usize, rule: CoefficientRule, init_scale: f64, rng: &mut R) -> Self {
        let theta = DVector::from_fn(dim, |_, _| {
            if init_scale > 0.0 {
                rng.random_range(-init_scale..=init_scale)
            } else {
                0.0
            }
        });
        let policy = LogitPolicy::uniform(dim);
        Self {
            k: 1,
            q: LinearQ { theta },
            behavior: MixturePolicy::pure(policy.clone()),
            policy,
            rule,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearCppRecord {
    pub k: usize,
    /// Undiscounted reward of the episode collected this iteration.
    pub episode_return: f64,
    pub steps: usize,
    pub zeta: f64,
    pub expected_advantage: f64,
    pub advantage_min: f64,
    pub c_k: f64,
    /// Largest `TV(π_{K+1}, π_K)` over the visited states.
    pub tv_realized: f64,
    pub tv_bound: f64,
}

/// Collects one batch with the behavior policy.
pub fn collect<E, F, R1, R2>(
    env: &E,
    features: &F,
    behavior: &MixturePolicy,
    steps: usize,
    env_rng: &mut R1,
    algo_rng: &mut R2,
) -> OnPolicyBuffer<E::State>
where
    E: Environment,
    F: Features<E::State>,
    R1: Rng + ?Sized,
    R2: Rng + ?Sized,
{
    let mut buffer = OnPolicyBuffer::new(steps);
    let mut s = env.reset();
    while !buffer.is_full() {
        let probs = behavior.probs(features, &s);
        let a = WeightedIndex::new(&probs)
            .expect("policy rows are valid distributions")
            .sample(algo_rng);
        let t = env.step(s, a, env_rng);
        buffer.push(t);
        if t.terminal {
            break;
        }
        s = t.next_state;
    }
    buffer
}

pub fn linear_cpp_iteration<E, F, R1, R2>(
    env: &E,
    features: &F,
    config: &LinearCppConfig,
    state: &LinearCppState,
    env_rng: &mut R1,
    algo_rng: &mut R2,
) -> Result<(LinearCppState, LinearCppRecord)>
where
    E: Environment,
    F: Features<E::State>,
    R1: Rng + ?Sized,
    R2: Rng + ?Sized,
{
    let buffer = collect(env, features, &state.behavior, config.steps_per_iter, env_rng, algo_rng);
    let episode_return = buffer.transitions().iter().map(|t| t.reward).sum();

    let p = &config.params;
    let next = LogitPolicy {
        psi: &state.policy.psi * p.alpha() + &state.q.theta * p.beta(),
    };
    let est = estimate_advantages(&state.q, features, &buffer, &next, &state.policy)?;
    let c_k = compute_c_k(p, config.gamma, state.k)?;
    let mut rule = state.rule;
    let r = config.reward_bound;
    let zeta = rule.zeta(&ZetaInputs {
        expected_advantage: est.mean / r,
        advantage_min: est.min / r,
        gamma: config.gamma,
        c_k,
        delta: est.delta,
        delta_a: est.delta_a / r,
    })?;

    let prior = config.anchor.then_some(&state.q);
    let q = fit(features, &buffer, &next, &state.q, config.gamma, config.ridge, prior)?;

    let record = LinearCppRecord {
        k: state.k,
        episode_return,
        steps: buffer.len(),
        zeta,
        expected_advantage: est.mean,
        advantage_min: est.min,
        c_k,
        tv_realized: est.max_tv,
        tv_bound: tv_bound(0.0, c_k),
    };
    let behavior = MixturePolicy {
        zeta,
        new: next.clone(),
        old: state.policy.clone(),
    };
    let state = LinearCppState {
        k: state.k + 1,
        q,
        policy: next,
        behavior,
        rule,
    };
    Ok((state, record))
}
