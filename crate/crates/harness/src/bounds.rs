use cautious_core::exec::trial_rngs;
use cautious_core::mdp::{random_mdp, TabularMdp};
use cautious_core::monotonic::{cpp_iteration, CppState};
use cautious_core::regularized::RegularizationParams;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::algo::Algorithm;
use crate::config::ExperimentConfig;
use crate::error::HarnessError;
use crate::run::{Backend, TV_SLACK};

/// A step with `Â ≥ 0` may lose at most this much return before it counts.
pub const IMPROVEMENT_SLACK: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundsRow {
    pub mdp: usize,
    pub iteration: usize,
    pub tv_realized: f64,
    pub tv_bound: f64,
    pub expected_advantage: f64,
    pub zeta: f64,
    /// `J(π̃_{K+1}) − J(π̃_K)` with the normalized return.
    pub improvement: f64,
    pub lower_bound: f64,
}

impl BoundsRow {
    pub fn tv_violated(&self) -> bool {
        self.tv_realized > self.tv_bound + TV_SLACK
    }

    pub fn improvement_violated(&self) -> bool {
        self.expected_advantage >= 0.0 && self.improvement < -IMPROVEMENT_SLACK
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundsReport {
    pub rows: Vec<BoundsRow>,
    pub tv_violations: usize,
    pub improvement_violations: usize,
}

/// Exact tabular runs of the chosen rule on random MDPs (or on the gridworld
/// model when `bounds.mdps = 0`), checking the KL-derived TV bound and the
/// sign of every improvement with a non-negative expected advantage.
pub fn bounds_check(
    config: &ExperimentConfig,
    algorithm: Algorithm,
    backend: Backend,
) -> Result<BoundsReport, HarnessError> {
    config.validate()?;
    let b = &config.bounds;
    let gamma = config.regularization.gamma;
    let instances = b.mdps.max(1);
    let per_mdp = backend
        .map(instances, |i| -> Result<Vec<BoundsRow>, HarnessError> {
            let mdp = if b.mdps == 0 {
                config.gridworld.to_tabular(gamma)?
            } else {
                sampled_mdp(config, i)?
            };
            check_one(config, algorithm, &mdp, i)
        })
        .into_iter()
        .collect::<Result<Vec<_>, _>>()?;
    let rows: Vec<BoundsRow> = per_mdp.into_iter().flatten().collect();
    Ok(BoundsReport {
        tv_violations: rows.iter().filter(|r| r.tv_violated()).count(),
        improvement_violations: rows.iter().filter(|r| r.improvement_violated()).count(),
        rows,
    })
}

/// Instance `i`: sizes drawn uniformly from `2..=max`, contents from the seed.
fn sampled_mdp(config: &ExperimentConfig, i: usize) -> Result<TabularMdp, HarnessError> {
    let b = &config.bounds;
    let (mut rng, _) = trial_rngs(config.experiment.seed, i);
    let ns = rng.random_range(2..=b.max_states.max(2));
    let na = rng.random_range(2..=b.max_actions.max(2));
    let seed = rng.random();
    Ok(random_mdp(ns, na, config.regularization.gamma, seed)?)
}

fn check_one(
    config: &ExperimentConfig,
    algorithm: Algorithm,
    mdp: &TabularMdp,
    index: usize,
) -> Result<Vec<BoundsRow>, HarnessError> {
    let reg = &config.regularization;
    let params = RegularizationParams::new(reg.tau, reg.sigma)?;
    let rule = algorithm.rule(&config.adaptive, mdp.reward_bound())?;
    let mut state = CppState::new(mdp, params, config.bounds.depth, rule)?;
    state.epsilon = config.bounds.epsilon;
    let mut rows = Vec::with_capacity(config.experiment.iterations);
    for _ in 0..config.experiment.iterations {
        let (next, rec) = cpp_iteration(mdp, &state)?;
        rows.push(BoundsRow {
            mdp: index,
            iteration: rec.k,
            tv_realized: rec.tv_realized,
            tv_bound: rec.tv_bound,
            expected_advantage: rec.expected_advantage,
            zeta: rec.zeta,
            improvement: rec.improvement(),
            lower_bound: rec.lower_bound,
        });
        state = next;
    }
    Ok(rows)
}
