use std::collections::BTreeMap;
use std::path::Path;

use cautious_core::envs::{Environment as _, Gridworld, Pendulum};
use cautious_core::exec::{map_trials_sequential, trial_rngs};
use cautious_core::lfa::{
    linear_cpp_iteration, Features, LinearCppConfig, LinearCppRecord, LinearCppState, MixturePolicy,
    PendulumFeatures, TabularFeatures,
};
use cautious_core::mdp::{undiscounted_horizon_return, Policy, TabularMdp};
use cautious_core::metrics::{aggregate, oscillation, LearningCurve, OscillationReport, Summary};
use cautious_core::regularized::RegularizationParams;
use serde::{Deserialize, Serialize};

use crate::algo::Algorithm;
use crate::config::{Environment, ExperimentConfig};
use crate::error::HarnessError;

/// Realized TV may exceed the bound by this much before it counts as a violation.
pub const TV_SLACK: f64 = 1e-10;

/// How trials are scheduled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Backend {
    #[cfg_attr(not(feature = "parallel"), default)]
    Sequential,
    #[cfg(feature = "parallel")]
    #[default]
    Parallel,
}

impl Backend {
    pub fn map<T, F>(self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        match self {
            Self::Sequential => map_trials_sequential(n, f),
            #[cfg(feature = "parallel")]
            Self::Parallel => cautious_core::exec::map_trials_parallel(n, f),
        }
    }
}

/// One CSV line.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IterationRow {
    pub trial: usize,
    pub iteration: usize,
    pub cumulative_reward: f64,
    pub zeta: f64,
    pub expected_advantage: f64,
    pub tv_realized: f64,
    pub tv_bound: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialResult {
    pub curve: LearningCurve,
    pub oscillation: OscillationReport,
    pub rows: Vec<IterationRow>,
    pub violations: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AlgorithmResult {
    pub algorithm: Algorithm,
    pub trials: Vec<TrialResult>,
    pub summary: Summary,
    pub violations: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub environment: Environment,
    pub results: Vec<AlgorithmResult>,
}

impl RunResult {
    pub fn get(&self, algorithm: Algorithm) -> Option<&AlgorithmResult> {
        self.results.iter().find(|r| r.algorithm == algorithm)
    }
}

/// JSON entry per algorithm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryEntry {
    pub mean_return_curve: Vec<f64>,
    pub std_return_curve: Vec<f64>,
    pub mean_zeta_curve: Vec<f64>,
    pub osc_inf_mean: f64,
    pub osc_l2_mean: f64,
    pub violations: usize,
}

/// Runs every configured algorithm and, when an output directory is set,
/// writes `curves_<algo>.csv` and `summary.json` there.
pub fn run(config: &ExperimentConfig) -> Result<RunResult, HarnessError> {
    run_with(config, Backend::default())
}

pub fn run_with(config: &ExperimentConfig, backend: Backend) -> Result<RunResult, HarnessError> {
    config.validate()?;
    let results = config
        .experiment
        .algorithms
        .iter()
        .map(|&algo| run_algorithm(config, algo, backend))
        .collect::<Result<Vec<_>, _>>()?;
    let result = RunResult {
        environment: config.experiment.environment,
        results,
    };
    if let Some(dir) = &config.experiment.out {
        write_outputs(&result, dir)?;
    }
    Ok(result)
}

fn run_algorithm(
    config: &ExperimentConfig,
    algorithm: Algorithm,
    backend: Backend,
) -> Result<AlgorithmResult, HarnessError> {
    let trials = backend
        .map(config.experiment.trials, |trial| run_trial(config, algorithm, trial))
        .into_iter()
        .collect::<Result<Vec<_>, _>>()?;
    let curves: Vec<LearningCurve> = trials.iter().map(|t| t.curve.clone()).collect();
    let summary = aggregate(&curves)?;
    let violations = trials.iter().map(|t| t.violations).sum();
    Ok(AlgorithmResult {
        algorithm,
        trials,
        summary,
        violations,
    })
}

/// One independent trial, seeded by `(seed, trial)`.
pub fn run_trial(
    config: &ExperimentConfig,
    algorithm: Algorithm,
    trial: usize,
) -> Result<TrialResult, HarnessError> {
    let reg = &config.regularization;
    let params = RegularizationParams::new(reg.tau, reg.sigma)?;
    let mut lfa = LinearCppConfig::new(params, reg.gamma, config.experiment.steps_per_iter);
    lfa.ridge = config.lfa.ridge;
    lfa.anchor = config.anchor();
    lfa.init_scale = config.lfa.init_scale;
    let (mut env_rng, mut algo_rng) = trial_rngs(config.experiment.seed, trial);

    let mut curve = LearningCurve::default();
    let mut rows = Vec::with_capacity(config.experiment.iterations);
    let mut record = |ret: f64, rec: &LinearCppRecord| {
        curve.push(ret, rec.zeta, rec.expected_advantage);
        rows.push(IterationRow {
            trial,
            iteration: rec.k,
            cumulative_reward: ret,
            zeta: rec.zeta,
            expected_advantage: rec.expected_advantage,
            tv_realized: rec.tv_realized,
            tv_bound: rec.tv_bound,
        });
    };

    match config.experiment.environment {
        Environment::Gridworld => {
            let gw = &config.gridworld;
            let env = Gridworld::new(gw.clone(), reg.gamma)?;
            lfa.steps_per_iter = lfa.steps_per_iter.min(gw.episode_cap);
            let features = TabularFeatures {
                n_states: env.n_states(),
                n_actions: env.n_actions(),
            };
            lfa.reward_bound = env.mdp().reward_bound();
            let rule = algorithm.rule(&config.adaptive, 1.0)?;
            let mut state = LinearCppState::new(features.dim(), rule, lfa.init_scale, &mut algo_rng);
            for _ in 0..config.experiment.iterations {
                let ret = expected_return(env.mdp(), &features, &state.behavior, gw.episode_cap)?;
                let (next, rec) = linear_cpp_iteration(&env, &features, &lfa, &state, &mut env_rng, &mut algo_rng)?;
                record(ret, &rec);
                state = next;
            }
        }
        Environment::Pendulum => {
            let pc = &config.pendulum;
            let env = Pendulum::new(pc.clone())?;
            lfa.steps_per_iter = lfa.steps_per_iter.min(pc.episode_len);
            let features = PendulumFeatures::grid(pc, config.lfa.n_theta, config.lfa.n_speed)?;
            lfa.reward_bound = (pc.angle_weight * std::f64::consts::PI.powi(2)
                + pc.velocity_weight * pc.max_speed.powi(2))
                / pc.reward_scale;
            let rule = algorithm.rule(&config.adaptive, 1.0)?;
            let mut state = LinearCppState::new(features.dim(), rule, lfa.init_scale, &mut algo_rng);
            for _ in 0..config.experiment.iterations {
                let (next, rec) = linear_cpp_iteration(&env, &features, &lfa, &state, &mut env_rng, &mut algo_rng)?;
                record(rec.episode_return, &rec);
                state = next;
            }
        }
    }

    let oscillation = oscillation(&curve.returns)?;
    let violations = rows.iter().filter(|r| r.tv_realized > r.tv_bound + TV_SLACK).count();
    Ok(TrialResult {
        curve,
        oscillation,
        rows,
        violations,
    })
}

/// Exact expected undiscounted return of a behavior policy over one episode.
fn expected_return(
    mdp: &TabularMdp,
    features: &TabularFeatures,
    behavior: &MixturePolicy,
    horizon: usize,
) -> Result<f64, HarnessError> {
    let rows: Vec<Vec<f64>> = (0..mdp.n_states()).map(|s| behavior.probs(features, &s)).collect();
    let table = Policy::from_rows(&rows)?;
    Ok(undiscounted_horizon_return(mdp, &table, horizon)?)
}

fn file_stem(algorithm: Algorithm) -> String {
    algorithm.to_string().replace(':', "_")
}

pub fn write_outputs(result: &RunResult, dir: &Path) -> Result<(), HarnessError> {
    std::fs::create_dir_all(dir)?;
    let mut summary = BTreeMap::new();
    for r in &result.results {
        let mut w = csv::Writer::from_path(dir.join(format!("curves_{}.csv", file_stem(r.algorithm))))?;
        for t in &r.trials {
            for row in &t.rows {
                w.serialize(row)?;
            }
        }
        w.flush()?;
        summary.insert(
            r.algorithm.to_string(),
            SummaryEntry {
                mean_return_curve: r.summary.mean_return_curve.clone(),
                std_return_curve: r.summary.std_return_curve.clone(),
                mean_zeta_curve: r.summary.mean_zeta_curve.clone(),
                osc_inf_mean: r.summary.osc_inf_mean,
                osc_l2_mean: r.summary.osc_l2_mean,
                violations: r.violations,
            },
        );
    }
    let file = std::fs::File::create(dir.join("summary.json"))?;
    serde_json::to_writer_pretty(file, &summary)?;
    Ok(())
}
