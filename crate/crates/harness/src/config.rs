use std::path::{Path, PathBuf};

use cautious_core::envs::{GridworldConfig, PendulumConfig};
use serde::{Deserialize, Serialize};

use crate::algo::Algorithm;
use crate::error::HarnessError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Environment {
    Gridworld,
    Pendulum,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentSection {
    pub environment: Environment,
    pub algorithms: Vec<Algorithm>,
    pub trials: usize,
    pub seed: u64,
    pub iterations: usize,
    pub steps_per_iter: usize,
    pub out: Option<PathBuf>,
}

impl Default for ExperimentSection {
    fn default() -> Self {
        Self {
            environment: Environment::Gridworld,
            algorithms: vec![Algorithm::Cvi, Algorithm::Cpp],
            trials: 100,
            seed: 0,
            iterations: 30,
            steps_per_iter: 20,
            out: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RegularizationSection {
    pub tau: f64,
    pub sigma: f64,
    pub gamma: f64,
}

impl Default for RegularizationSection {
    fn default() -> Self {
        Self {
            tau: 0.1,
            sigma: 0.1,
            gamma: 0.95,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LfaSection {
    pub ridge: f64,
    /// Shrink toward the previous weights; on by default for the gridworld table.
    pub anchor: Option<bool>,
    pub init_scale: f64,
    pub n_theta: usize,
    pub n_speed: usize,
}

impl Default for LfaSection {
    fn default() -> Self {
        Self {
            ridge: 1e-6,
            anchor: None,
            init_scale: 0.01,
            n_theta: 11,
            n_speed: 11,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AdaptiveSection {
    pub rho1: f64,
    pub rho2: f64,
}

impl Default for AdaptiveSection {
    fn default() -> Self {
        Self {
            rho1: 0.99,
            rho2: 0.999,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BoundsSection {
    /// Number of random MDPs; zero checks the gridworld model instead.
    pub mdps: usize,
    pub max_states: usize,
    pub max_actions: usize,
    /// Evaluation depth `m`.
    pub depth: usize,
    /// Evaluation error budget feeding `B_K`.
    pub epsilon: f64,
}

impl Default for BoundsSection {
    fn default() -> Self {
        Self {
            mdps: 50,
            max_states: 10,
            max_actions: 4,
            depth: 1,
            epsilon: 0.0,
        }
    }
}

/// Everything a run needs, loadable from a sectioned TOML file.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub experiment: ExperimentSection,
    pub regularization: RegularizationSection,
    pub lfa: LfaSection,
    pub adaptive: AdaptiveSection,
    pub bounds: BoundsSection,
    pub gridworld: GridworldConfig,
    pub pendulum: PendulumConfig,
}

fn overlay(base: &mut toml::Table, top: toml::Table) {
    for (key, value) in top {
        match (base.get_mut(&key), value) {
            (Some(toml::Value::Table(b)), toml::Value::Table(t)) => overlay(b, t),
            (_, v) => {
                base.insert(key, v);
            }
        }
    }
}

impl ExperimentConfig {
    /// Defaults for one environment: the gridworld uses `γ = 0.95` and 30
    /// iterations of 20 steps, the pendulum `γ = 0.99` and 80 iterations of 500.
    pub fn for_environment(env: Environment) -> Self {
        let mut cfg = Self::default();
        cfg.experiment.environment = env;
        if env == Environment::Pendulum {
            cfg.regularization.gamma = 0.99;
            cfg.experiment.iterations = 80;
            cfg.experiment.steps_per_iter = 500;
            cfg.experiment.trials = 20;
        }
        cfg
    }

    /// Parses a config whose missing keys take the defaults of its
    /// `experiment.environment` (the gridworld when that key is absent too).
    pub fn from_toml_str(text: &str) -> Result<Self, HarnessError> {
        Self::from_toml_str_for(text, Environment::Gridworld)
    }

    /// Like [`Self::from_toml_str`] with `fallback` used when the file names
    /// no environment.
    pub fn from_toml_str_for(text: &str, fallback: Environment) -> Result<Self, HarnessError> {
        let bad = |e: &dyn std::fmt::Display| HarnessError::Config(e.to_string());
        let user: toml::Table = toml::from_str(text).map_err(|e| bad(&e))?;
        let env = match user.get("experiment").and_then(|e| e.get("environment")) {
            Some(v) => v.clone().try_into().map_err(|e| bad(&e))?,
            None => fallback,
        };
        let mut merged = match toml::Value::try_from(Self::for_environment(env)).map_err(|e| bad(&e))? {
            toml::Value::Table(t) => t,
            _ => unreachable!("a struct serializes to a table"),
        };
        overlay(&mut merged, user);
        let cfg: Self = merged.try_into().map_err(|e| bad(&e))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        Self::load_for(path, Environment::Gridworld)
    }

    pub fn load_for(path: &Path, fallback: Environment) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml_str_for(&text, fallback)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config is always serializable")
    }

    pub fn anchor(&self) -> bool {
        self.lfa
            .anchor
            .unwrap_or(self.experiment.environment == Environment::Gridworld)
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let e = &self.experiment;
        if e.trials == 0 {
            return Err(HarnessError::Config("trials must be at least 1".into()));
        }
        if e.iterations < 2 {
            return Err(HarnessError::Config("iterations must be at least 2".into()));
        }
        if e.steps_per_iter == 0 {
            return Err(HarnessError::Config("steps_per_iter must be positive".into()));
        }
        if e.algorithms.is_empty() {
            return Err(HarnessError::Config("no algorithm selected".into()));
        }
        let r = &self.regularization;
        cautious_core::regularized::RegularizationParams::new(r.tau, r.sigma)?;
        if !(r.gamma > 0.0 && r.gamma < 1.0) {
            return Err(HarnessError::Config(format!("gamma {} is not in (0, 1)", r.gamma)));
        }
        cautious_core::monotonic::AdaptiveState::new(self.adaptive.rho1, self.adaptive.rho2)?;
        match e.environment {
            Environment::Gridworld => self.gridworld.validate()?,
            Environment::Pendulum => self.pendulum.validate()?,
        }
        if self.bounds.depth == 0 {
            return Err(HarnessError::Config("bounds depth must be positive".into()));
        }
        if self.bounds.max_states == 0 || self.bounds.max_actions == 0 {
            return Err(HarnessError::Config("bounds sizes must be positive".into()));
        }
        Ok(())
    }
}
