use std::f64::consts::PI;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{Environment, Transition};
use crate::error::{domain, Result};

/// `theta = 0` is upright; the reward peaks there.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PendulumState {
    pub theta: f64,
    pub theta_dot: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PendulumConfig {
    pub length: f64,
    pub mass: f64,
    pub torques: Vec<f64>,
    /// Reward scale `z` in `−(1/z)(aθ² + bθ̇²)`.
    pub reward_scale: f64,
    pub angle_weight: f64,
    pub velocity_weight: f64,
    pub episode_len: usize,
    pub dt: f64,
    pub gravity: f64,
    pub max_speed: f64,
}

impl Default for PendulumConfig {
    fn default() -> Self {
        Self {
            length: 1.5,
            mass: 1.0,
            torques: vec![-2.0, 0.0, 2.0],
            reward_scale: 10.0,
            angle_weight: 1.0,
            velocity_weight: 0.01,
            episode_len: 500,
            dt: 0.05,
            gravity: 9.8,
            max_speed: 8.0,
        }
    }
}

impl PendulumConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("length", self.length),
            ("mass", self.mass),
            ("reward_scale", self.reward_scale),
            ("dt", self.dt),
            ("gravity", self.gravity),
            ("max_speed", self.max_speed),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(domain(name, format!("{v} must be positive and finite")));
            }
        }
        if self.torques.is_empty() || self.torques.iter().any(|t| !t.is_finite()) {
            return Err(domain("torques", "need at least one finite torque"));
        }
        if self.angle_weight < 0.0 || self.velocity_weight < 0.0 {
            return Err(domain("reward weights", "must be non-negative"));
        }
        Ok(())
    }
}

/// Maps an angle into `(−π, π]`.
pub fn wrap_angle(theta: f64) -> f64 {
    let w = (theta + PI).rem_euclid(2.0 * PI) - PI;
    if w <= -PI {
        w + 2.0 * PI
    } else {
        w
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Pendulum {
    pub config: PendulumConfig,
}

impl Pendulum {
    pub fn new(config: PendulumConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self { config })
    }

    pub fn reward(&self, s: PendulumState) -> f64 {
        let c = &self.config;
        -(c.angle_weight * s.theta * s.theta + c.velocity_weight * s.theta_dot * s.theta_dot)
            / c.reward_scale
    }

    /// Kinetic plus potential energy, with the potential highest upright.
    pub fn energy(&self, s: PendulumState) -> f64 {
        let c = &self.config;
        let inertia = c.mass * c.length * c.length;
        0.5 * inertia * s.theta_dot * s.theta_dot + c.mass * c.gravity * c.length * s.theta.cos()
    }

    /// Semi-implicit Euler: velocity first, then position with the new velocity.
    pub fn integrate(&self, s: PendulumState, torque: f64) -> PendulumState {
        let c = &self.config;
        let accel = c.gravity / c.length * s.theta.sin() + torque / (c.mass * c.length * c.length);
        let theta_dot = (s.theta_dot + c.dt * accel).clamp(-c.max_speed, c.max_speed);
        PendulumState {
            theta: wrap_angle(s.theta + c.dt * theta_dot),
            theta_dot,
        }
    }
}

impl Environment for Pendulum {
    type State = PendulumState;

    fn n_actions(&self) -> usize {
        self.config.torques.len()
    }

    /// Hanging straight down at rest.
    fn reset(&self) -> PendulumState {
        PendulumState {
            theta: PI,
            theta_dot: 0.0,
        }
    }

    fn step<R: Rng + ?Sized>(&self, state: PendulumState, action: usize, _rng: &mut R) -> Transition<PendulumState> {
        let next = self.integrate(state, self.config.torques[action]);
        Transition {
            state,
            action,
            reward: self.reward(next),
            next_state: next,
            terminal: false,
        }
    }
}
