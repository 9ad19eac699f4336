use std::f64::consts::PI;

use crate::envs::{PendulumConfig, PendulumState};
use crate::error::{domain, Result};

/// State-action feature map `φ(s, a)`.
pub trait Features<S> {
    fn dim(&self) -> usize;

    fn n_actions(&self) -> usize;

    fn write(&self, state: &S, action: usize, out: &mut [f64]);

    fn features(&self, state: &S, action: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        self.write(state, action, &mut out);
        out
    }
}

/// Gaussian bumps `exp(−‖x − c_i‖²/σ²)`. Coordinates with a period use the
/// wrapped difference.
#[derive(Debug, Clone, PartialEq)]
pub struct RbfFeatureMap {
    centers: Vec<Vec<f64>>,
    width: f64,
    periods: Vec<Option<f64>>,
}

impl RbfFeatureMap {
    pub fn new(centers: Vec<Vec<f64>>, width: f64, periods: Vec<Option<f64>>) -> Result<Self> {
        if !(width > 0.0 && width.is_finite()) {
            return Err(domain("rbf width", format!("{width} must be positive")));
        }
        if centers.is_empty() || centers.iter().any(|c| c.len() != periods.len()) {
            return Err(domain("rbf centers", "need at least one center of the input dimension"));
        }
        Ok(Self {
            centers,
            width,
            periods,
        })
    }

    pub fn dim(&self) -> usize {
        self.centers.len()
    }

    pub fn width(&self) -> f64 {
        self.width
    }

    pub fn centers(&self) -> &[Vec<f64>] {
        &self.centers
    }

    pub fn eval(&self, x: &[f64], out: &mut [f64]) {
        let inv = 1.0 / (self.width * self.width);
        for (o, c) in out.iter_mut().zip(&self.centers) {
            let mut d2 = 0.0;
            for ((xi, ci), period) in x.iter().zip(c).zip(&self.periods) {
                let mut d = xi - ci;
                if let Some(p) = period {
                    d -= p * (d / p).round();
                }
                d2 += d * d;
            }
            *o = (-d2 * inv).exp();
        }
    }
}

/// Pendulum features on `(θ, θ̇, a)` measured in units of the grid spacing, so
/// the width equals one spacing. Actions sit three widths apart, which keeps
/// the per-action blocks nearly independent while every entry stays positive.
#[derive(Debug, Clone, PartialEq)]
pub struct PendulumFeatures {
    rbf: RbfFeatureMap,
    theta_step: f64,
    speed_step: f64,
    action_gap: f64,
    n_actions: usize,
    n_theta: usize,
    n_speed: usize,
}

impl PendulumFeatures {
    pub fn grid(config: &PendulumConfig, n_theta: usize, n_speed: usize) -> Result<Self> {
        if n_theta == 0 || n_speed < 2 {
            return Err(domain("rbf grid", "need at least one angle and two speed centers"));
        }
        let theta_step = 2.0 * PI / n_theta as f64;
        let speed_step = 2.0 * config.max_speed / (n_speed - 1) as f64;
        let action_gap = 3.0;
        let n_actions = config.torques.len();
        let mut centers = Vec::with_capacity(n_theta * n_speed * n_actions);
        for a in 0..n_actions {
            for i in 0..n_theta {
                for j in 0..n_speed {
                    let theta = -PI + (i as f64 + 0.5) * theta_step;
                    let speed = -config.max_speed + j as f64 * speed_step;
                    centers.push(vec![theta / theta_step, speed / speed_step, a as f64 * action_gap]);
                }
            }
        }
        let rbf = RbfFeatureMap::new(centers, 1.0, vec![Some(n_theta as f64), None, None])?;
        Ok(Self {
            rbf,
            theta_step,
            speed_step,
            action_gap,
            n_actions,
            n_theta,
            n_speed,
        })
    }

    pub fn rbf(&self) -> &RbfFeatureMap {
        &self.rbf
    }

    pub fn embed(&self, s: &PendulumState, action: usize) -> [f64; 3] {
        [
            s.theta / self.theta_step,
            s.theta_dot / self.speed_step,
            action as f64 * self.action_gap,
        ]
    }
}

impl Features<PendulumState> for PendulumFeatures {
    fn dim(&self) -> usize {
        self.rbf.dim()
    }

    fn n_actions(&self) -> usize {
        self.n_actions
    }

    /// The squared distance splits per coordinate, so each entry is a product
    /// of one factor per axis and only `n_θ + n_θ̇ + |A|` exponentials are needed.
    fn write(&self, state: &PendulumState, action: usize, out: &mut [f64]) {
        let [x, v, u] = self.embed(state, action);
        let period = self.n_theta as f64;
        let theta_f: Vec<f64> = (0..self.n_theta)
            .map(|i| {
                let mut d = x - (i as f64 + 0.5 - period / 2.0);
                d -= period * (d / period).round();
                (-d * d).exp()
            })
            .collect();
        let half = (self.n_speed - 1) as f64 / 2.0;
        let speed_f: Vec<f64> = (0..self.n_speed)
            .map(|j| {
                let d = v - (j as f64 - half);
                (-d * d).exp()
            })
            .collect();
        let mut k = 0;
        for a in 0..self.n_actions {
            let d = u - a as f64 * self.action_gap;
            let af = (-d * d).exp();
            for t in &theta_f {
                let ta = t * af;
                for sp in &speed_f {
                    out[k] = ta * sp;
                    k += 1;
                }
            }
        }
    }
}

/// One-hot indicator of the pair `(s, a)`; a linear Q over it is a table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TabularFeatures {
    pub n_states: usize,
    pub n_actions: usize,
}

impl Features<usize> for TabularFeatures {
    fn dim(&self) -> usize {
        self.n_states * self.n_actions
    }

    fn n_actions(&self) -> usize {
        self.n_actions
    }

    fn write(&self, state: &usize, action: usize, out: &mut [f64]) {
        out.fill(0.0);
        out[state * self.n_actions + action] = 1.0;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn center_and_unit_distance() {
        let map = RbfFeatureMap::new(vec![vec![0.0, 0.0], vec![1.0, 0.0]], 2.0, vec![None, None]).unwrap();
        let mut out = [0.0; 2];
        map.eval(&[0.0, 0.0], &mut out);
        assert_eq!(out[0], 1.0);
        map.eval(&[1.0, 2.0], &mut out);
        assert!((out[1] - (-1f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn periodic_coordinate_wraps() {
        let map = RbfFeatureMap::new(vec![vec![0.0]], 1.0, vec![Some(10.0)]).unwrap();
        let mut a = [0.0];
        let mut b = [0.0];
        map.eval(&[9.5], &mut a);
        map.eval(&[0.5], &mut b);
        assert!((a[0] - b[0]).abs() < 1e-15);
    }

    #[test]
    fn bad_maps_rejected() {
        assert!(RbfFeatureMap::new(vec![vec![0.0]], 0.0, vec![None]).is_err());
        assert!(RbfFeatureMap::new(vec![], 1.0, vec![None]).is_err());
        assert!(RbfFeatureMap::new(vec![vec![0.0, 1.0]], 1.0, vec![None]).is_err());
    }

    #[test]
    fn pendulum_grid_layout() {
        let f = PendulumFeatures::grid(&PendulumConfig::default(), 11, 11).unwrap();
        assert_eq!(f.dim(), 363);
        let phi = f.features(&PendulumState { theta: 0.0, theta_dot: 0.0 }, 1);
        assert!(phi.iter().all(|&x| x > 0.0 && x <= 1.0));
        // θ = 0 and θ̇ = 0 sit on a center of the middle action block.
        assert!((phi.iter().cloned().fold(0.0, f64::max) - 1.0).abs() < 1e-12);
        let far = f.features(&PendulumState { theta: PI, theta_dot: -8.0 }, 0);
        assert!(far.iter().all(|&x| x > 0.0));
    }

    #[test]
    fn separable_evaluation_matches_generic_map() {
        let f = PendulumFeatures::grid(&PendulumConfig::default(), 11, 11).unwrap();
        for (theta, speed) in [(0.3, -2.0), (PI, 7.9), (-3.0, 0.0), (1.7, -8.0)] {
            let s = PendulumState { theta, theta_dot: speed };
            for a in 0..3 {
                let mut generic = vec![0.0; f.dim()];
                f.rbf().eval(&f.embed(&s, a), &mut generic);
                let fast = f.features(&s, a);
                for (g, h) in generic.iter().zip(&fast) {
                    assert!((g - h).abs() <= 1e-12 * g.abs().max(1e-300), "{g} vs {h}");
                }
            }
        }
    }

    #[test]
    fn one_hot() {
        let f = TabularFeatures { n_states: 3, n_actions: 2 };
        assert_eq!(f.features(&1, 1), vec![0.0, 0.0, 0.0, 1.0, 0.0, 0.0]);
    }
}
