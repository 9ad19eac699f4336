use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{Environment, Transition};
use crate::error::{domain, Result};
use crate::mdp::TabularMdp;

/// Compass moves; the discriminant is the action index.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GridAction {
    Up = 0,
    Right = 1,
    Down = 2,
    Left = 3,
}

impl GridAction {
    pub const ALL: [GridAction; 4] = [Self::Up, Self::Right, Self::Down, Self::Left];

    fn delta(self) -> (i64, i64) {
        match self {
            Self::Up => (-1, 0),
            Self::Right => (0, 1),
            Self::Down => (1, 0),
            Self::Left => (0, -1),
        }
    }
}

/// Cells are `(row, col)` with `(0, 0)` the top-left corner.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GridworldConfig {
    pub width: usize,
    pub height: usize,
    pub start: (usize, usize),
    pub goal: (usize, usize),
    pub danger: Vec<(usize, usize)>,
    /// Probability that the intended move is the one executed.
    pub success_prob: f64,
    pub step_cost: f64,
    pub goal_reward: f64,
    pub danger_reward: f64,
    pub episode_cap: usize,
}

impl Default for GridworldConfig {
    fn default() -> Self {
        Self {
            width: 5,
            height: 5,
            start: (0, 0),
            goal: (4, 4),
            danger: vec![(2, 2), (2, 3)],
            success_prob: 0.9,
            step_cost: -0.1,
            goal_reward: 1.0,
            danger_reward: -1.0,
            episode_cap: 20,
        }
    }
}

impl GridworldConfig {
    pub fn validate(&self) -> Result<()> {
        if self.width == 0 || self.height == 0 {
            return Err(domain("grid size", "width and height must be positive"));
        }
        if !(self.success_prob > 0.0 && self.success_prob <= 1.0) {
            return Err(domain("success_prob", format!("{} is not in (0, 1]", self.success_prob)));
        }
        let mut special = vec![self.start, self.goal];
        special.extend(&self.danger);
        for (i, &(r, c)) in special.iter().enumerate() {
            if r >= self.height || c >= self.width {
                return Err(domain("cell", format!("({r}, {c}) is off the grid")));
            }
            if special[..i].contains(&(r, c)) {
                return Err(domain("cell", format!("({r}, {c}) is listed twice")));
            }
        }
        Ok(())
    }

    pub fn n_cells(&self) -> usize {
        self.width * self.height
    }

    pub fn cell_index(&self, (r, c): (usize, usize)) -> usize {
        r * self.width + c
    }

    /// Index of the absorbing state reached after the goal.
    pub fn terminal_index(&self) -> usize {
        self.n_cells()
    }

    fn neighbor(&self, (r, c): (usize, usize), a: GridAction) -> (usize, usize) {
        let (dr, dc) = a.delta();
        let (nr, nc) = (r as i64 + dr, c as i64 + dc);
        if nr < 0 || nc < 0 || nr >= self.height as i64 || nc >= self.width as i64 {
            (r, c)
        } else {
            (nr as usize, nc as usize)
        }
    }

    fn entry_reward(&self, cell: (usize, usize)) -> f64 {
        let bonus = if cell == self.goal {
            self.goal_reward
        } else if self.danger.contains(&cell) {
            self.danger_reward
        } else {
            0.0
        };
        self.step_cost + bonus
    }

    /// Exact model: every cell plus one absorbing terminal. The goal moves to
    /// the terminal with reward 0 whatever the action.
    pub fn to_tabular(&self, gamma: f64) -> Result<TabularMdp> {
        self.validate()?;
        let ns = self.n_cells() + 1;
        let na = GridAction::ALL.len();
        let term = self.terminal_index();
        let mut transition = vec![0.0; ns * na * ns];
        let mut reward = vec![0.0; ns * na * ns];
        let slip = (1.0 - self.success_prob) / (na - 1) as f64;
        for s in 0..ns {
            for intended in GridAction::ALL {
                let base = (s * na + intended as usize) * ns;
                if s == term || s == self.cell_index(self.goal) {
                    transition[base + term] = 1.0;
                    continue;
                }
                let cell = (s / self.width, s % self.width);
                for actual in GridAction::ALL {
                    let prob = if actual == intended { self.success_prob } else { slip };
                    let next = self.neighbor(cell, actual);
                    let j = self.cell_index(next);
                    transition[base + j] += prob;
                    reward[base + j] = self.entry_reward(next);
                }
            }
        }
        let mut initial = vec![0.0; ns];
        initial[self.cell_index(self.start)] = 1.0;
        TabularMdp::new(ns, na, transition, reward, gamma, initial)
    }
}

/// Sampling front end over the exact model.
#[derive(Debug, Clone)]
pub struct Gridworld {
    pub config: GridworldConfig,
    mdp: TabularMdp,
    samplers: Vec<Option<WeightedIndex<f64>>>,
}

impl Gridworld {
    pub fn new(config: GridworldConfig, gamma: f64) -> Result<Self> {
        let mdp = config.to_tabular(gamma)?;
        let samplers = (0..mdp.n_states() * mdp.n_actions())
            .map(|i| {
                let (s, a) = (i / mdp.n_actions(), i % mdp.n_actions());
                WeightedIndex::new(mdp.next_states(s, a)).ok()
            })
            .collect();
        Ok(Self {
            config,
            mdp,
            samplers,
        })
    }

    pub fn mdp(&self) -> &TabularMdp {
        &self.mdp
    }

    pub fn n_states(&self) -> usize {
        self.mdp.n_states()
    }
}

impl Environment for Gridworld {
    type State = usize;

    fn n_actions(&self) -> usize {
        self.mdp.n_actions()
    }

    fn reset(&self) -> usize {
        self.config.cell_index(self.config.start)
    }

    fn step<R: Rng + ?Sized>(&self, state: usize, action: usize, rng: &mut R) -> Transition<usize> {
        let sampler = self.samplers[state * self.n_actions() + action]
            .as_ref()
            .expect("transition rows are valid distributions");
        let next = sampler.sample(rng);
        let goal = self.config.cell_index(self.config.goal);
        Transition {
            state,
            action,
            reward: self.mdp.rewards(state, action)[next],
            next_state: next,
            terminal: next == goal || next == self.config.terminal_index(),
        }
    }
}
