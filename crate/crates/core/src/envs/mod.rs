//! The benchmark environments: a danger gridworld with an exact tabular
//! model and a pendulum swing-up simulator with discrete torques.

mod gridworld;
mod pendulum;

pub use gridworld::{GridAction, Gridworld, GridworldConfig};
pub use pendulum::{Pendulum, PendulumConfig, PendulumState};

/// One step of experience.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transition<S> {
    pub state: S,
    pub action: usize,
    pub reward: f64,
    pub next_state: S,
    /// The episode ended in an absorbing state; no bootstrapping past it.
    pub terminal: bool,
}

/// Episodic environment driven by an external generator.
pub trait Environment {
    type State: Copy;

    fn n_actions(&self) -> usize;

    fn reset(&self) -> Self::State;

    fn step<R: rand::Rng + ?Sized>(
        &self,
        state: Self::State,
        action: usize,
        rng: &mut R,
    ) -> Transition<Self::State>;
}
