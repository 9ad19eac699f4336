pub mod envs;
pub mod error;
pub mod exec;
pub mod lfa;
pub mod mdp;
pub mod metrics;
pub mod monotonic;
pub mod regularized;

pub use error::{Error, Result};
