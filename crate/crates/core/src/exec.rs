//! Trial scheduling and per-trial random streams.
//!
//! Trials are independent, so they map over a thread pool when the
//! `parallel` feature is on. Results always come back in trial order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Generators for one trial: environment noise and algorithm choices never
/// share a stream, and neither depends on which thread runs the trial.
pub fn trial_rngs(base_seed: u64, trial: usize) -> (ChaCha8Rng, ChaCha8Rng) {
    let seed = base_seed.wrapping_add(trial as u64);
    let mut env = ChaCha8Rng::seed_from_u64(seed);
    let mut algo = ChaCha8Rng::seed_from_u64(seed);
    env.set_stream(0);
    algo.set_stream(1);
    (env, algo)
}

pub fn map_trials_sequential<T, F>(n: usize, f: F) -> Vec<T>
where
    F: Fn(usize) -> T,
{
    (0..n).map(f).collect()
}

#[cfg(feature = "parallel")]
pub fn map_trials_parallel<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    use rayon::prelude::*;
    (0..n).into_par_iter().map(f).collect()
}

/// Runs `f(0..n)` on the default backend.
pub fn map_trials<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        map_trials_parallel(n, f)
    }
    #[cfg(not(feature = "parallel"))]
    {
        map_trials_sequential(n, f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn streams_are_disjoint_and_reproducible() {
        let (mut e1, mut a1) = trial_rngs(7, 3);
        let (mut e2, _) = trial_rngs(7, 3);
        let x: u64 = e1.random();
        assert_eq!(x, e2.random::<u64>());
        assert_ne!(x, a1.random::<u64>());
        let (mut other, _) = trial_rngs(7, 4);
        let (mut again, _) = trial_rngs(7, 3);
        assert_ne!(other.random::<u64>(), again.random::<u64>());
    }

    #[test]
    fn results_keep_trial_order() {
        let out = map_trials(64, |i| i * i);
        assert_eq!(out, (0..64).map(|i| i * i).collect::<Vec<_>>());
        assert_eq!(out, map_trials_sequential(64, |i| i * i));
    }
}
