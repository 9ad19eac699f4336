use cautious_core::mdp::{
    exact_q, performance_difference, random_mdp, random_policy, stationary_distribution, Policy, QFunction,
    TabularMdp,
};
use cautious_core::monotonic::spread_quantities;
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn sample_row<R: Rng>(row: &[f64], rng: &mut R) -> usize {
    WeightedIndex::new(row).unwrap().sample(rng)
}

#[test]
fn performance_difference_holds_on_random_mdps() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst: f64 = 0.0;
    for seed in 0..100 {
        let ns = rng.random_range(1..=10);
        let na = rng.random_range(1..=4);
        let gamma = rng.random_range(0.5..0.99);
        let mdp = random_mdp(ns, na, gamma, seed).unwrap();
        let a = random_policy(ns, na, &mut rng);
        let b = random_policy(ns, na, &mut rng);
        let pd = performance_difference(&mdp, &a, &b).unwrap();
        worst = worst.max((pd.lhs - pd.rhs).abs());
    }
    assert!(worst <= 1e-8, "worst gap {worst}");
}

/// Stopping each rollout at a Geometric(1 − γ) time makes the stopping state a
/// draw from the normalized discounted occupancy.
fn monte_carlo_occupancy(mdp: &TabularMdp, pi: &Policy, n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut counts = vec![0usize; mdp.n_states()];
    for _ in 0..n {
        let mut s = sample_row(mdp.initial_distribution(), &mut rng);
        while rng.random::<f64>() < mdp.gamma() {
            let a = sample_row(pi.row(s), &mut rng);
            s = sample_row(mdp.next_states(s, a), &mut rng);
        }
        counts[s] += 1;
    }
    counts.into_iter().map(|c| c as f64 / n as f64).collect()
}

#[test]
fn occupancy_matches_monte_carlo() {
    let mdp = random_mdp(4, 2, 0.8, 5).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let pi = random_policy(4, 2, &mut rng);
    let exact = stationary_distribution(&mdp, &pi).unwrap();
    let n = 100_000;
    let est = monte_carlo_occupancy(&mdp, &pi, n, 7);
    for (p, q) in exact.as_slice().iter().zip(&est) {
        let se = (p * (1.0 - p) / n as f64).sqrt();
        assert!((p - q).abs() <= 3.0 * se, "exact {p}, sampled {q}, se {se}");
    }
}

#[test]
fn q_matches_monte_carlo_rollouts() {
    let mdp = random_mdp(3, 2, 0.7, 11).unwrap();
    let pi = Policy::uniform(3, 2);
    let q = exact_q(&mdp, &pi).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let n = 40_000;
    let (s0, a0) = (1, 0);
    let draws: Vec<f64> = (0..n)
        .map(|_| {
            let (mut s, mut a, mut disc, mut ret) = (s0, a0, 1.0, 0.0);
            while disc > 1e-12 {
                let next = sample_row(mdp.next_states(s, a), &mut rng);
                ret += disc * mdp.rewards(s, a)[next];
                disc *= mdp.gamma();
                s = next;
                a = sample_row(pi.row(s), &mut rng);
            }
            ret
        })
        .collect();
    let mean = draws.iter().sum::<f64>() / n as f64;
    let var = draws.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    let se = (var / n as f64).sqrt();
    assert!((mean - q.get(s0, a0)).abs() <= 3.0 * se, "{mean} vs {}", q.get(s0, a0));
}

#[test]
fn spread_matches_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    for _ in 0..50 {
        let (ns, na) = (rng.random_range(1..=8), rng.random_range(1..=5));
        let a = random_policy(ns, na, &mut rng);
        let b = random_policy(ns, na, &mut rng);
        let q = QFunction::from_flat(ns, na, (0..ns * na).map(|_| rng.random_range(-3.0..3.0)).collect())
            .unwrap();
        let got = spread_quantities(&a, &b, &q).unwrap();

        let mut delta: f64 = 0.0;
        let mut advs = Vec::new();
        for s in 0..ns {
            let mut l1 = 0.0;
            let mut adv = 0.0;
            for act in 0..na {
                l1 += (a.prob(s, act) - b.prob(s, act)).abs();
                adv += (a.prob(s, act) - b.prob(s, act)) * q.get(s, act);
            }
            delta = delta.max(l1);
            advs.push(adv);
        }
        let range = advs.iter().cloned().fold(f64::MIN, f64::max) - advs.iter().cloned().fold(f64::MAX, f64::min);
        assert!((got.delta - delta).abs() <= 1e-12);
        assert!((got.delta_a - range).abs() <= 1e-12);
    }
}
