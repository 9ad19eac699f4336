use cautious_core::envs::{Environment, Gridworld, GridworldConfig, Pendulum, PendulumConfig, PendulumState};
use cautious_core::lfa::{Features, PendulumFeatures};
use cautious_core::mdp::{random_policy, Policy};
use cautious_core::metrics::oscillation;
use cautious_core::monotonic::{
    bretagnolle_branch, compute_c_k, improvement_lower_bound, interpolate, pinsker_branch, tv_bound,
    AdaptiveState, CoefficientRule, ZetaInputs,
};
use cautious_core::regularized::{boltzmann_greedy, RegularizationParams};
use cautious_core::mdp::QFunction;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

fn policy_pair(seed: u64, ns: usize, na: usize) -> (Policy, Policy) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (random_policy(ns, na, &mut rng), random_policy(ns, na, &mut rng))
}

fn rules() -> Vec<CoefficientRule> {
    vec![
        CoefficientRule::Cpi { r_max: 1.0 },
        CoefficientRule::ExactSpi,
        CoefficientRule::ApproxSpi,
        CoefficientRule::LinearCpp,
        CoefficientRule::AdaptiveDcpi(AdaptiveState::default()),
        CoefficientRule::AdaptiveDcpp(AdaptiveState::default()),
    ]
}

proptest! {
    #[test]
    fn bretagnolle_never_exceeds_pinsker(b in 0.0..5.0f64, c in 0.0..5.0f64) {
        prop_assert!(bretagnolle_branch(b, c) <= pinsker_branch(b, c) + 1e-12);
        let t = tv_bound(b, c);
        prop_assert!((0.0..=1.0).contains(&t));
    }

    #[test]
    fn c_k_is_positive_and_finite(tau in 1e-3..5.0f64, sigma in 1e-3..5.0f64, gamma in 0.01..0.999f64, k in 1usize..500) {
        let p = RegularizationParams::new(tau, sigma).unwrap();
        let c = compute_c_k(&p, gamma, k).unwrap();
        // Positive in exact arithmetic; may underflow to zero for tiny α and γ.
        prop_assert!(c >= 0.0 && c.is_finite());
        prop_assert!(c <= p.beta() * k as f64 + 1e-12);
        let next = compute_c_k(&p, gamma, k + 1).unwrap();
        let step = gamma * c + p.beta() * p.alpha().powi(k as i32);
        prop_assert!((next - step).abs() <= 1e-12 * step.max(1e-300));
    }

    #[test]
    fn coefficients_stay_in_unit_interval(
        a in -2.0..2.0f64,
        spread in 0.0..1.0f64,
        gamma in 0.05..0.999f64,
        c_k in 1e-3..50.0f64,
        delta in 1e-3..2.0f64,
        delta_a in 1e-3..4.0f64,
    ) {
        let x = ZetaInputs { expected_advantage: a, advantage_min: a - spread, gamma, c_k, delta, delta_a };
        for mut rule in rules() {
            let z = rule.zeta(&x).unwrap();
            prop_assert!((0.0..=1.0).contains(&z), "{} gave {}", rule.name(), z);
            if a <= 0.0 {
                prop_assert_eq!(z, 0.0);
            }
        }
    }

    #[test]
    fn interpolation_stays_on_the_simplex(seed in any::<u64>(), ns in 1usize..8, na in 1usize..5, z in 0.0..=1.0f64) {
        let (a, b) = policy_pair(seed, ns, na);
        let mix = interpolate(&a, &b, z).unwrap();
        for s in 0..ns {
            let row = mix.row(s);
            prop_assert!(row.iter().all(|p| *p >= 0.0));
            prop_assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            for act in 0..na {
                let expect = z * a.prob(s, act) + (1.0 - z) * b.prob(s, act);
                prop_assert!((mix.prob(s, act) - expect).abs() < 1e-15);
            }
        }
        // Distance to the baseline scales linearly with the coefficient.
        let tv = mix.max_total_variation(&b);
        prop_assert!((tv - z * a.max_total_variation(&b)).abs() < 1e-12);
    }

    #[test]
    fn interpolation_endpoints(seed in any::<u64>(), ns in 1usize..6, na in 1usize..4) {
        let (a, b) = policy_pair(seed, ns, na);
        prop_assert_eq!(interpolate(&a, &b, 1.0).unwrap(), a.clone());
        prop_assert_eq!(interpolate(&a, &b, 0.0).unwrap(), b.clone());
        prop_assert!(interpolate(&a, &b, 1.5).is_err());
    }

    #[test]
    fn lower_bound_is_monotone_in_the_advantage(a in 0.0..1.0f64, extra in 0.0..1.0f64, gamma in 0.05..0.99f64, c in 1e-3..20.0f64) {
        let lo = improvement_lower_bound(a, gamma, c);
        let hi = improvement_lower_bound(a + extra, gamma, c);
        prop_assert!(lo >= 0.0);
        prop_assert!(hi >= lo);
        prop_assert_eq!(improvement_lower_bound(-a, gamma, c), 0.0);
    }

    #[test]
    fn boltzmann_rows_are_distributions(seed in any::<u64>(), tau in 0.01..3.0f64, sigma in 0.01..3.0f64) {
        let (_, base) = policy_pair(seed, 5, 3);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 1);
        let q: Vec<f64> = (0..15).map(|_| rand::Rng::random_range(&mut rng, -50.0..50.0)).collect();
        let q = QFunction::from_flat(5, 3, q).unwrap();
        let p = RegularizationParams::new(tau, sigma).unwrap();
        let pi = boltzmann_greedy(&q, &base, &p).unwrap();
        for s in 0..5 {
            prop_assert!((pi.row(s).iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn oscillation_ignores_repeats_and_sums_drops(returns in prop::collection::vec(-10.0..10.0f64, 2..40), at in any::<prop::sample::Index>()) {
        let r = oscillation(&returns).unwrap();
        prop_assert!(r.osc_inf <= r.osc_l2 + 1e-12);
        prop_assert!(r.osc_l2 <= r.osc_inf * ((returns.len() - 1) as f64).sqrt() + 1e-12);
        let sq: f64 = returns.windows(2).map(|w| (w[0] - w[1]).max(0.0).powi(2)).sum();
        prop_assert!((r.osc_l2 * r.osc_l2 - sq).abs() <= 1e-9 * sq.max(1.0));

        let i = at.index(returns.len());
        let mut repeated = returns.clone();
        repeated.insert(i, returns[i]);
        prop_assert_eq!(oscillation(&repeated).unwrap(), r);
    }

    #[test]
    fn sorted_returns_do_not_oscillate(mut returns in prop::collection::vec(-10.0..10.0f64, 2..40)) {
        returns.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let r = oscillation(&returns).unwrap();
        prop_assert_eq!(r.osc_inf, 0.0);
        prop_assert_eq!(r.osc_l2, 0.0);
    }

    #[test]
    fn pendulum_state_stays_in_range(theta in -10.0..10.0f64, speed in -20.0..20.0f64, action in 0usize..3) {
        let env = Pendulum::new(PendulumConfig::default()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let t = env.step(PendulumState { theta, theta_dot: speed }, action, &mut rng);
        let s = t.next_state;
        prop_assert!(s.theta > -PI && s.theta <= PI);
        prop_assert!(s.theta_dot.abs() <= env.config.max_speed);
        prop_assert!(t.reward <= 0.0);
        if t.reward == 0.0 {
            prop_assert_eq!(s.theta, 0.0);
            prop_assert_eq!(s.theta_dot, 0.0);
        }
    }

    #[test]
    fn pendulum_features_are_positive_and_bounded(theta in -PI..PI, speed in -8.0..8.0f64, action in 0usize..3) {
        let f = PendulumFeatures::grid(&PendulumConfig::default(), 11, 11).unwrap();
        let phi = f.features(&PendulumState { theta, theta_dot: speed }, action);
        prop_assert_eq!(phi.len(), f.dim());
        prop_assert!(phi.iter().all(|x| *x > 0.0 && *x <= 1.0));
    }

    #[test]
    fn gridworld_steps_follow_the_model(seed in any::<u64>(), state in 0usize..26, action in 0usize..4) {
        let env = Gridworld::new(GridworldConfig::default(), 0.95).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let t = env.step(state, action, &mut rng);
        prop_assert!(t.next_state < env.n_states());
        prop_assert!(env.mdp().next_states(state, action)[t.next_state] > 0.0);
        prop_assert_eq!(t.reward, env.mdp().rewards(state, action)[t.next_state]);
        prop_assert!(t.reward >= -1.1 - 1e-12 && t.reward <= 0.9 + 1e-12);
    }
}
