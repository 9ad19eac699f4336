use cautious_core::mdp::random_mdp;
use cautious_core::monotonic::{cpp_iteration, CoefficientRule, CppState};
use cautious_core::regularized::{cvi_iteration, CviState, RegularizationParams};
use cautious_core::monotonic::tv_bound;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn cvi_steps_stay_inside_the_total_variation_bound() {
    let params = RegularizationParams::new(0.1, 0.1).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let mut violations = 0;
    let mut tightest: f64 = f64::INFINITY;
    for seed in 0..50 {
        let ns = rng.random_range(2..=10);
        let na = rng.random_range(2..=4);
        let mdp = random_mdp(ns, na, 0.9, 1000 + seed).unwrap();
        let mut state = CviState::new(&mdp, params, 1).unwrap();
        for _ in 0..50 {
            let next = cvi_iteration(&mdp, &state).unwrap();
            let c_k = cautious_core::monotonic::compute_c_k(&params, 0.9, state.k).unwrap();
            let bound = tv_bound(0.0, c_k);
            let tv = next.policy.max_total_variation(&state.policy);
            if tv > bound + 1e-10 {
                violations += 1;
            }
            tightest = tightest.min(bound - tv);
            state = next;
        }
    }
    assert_eq!(violations, 0, "closest approach {tightest}");
}

#[test]
fn cautious_steps_never_lose_return() {
    let params = RegularizationParams::new(0.1, 0.1).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut worst: f64 = f64::INFINITY;
    for seed in 0..50 {
        let ns = rng.random_range(2..=10);
        let na = rng.random_range(2..=4);
        let mdp = random_mdp(ns, na, 0.9, 5000 + seed).unwrap();
        let mut state = CppState::new(&mdp, params, 1, CoefficientRule::LinearCpp).unwrap();
        for _ in 0..30 {
            let (next, rec) = cpp_iteration(&mdp, &state).unwrap();
            assert!((0.0..=1.0).contains(&rec.zeta));
            if rec.expected_advantage >= 0.0 {
                worst = worst.min(rec.improvement());
            }
            state = next;
        }
    }
    assert!(worst >= -1e-8, "worst improvement {worst}");
}

#[test]
fn zero_coefficient_freezes_and_full_coefficient_tracks_cvi() {
    let params = RegularizationParams::new(0.2, 0.05).unwrap();
    let mdp = random_mdp(6, 3, 0.9, 3).unwrap();
    let mut frozen = CppState::new(&mdp, params, 2, CoefficientRule::Fixed(0.0)).unwrap();
    let mut full = CppState::new(&mdp, params, 2, CoefficientRule::Fixed(1.0)).unwrap();
    let mut cvi = CviState::new(&mdp, params, 2).unwrap();
    let start = frozen.policy.clone();
    for _ in 0..20 {
        let (f, rec) = cpp_iteration(&mdp, &frozen).unwrap();
        assert_eq!(rec.improvement(), 0.0);
        frozen = f;
        full = cpp_iteration(&mdp, &full).unwrap().0;
        cvi = cvi_iteration(&mdp, &cvi).unwrap();
        assert!(full.policy.max_total_variation(&cvi.policy) < 1e-12);
    }
    assert_eq!(frozen.policy, start);
}
