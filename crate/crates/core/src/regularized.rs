//! Entropy and KL regularized Bellman machinery: the Boltzmann greedy step,
//! one-step backups and m-step evaluation, and the conservative value
//! iteration (CVI) loop built from them.

use crate::error::{domain, Error, Result};
use crate::mdp::{Policy, QFunction, TabularMdp};

/// Entropy weight `τ`, KL weight `σ` and the derived `α = τ/(τ+σ)`, `β = 1/(τ+σ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegularizationParams {
    tau: f64,
    sigma: f64,
    alpha: f64,
    beta: f64,
}

impl RegularizationParams {
    pub fn new(tau: f64, sigma: f64) -> Result<Self> {
        if !(tau >= 0.0 && tau.is_finite()) {
            return Err(domain("tau", format!("{tau} must be finite and non-negative")));
        }
        if !(sigma >= 0.0 && sigma.is_finite()) {
            return Err(domain("sigma", format!("{sigma} must be finite and non-negative")));
        }
        let total = tau + sigma;
        if total <= 0.0 {
            return Err(domain("tau + sigma", "at least one regularizer must be positive"));
        }
        Ok(Self {
            tau,
            sigma,
            alpha: tau / total,
            beta: 1.0 / total,
        })
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }
}

/// Writes `normalize(base^α · exp(β q))` into `out`, subtracting the max logit first.
///
/// With `α = 0` the base row is ignored, so it may contain zeros.
pub fn boltzmann_row(q: &[f64], base: &[f64], alpha: f64, beta: f64, out: &mut [f64]) {
    debug_assert_eq!(q.len(), out.len());
    for (i, o) in out.iter_mut().enumerate() {
        *o = beta * q[i];
        if alpha != 0.0 {
            *o += alpha * base[i].ln();
        }
    }
    softmax_in_place(out);
}

/// Numerically stable in-place softmax.
pub fn softmax_in_place(logits: &mut [f64]) {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut total = 0.0;
    for x in logits.iter_mut() {
        *x = (*x - max).exp();
        total += *x;
    }
    for x in logits.iter_mut() {
        *x /= total;
    }
}

/// Closed-form maximizer of the regularized greedy step,
/// `𝒢Q(a|s) ∝ π̄(a|s)^α exp(β Q(s, a))`.
pub fn boltzmann_greedy(q: &QFunction, base: &Policy, params: &RegularizationParams) -> Result<Policy> {
    if q.n_states() != base.n_states() || q.n_actions() != base.n_actions() {
        return Err(Error::Shape("Q and base policy differ in shape".into()));
    }
    let na = q.n_actions();
    let mut probs = vec![0.0; q.n_states() * na];
    for (s, out) in probs.chunks_mut(na).enumerate() {
        let base_row = base.row(s);
        if params.alpha() > 0.0 {
            if let Some(a) = base_row.iter().position(|&p| p == 0.0) {
                return Err(Error::ZeroProbability { state: s, action: a });
            }
        }
        boltzmann_row(q.row(s), base_row, params.alpha(), params.beta(), out);
    }
    Policy::from_flat(q.n_states(), na, probs)
}

/// Applies `Q'(s, a) = Σ_{s'} T(s'|s, a) (r(s, a, s') + γ W(s'))` for a next-state value `W`.
fn backup_with(mdp: &TabularMdp, next_value: &[f64]) -> QFunction {
    let (ns, na, g) = (mdp.n_states(), mdp.n_actions(), mdp.gamma());
    let mut values = Vec::with_capacity(ns * na);
    for s in 0..ns {
        for a in 0..na {
            let v = mdp
                .next_states(s, a)
                .iter()
                .zip(mdp.rewards(s, a))
                .zip(next_value)
                .map(|((t, r), w)| t * (r + g * w))
                .sum();
            values.push(v);
        }
    }
    QFunction::from_flat(ns, na, values).expect("backup preserves shape")
}

/// Unregularized evaluation operator `T_π Q`.
pub fn bellman_backup(mdp: &TabularMdp, q: &QFunction, pi: &Policy) -> Result<QFunction> {
    mdp.check_q(q)?;
    mdp.check_policy(pi)?;
    let w = q.state_values(pi);
    Ok(backup_with(mdp, &w.0))
}

/// One application of the regularized recursion: the next-state value is
/// `Σ_{a'} π(a'|s') [Q(s', a') − τ log π(a'|s') − σ log(π(a'|s') / π̄(a'|s'))]`.
pub fn regularized_backup(
    mdp: &TabularMdp,
    q: &QFunction,
    pi: &Policy,
    base: &Policy,
    params: &RegularizationParams,
) -> Result<QFunction> {
    mdp.check_q(q)?;
    mdp.check_policy(pi)?;
    mdp.check_policy(base)?;
    let (tau, sigma) = (params.tau(), params.sigma());
    let mut w = vec![0.0; mdp.n_states()];
    for (s, ws) in w.iter_mut().enumerate() {
        for (a, ((&p, &b), &qv)) in pi.row(s).iter().zip(base.row(s)).zip(q.row(s)).enumerate() {
            if p == 0.0 || (sigma > 0.0 && b == 0.0) {
                return Err(Error::ZeroProbability { state: s, action: a });
            }
            let log_p = p.ln();
            let kl = if sigma > 0.0 { sigma * (log_p - b.ln()) } else { 0.0 };
            *ws += p * (qv - tau * log_p - kl);
        }
    }
    Ok(backup_with(mdp, &w))
}

/// `(T_π)^m Q₀`.
pub fn policy_evaluation_m(mdp: &TabularMdp, q0: &QFunction, pi: &Policy, m: usize) -> Result<QFunction> {
    if m == 0 {
        return Err(domain("m", "at least one backup is required"));
    }
    let mut q = bellman_backup(mdp, q0, pi)?;
    for _ in 1..m {
        q = bellman_backup(mdp, &q, pi)?;
    }
    Ok(q)
}

/// `m` applications of [`regularized_backup`] with fixed `π` and `π̄`.
pub fn regularized_evaluation_m(
    mdp: &TabularMdp,
    q0: &QFunction,
    pi: &Policy,
    base: &Policy,
    params: &RegularizationParams,
    m: usize,
) -> Result<QFunction> {
    if m == 0 {
        return Err(domain("m", "at least one backup is required"));
    }
    let mut q = regularized_backup(mdp, q0, pi, base, params)?;
    for _ in 1..m {
        q = regularized_backup(mdp, &q, pi, base, params)?;
    }
    Ok(q)
}

/// Iteration state of exact conservative value iteration.
///
/// `k` is the index of the policy currently held, so the next step produces
/// `π_{k+1}` whose distance to `π_k` is governed by `C_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct CviState {
    pub k: usize,
    pub policy: Policy,
    pub q: QFunction,
    pub params: RegularizationParams,
    pub m: usize,
}

impl CviState {
    /// Starts from `π₀` uniform and `Q₀ = 0`, then takes the first step so the
    /// returned state holds `π₁ = 𝒢Q₀` (uniform) and `Q₁`, with `k = 1`.
    pub fn new(mdp: &TabularMdp, params: RegularizationParams, m: usize) -> Result<Self> {
        let start = Self {
            k: 0,
            policy: Policy::uniform(mdp.n_states(), mdp.n_actions()),
            q: QFunction::zeros(mdp.n_states(), mdp.n_actions()),
            params,
            m,
        };
        cvi_iteration(mdp, &start)
    }
}

/// `π_{k+1} = 𝒢_{π_k} Q_k`, then `Q_{k+1}` from `m` regularized backups under
/// `(π_{k+1}, π̄ = π_k)`.
pub fn cvi_iteration(mdp: &TabularMdp, state: &CviState) -> Result<CviState> {
    let next = boltzmann_greedy(&state.q, &state.policy, &state.params)?;
    let q = regularized_evaluation_m(mdp, &state.q, &next, &state.policy, &state.params, state.m)?;
    Ok(CviState {
        k: state.k + 1,
        policy: next,
        q,
        params: state.params,
        m: state.m,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mdp::{exact_q, policy_advantage, random_mdp, random_policy};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn params(tau: f64, sigma: f64) -> RegularizationParams {
        RegularizationParams::new(tau, sigma).unwrap()
    }

    #[test]
    fn derived_coefficients() {
        let p = params(0.5, 0.5);
        assert_eq!((p.alpha(), p.beta()), (0.5, 1.0));
        let p = params(0.0, 1.0);
        assert_eq!((p.alpha(), p.beta()), (0.0, 1.0));
        let p = params(0.0124, 0.001);
        assert!((p.alpha() - 0.0124 / 0.0134).abs() < 1e-15);
        assert!((p.alpha() - 0.92537).abs() < 5e-6);
        assert!((p.beta() - 74.627).abs() < 5e-4);
    }

    #[test]
    fn rejects_vanishing_regularization() {
        assert!(matches!(
            RegularizationParams::new(0.0, 0.0),
            Err(Error::Domain { .. })
        ));
        assert!(RegularizationParams::new(-0.1, 1.0).is_err());
    }

    #[test]
    fn constant_q_with_uniform_base_is_uniform() {
        let q = QFunction::from_flat(2, 3, vec![4.0; 6]).unwrap();
        let pi = boltzmann_greedy(&q, &Policy::uniform(2, 3), &params(0.3, 0.7)).unwrap();
        for &p in pi.as_flat() {
            assert!((p - 1.0 / 3.0).abs() < 1e-15);
        }
    }

    #[test]
    fn two_action_hand_value() {
        // the uniform base^α cancels, leaving softmax(1, 0)
        let q = QFunction::from_flat(1, 2, vec![1.0, 0.0]).unwrap();
        let pi = boltzmann_greedy(&q, &Policy::uniform(1, 2), &params(0.5, 0.5)).unwrap();
        let expected = 1.0 / (1.0 + (-1.0_f64).exp());
        assert!((pi.prob(0, 0) - expected).abs() < 1e-15);
        assert!((pi.prob(0, 0) - 0.73106).abs() < 5e-6);
        assert!((pi.prob(0, 1) - 0.26894).abs() < 5e-6);
    }

    #[test]
    fn large_beta_concentrates_on_argmax() {
        let q = QFunction::from_flat(1, 3, vec![0.2, 0.5, 0.49]).unwrap();
        let pi = boltzmann_greedy(&q, &Policy::uniform(1, 3), &params(0.0, 1e-3)).unwrap();
        assert!(pi.prob(0, 1) >= 0.999);
    }

    #[test]
    fn zero_in_base_is_rejected_when_alpha_positive() {
        let q = QFunction::zeros(1, 2);
        let base = Policy::from_rows(&[vec![1.0, 0.0]]).unwrap();
        assert!(matches!(
            boltzmann_greedy(&q, &base, &params(0.1, 0.1)),
            Err(Error::ZeroProbability { state: 0, action: 1 })
        ));
        assert!(boltzmann_greedy(&q, &base, &params(0.0, 0.1)).is_ok());
    }

    #[test]
    fn huge_q_does_not_overflow() {
        let q = QFunction::from_flat(1, 2, vec![1e6, 1e6 - 1.0]).unwrap();
        let pi = boltzmann_greedy(&q, &Policy::uniform(1, 2), &params(0.5, 0.5)).unwrap();
        assert!(pi.as_flat().iter().all(|p| p.is_finite()));
    }

    #[test]
    fn kl_term_vanishes_when_policy_equals_base() {
        let mdp = random_mdp(4, 3, 0.9, 1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let pi = random_policy(4, 3, &mut rng);
        let q = QFunction::from_flat(4, 3, (0..12).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap();
        let with_kl = regularized_backup(&mdp, &q, &pi, &pi, &params(0.2, 0.8)).unwrap();
        let entropy_only = regularized_backup(&mdp, &q, &pi, &pi, &params(0.2, 0.0)).unwrap();
        assert!(with_kl.sup_distance(&entropy_only) < 1e-15);
    }

    #[test]
    fn vanishing_regularizers_reduce_to_plain_backup() {
        let mdp = random_mdp(5, 3, 0.9, 3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let pi = random_policy(5, 3, &mut rng);
        let base = random_policy(5, 3, &mut rng);
        let q = QFunction::from_flat(5, 3, (0..15).map(|_| rng.random_range(-5.0..5.0)).collect()).unwrap();
        let tiny = params(1e-15, 1e-15);
        let reg = regularized_backup(&mdp, &q, &pi, &base, &tiny).unwrap();
        let plain = bellman_backup(&mdp, &q, &pi).unwrap();
        assert!(reg.sup_distance(&plain) < 1e-12);
    }

    #[test]
    fn entropy_bonus_on_deterministic_chain() {
        // 0 -> 1 -> 0, both actions identical, r = 1 on every step
        let t = vec![0.0, 1.0, 0.0, 1.0, 1.0, 0.0, 1.0, 0.0];
        let mdp = TabularMdp::with_start_state(2, 2, t, vec![1.0; 8], 0.9).unwrap();
        let q = QFunction::from_flat(2, 2, vec![1.0, 3.0, -2.0, 0.5]).unwrap();
        let pi = Policy::uniform(2, 2);
        let next = regularized_backup(&mdp, &q, &pi, &pi, &params(0.1, 0.0)).unwrap();
        // W(s') = mean Q(s', ·) + τ log 2
        let w0 = 2.0 + 0.1 * 2f64.ln();
        let w1 = -0.75 + 0.1 * 2f64.ln();
        assert!((next.get(0, 0) - (1.0 + 0.9 * w1)).abs() < 1e-14);
        assert!((next.get(1, 1) - (1.0 + 0.9 * w0)).abs() < 1e-14);
    }

    #[test]
    fn zero_policy_probability_is_rejected() {
        let mdp = random_mdp(2, 2, 0.9, 0).unwrap();
        let pi = Policy::deterministic(2, &[0, 1]).unwrap();
        let q = QFunction::zeros(2, 2);
        assert!(matches!(
            regularized_backup(&mdp, &q, &pi, &Policy::uniform(2, 2), &params(0.1, 0.1)),
            Err(Error::ZeroProbability { .. })
        ));
    }

    #[test]
    fn one_step_from_zero_is_expected_reward() {
        let mdp = random_mdp(4, 2, 0.9, 6).unwrap();
        let q = policy_evaluation_m(&mdp, &QFunction::zeros(4, 2), &Policy::uniform(4, 2), 1).unwrap();
        assert_eq!(q, crate::mdp::expected_reward(&mdp));
        assert!(policy_evaluation_m(&mdp, &q, &Policy::uniform(4, 2), 0).is_err());
    }

    #[test]
    fn many_backups_converge_to_exact_q() {
        let mdp = random_mdp(6, 3, 0.9, 12).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let pi = random_policy(6, 3, &mut rng);
        let q = policy_evaluation_m(&mdp, &QFunction::zeros(6, 3), &pi, 200).unwrap();
        // ‖Q^π‖ ≤ 10, so the residual is at most 10 · 0.9^200 ≈ 7e-9
        assert!(q.sup_distance(&exact_q(&mdp, &pi).unwrap()) < 1e-8);
    }

    #[test]
    fn cvi_first_policy_is_positive_and_improving() {
        let mdp = random_mdp(5, 3, 0.9, 4).unwrap();
        let mut state = CviState::new(&mdp, params(0.1, 0.1), 1).unwrap();
        assert_eq!(state.k, 1);
        for _ in 0..10 {
            let next = cvi_iteration(&mdp, &state).unwrap();
            assert!(next.policy.as_flat().iter().all(|&p| p > 0.0));
            state = next;
        }
    }

    #[test]
    fn cvi_with_deeper_evaluation_does_not_regress() {
        let mdp = random_mdp(5, 3, 0.9, 17).unwrap();
        let mut state = CviState::new(&mdp, params(0.1, 0.1), 5).unwrap();
        for _ in 0..30 {
            let next = cvi_iteration(&mdp, &state).unwrap();
            let adv = policy_advantage(&mdp, &next.policy, &state.policy).unwrap();
            assert!(adv.expected >= -1e-10, "k={} adv={}", state.k, adv.expected);
            state = next;
        }
    }
}
