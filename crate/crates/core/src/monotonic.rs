//! Cautious policy programming: the KL-derived constants `C_K`, `B_K`, the
//! total-variation bound between consecutive regularized policies, the
//! interpolation coefficient rules and the tabular CPP loop.

use crate::error::{domain, Error, Result};
use crate::mdp::{
    discounted_return, exact_q, policy_advantage_from, stationary_distribution, Policy, QFunction,
    TabularMdp,
};
use crate::regularized::{boltzmann_greedy, regularized_evaluation_m, CviState, RegularizationParams};

/// `C_K = β Σ_{j=0}^{K-1} α^j γ^{K-j-1}` with `r_max = 1`.
pub fn compute_c_k(params: &RegularizationParams, gamma: f64, k: usize) -> Result<f64> {
    if k == 0 {
        return Err(domain("k", "iteration index starts at 1"));
    }
    let alpha = params.alpha();
    let sum: f64 = (0..k)
        .map(|j| alpha.powi(j as i32) * gamma.powi((k - j - 1) as i32))
        .sum();
    Ok(params.beta() * sum)
}

/// Constants of the consecutive-policy KL bound at iteration `k`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundConstants {
    pub k: usize,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub b_k: f64,
    pub c_k: f64,
}

impl BoundConstants {
    /// `epsilon` is the evaluation error bound; zero gives `B_K = 0`.
    pub fn new(params: &RegularizationParams, gamma: f64, k: usize, epsilon: f64) -> Result<Self> {
        if !(epsilon >= 0.0 && epsilon.is_finite()) {
            return Err(domain("epsilon", format!("{epsilon} must be finite and non-negative")));
        }
        let c_k = compute_c_k(params, gamma, k)?;
        let b_k = if epsilon == 0.0 {
            0.0
        } else {
            (1.0 - gamma.powi(k as i32)) / (1.0 - gamma) * epsilon * params.beta()
        };
        Ok(Self {
            k,
            alpha: params.alpha(),
            beta: params.beta(),
            gamma,
            b_k,
            c_k,
        })
    }

    pub fn tv_bound(&self) -> f64 {
        tv_bound(self.b_k, self.c_k)
    }
}

/// `√(1 − e^{−4B − 2C})`.
pub fn bretagnolle_branch(b: f64, c: f64) -> f64 {
    (-(-4.0 * b - 2.0 * c).exp_m1()).sqrt()
}

/// `√(8B + 4C)`.
pub fn pinsker_branch(b: f64, c: f64) -> f64 {
    (8.0 * b + 4.0 * c).sqrt()
}

/// Upper bound on `max_s TV(π_{K+1}(·|s), π_K(·|s))`.
pub fn tv_bound(b: f64, c: f64) -> f64 {
    bretagnolle_branch(b, c).min(pinsker_branch(b, c))
}

/// Moving-average state of the adaptive coefficient rules.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdaptiveState {
    pub rho1: f64,
    pub rho2: f64,
    /// Running mean of the expected advantage.
    pub m: f64,
    /// Running minimum of the per-state advantage; starts at `+∞`.
    pub big_m: f64,
}

impl Default for AdaptiveState {
    fn default() -> Self {
        Self {
            rho1: 0.99,
            rho2: 0.999,
            m: 0.0,
            big_m: f64::INFINITY,
        }
    }
}

impl AdaptiveState {
    pub fn new(rho1: f64, rho2: f64) -> Result<Self> {
        for (name, rho) in [("rho1", rho1), ("rho2", rho2)] {
            if !(rho > 0.0 && rho < 1.0) {
                return Err(domain(name, format!("{rho} must lie in (0, 1)")));
            }
        }
        Ok(Self {
            rho1,
            rho2,
            ..Self::default()
        })
    }

    /// Folds in this iteration's mean and minimum advantage estimates.
    fn update(&mut self, mean: f64, min: f64) -> Result<()> {
        if mean.is_nan() || min.is_nan() {
            return Err(domain("advantage statistics", "must not be NaN"));
        }
        self.m = self.rho1 * self.m + (1.0 - self.rho1) * mean;
        self.big_m = (self.rho2 * self.big_m).min(min);
        Ok(())
    }
}

/// `ζ̂₀ m/M` with `ζ̂₀ = 1/4`, clipped.
pub fn dcpi_coefficient(m: f64, big_m: f64) -> f64 {
    clipped_ratio(0.25 * m, big_m)
}

/// `clip{(1/C_K) m/M, 0, 1}`.
pub fn dcpp_coefficient(c_k: f64, m: f64, big_m: f64) -> f64 {
    clipped_ratio(m, big_m * c_k)
}

/// `clip{num/den, 0, 1}`, taking the one-sided limit when `den = 0`: some
/// visited state already has zero advantage, so `M_K` hits zero and the
/// ratio grows without bound for any positive `m_K`.
fn clipped_ratio(num: f64, den: f64) -> f64 {
    if den == 0.0 {
        return if num > 0.0 { 1.0 } else { 0.0 };
    }
    (num / den).clamp(0.0, 1.0)
}

/// The interpolation-coefficient catalogue.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CoefficientRule {
    Cpi { r_max: f64 },
    ExactSpi,
    ApproxSpi,
    LinearCpp,
    AdaptiveDcpi(AdaptiveState),
    AdaptiveDcpp(AdaptiveState),
    Fixed(f64),
}

impl CoefficientRule {
    pub fn fixed(zeta: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&zeta) {
            return Err(domain("zeta", format!("{zeta} must lie in [0, 1]")));
        }
        Ok(Self::Fixed(zeta))
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Cpi { .. } => "cpi",
            Self::ExactSpi => "espi",
            Self::ApproxSpi => "aspi",
            Self::LinearCpp => "cpp",
            Self::AdaptiveDcpi(_) => "dcpi",
            Self::AdaptiveDcpp(_) => "dcpp",
            Self::Fixed(_) => "fixed",
        }
    }

    /// Coefficient for this iteration, clipped to `[0, 1]`.
    ///
    /// Adaptive rules update their moving averages before the no-advantage
    /// guard, so a skipped update still counts toward the averages.
    pub fn zeta(&mut self, x: &ZetaInputs) -> Result<f64> {
        if !x.expected_advantage.is_finite() {
            return Err(domain("expected advantage", "must be finite"));
        }
        let a = x.expected_advantage;
        let g = x.gamma;
        let raw = match self {
            Self::Fixed(z) => return Ok(*z),
            Self::AdaptiveDcpi(st) => {
                st.update(a, x.advantage_min)?;
                dcpi_coefficient(st.m, st.big_m)
            }
            Self::AdaptiveDcpp(st) => {
                st.update(a, x.advantage_min)?;
                dcpp_coefficient(x.c_k, st.m, st.big_m)
            }
            _ if a <= 0.0 => return Ok(0.0),
            Self::Cpi { r_max } => (1.0 - g) * a / (4.0 * *r_max),
            Self::ExactSpi => {
                let denom = g * x.delta * x.delta_a;
                if denom == 0.0 {
                    return Err(Error::DegenerateDenominator("exact SPI coefficient"));
                }
                (1.0 - g).powi(2) * a / denom
            }
            Self::ApproxSpi => (1.0 - g).powi(3) * a / (4.0 * g),
            Self::LinearCpp => (1.0 - g).powi(3) * a / (8.0 * g * x.c_k),
        };
        if a <= 0.0 || raw.is_nan() {
            return Ok(0.0);
        }
        Ok(raw.clamp(0.0, 1.0))
    }
}

/// Everything a coefficient rule may read.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZetaInputs {
    pub expected_advantage: f64,
    pub advantage_min: f64,
    pub gamma: f64,
    pub c_k: f64,
    pub delta: f64,
    pub delta_a: f64,
}

/// `δ` and `ΔA` between a candidate policy and its baseline.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Spread {
    pub delta: f64,
    pub delta_a: f64,
}

/// `δ = max_s ‖π_new(·|s) − π_base(·|s)‖₁`; `ΔA` is the range of the per-state
/// policy advantage under `q_base`.
pub fn spread_quantities(pi_new: &Policy, pi_base: &Policy, q_base: &QFunction) -> Result<Spread> {
    pi_new.same_shape(pi_base)?;
    let mut delta: f64 = 0.0;
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for s in 0..pi_new.n_states() {
        let (mut l1, mut adv) = (0.0, 0.0);
        for ((n, b), q) in pi_new.row(s).iter().zip(pi_base.row(s)).zip(q_base.row(s)) {
            l1 += (n - b).abs();
            adv += (n - b) * q;
        }
        delta = delta.max(l1);
        lo = lo.min(adv);
        hi = hi.max(adv);
    }
    Ok(Spread {
        delta,
        delta_a: hi - lo,
    })
}

/// `ζ π_new + (1 − ζ) π_base`, row by row.
pub fn interpolate(pi_new: &Policy, pi_base: &Policy, zeta: f64) -> Result<Policy> {
    pi_new.same_shape(pi_base)?;
    if !(0.0..=1.0).contains(&zeta) {
        return Err(domain("zeta", format!("{zeta} must lie in [0, 1]")));
    }
    let probs = pi_new
        .as_flat()
        .iter()
        .zip(pi_base.as_flat())
        .map(|(n, b)| zeta * n + (1.0 - zeta) * b)
        .collect();
    Policy::from_flat(pi_new.n_states(), pi_new.n_actions(), probs)
}

/// Guaranteed improvement `((1−γ)³Â²/(4γ)) · max{1/(1−e^{−2C}), 1/(4C)}`.
pub fn improvement_lower_bound(expected_adv: f64, gamma: f64, c_k: f64) -> f64 {
    if expected_adv <= 0.0 {
        return 0.0;
    }
    let scale = (1.0 - gamma).powi(3) * expected_adv * expected_adv / (4.0 * gamma);
    let branch = (1.0 / -(-2.0 * c_k).exp_m1()).max(1.0 / (4.0 * c_k));
    scale * branch
}

/// Diagnostics of one exact CPP step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CppRecord {
    /// Index `K` of the baseline policy.
    pub k: usize,
    pub zeta: f64,
    pub expected_advantage: f64,
    /// `J(π̃_K)`.
    pub return_before: f64,
    /// `J(π̃_{K+1})`.
    pub return_after: f64,
    /// `max_s TV(π_{K+1}, π̃_K)`, the greedy step the KL bound speaks about.
    pub tv_realized: f64,
    pub tv_bound: f64,
    pub lower_bound: f64,
}

impl CppRecord {
    pub fn improvement(&self) -> f64 {
        self.return_after - self.return_before
    }
}

/// Iteration state of exact tabular CPP. `policy` is the deployed `π̃_K`,
/// which is also the KL baseline of the next greedy step.
#[derive(Debug, Clone, PartialEq)]
pub struct CppState {
    pub k: usize,
    pub policy: Policy,
    pub q: QFunction,
    pub params: RegularizationParams,
    pub m: usize,
    pub rule: CoefficientRule,
    pub epsilon: f64,
}

impl CppState {
    /// Same bootstrap as [`CviState::new`], so both loops start from `k = 1`.
    pub fn new(
        mdp: &TabularMdp,
        params: RegularizationParams,
        m: usize,
        rule: CoefficientRule,
    ) -> Result<Self> {
        let cvi = CviState::new(mdp, params, m)?;
        Ok(Self {
            k: cvi.k,
            policy: cvi.policy,
            q: cvi.q,
            params,
            m,
            rule,
            epsilon: 0.0,
        })
    }
}

pub fn cpp_iteration(mdp: &TabularMdp, state: &CppState) -> Result<(CppState, CppRecord)> {
    let base = &state.policy;
    let greedy = boltzmann_greedy(&state.q, base, &state.params)?;

    let q_base = exact_q(mdp, base)?;
    let d_base = stationary_distribution(mdp, base)?;
    let adv = policy_advantage_from(&q_base, &d_base, &greedy, base);
    let spread = spread_quantities(&greedy, base, &q_base)?;
    let bound = BoundConstants::new(&state.params, mdp.gamma(), state.k, state.epsilon)?;

    let mut rule = state.rule;
    let inputs = ZetaInputs {
        expected_advantage: adv.expected,
        advantage_min: adv.per_state.iter().copied().fold(f64::INFINITY, f64::min),
        gamma: mdp.gamma(),
        c_k: bound.c_k,
        delta: spread.delta,
        delta_a: spread.delta_a,
    };
    let zeta = rule.zeta(&inputs)?;
    let deployed = interpolate(&greedy, base, zeta)?;
    let q = regularized_evaluation_m(mdp, &state.q, &deployed, base, &state.params, state.m)?;

    let record = CppRecord {
        k: state.k,
        zeta,
        expected_advantage: adv.expected,
        return_before: discounted_return(mdp, base)?,
        return_after: discounted_return(mdp, &deployed)?,
        tv_realized: greedy.max_total_variation(base),
        tv_bound: bound.tv_bound(),
        lower_bound: improvement_lower_bound(adv.expected, mdp.gamma(), bound.c_k),
    };
    let next = CppState {
        k: state.k + 1,
        policy: deployed,
        q,
        params: state.params,
        m: state.m,
        rule,
        epsilon: state.epsilon,
    };
    Ok((next, record))
}
