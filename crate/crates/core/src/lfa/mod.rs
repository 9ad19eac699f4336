//! Linear function approximation: feature maps, ridge least-squares fitting
//! of `Q(s, a) = φ(s, a)ᵀθ`, sample-based advantage estimates and the linear
//! CPP training loop.

mod cpp;
mod features;

use nalgebra::{DMatrix, DVector};

pub use cpp::{collect, linear_cpp_iteration, LinearCppConfig, LinearCppRecord, LinearCppState};
pub use features::{Features, PendulumFeatures, RbfFeatureMap, TabularFeatures};

use crate::envs::Transition;
use crate::error::{domain, Error, Result};
use crate::mdp::total_variation;
use crate::regularized::softmax_in_place;

/// `Q(s, a) = φ(s, a)ᵀθ`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearQ {
    pub theta: DVector<f64>,
}

impl LinearQ {
    pub fn zeros(dim: usize) -> Self {
        Self {
            theta: DVector::zeros(dim),
        }
    }

    pub fn value<S, F: Features<S>>(&self, features: &F, s: &S, a: usize) -> f64 {
        self.theta.dot(&DVector::from_vec(features.features(s, a)))
    }

    /// `Q(s, ·)` for every action.
    pub fn row<S, F: Features<S>>(&self, features: &F, s: &S) -> Vec<f64> {
        state_block(features, s).tr_mul(&self.theta).as_slice().to_vec()
    }
}

/// Boltzmann policy `π(a|s) ∝ exp(φ(s, a)ᵀψ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LogitPolicy {
    pub psi: DVector<f64>,
}

impl LogitPolicy {
    pub fn uniform(dim: usize) -> Self {
        Self {
            psi: DVector::zeros(dim),
        }
    }

    pub fn probs<S, F: Features<S>>(&self, features: &F, s: &S) -> Vec<f64> {
        self.probs_from_block(&state_block(features, s))
    }

    fn probs_from_block(&self, block: &DMatrix<f64>) -> Vec<f64> {
        let mut logits = block.tr_mul(&self.psi).as_slice().to_vec();
        softmax_in_place(&mut logits);
        logits
    }
}

/// Convex combination `ζ π_new + (1 − ζ) π_old` of two Boltzmann policies.
#[derive(Debug, Clone, PartialEq)]
pub struct MixturePolicy {
    pub zeta: f64,
    pub new: LogitPolicy,
    pub old: LogitPolicy,
}

impl MixturePolicy {
    pub fn pure(pi: LogitPolicy) -> Self {
        Self {
            zeta: 1.0,
            new: pi.clone(),
            old: pi,
        }
    }

    pub fn probs<S, F: Features<S>>(&self, features: &F, s: &S) -> Vec<f64> {
        let block = state_block(features, s);
        let new = self.new.probs_from_block(&block);
        if self.zeta == 1.0 {
            return new;
        }
        let old = self.old.probs_from_block(&block);
        new.iter()
            .zip(&old)
            .map(|(n, o)| self.zeta * n + (1.0 - self.zeta) * o)
            .collect()
    }
}

/// `M × |A|` matrix whose columns are `φ(s, a)`.
fn state_block<S, F: Features<S>>(features: &F, s: &S) -> DMatrix<f64> {
    let mut block = DMatrix::zeros(features.dim(), features.n_actions());
    for a in 0..features.n_actions() {
        features.write(s, a, block.column_mut(a).as_mut_slice());
    }
    block
}

/// Transitions gathered by the current behavior policy during one iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct OnPolicyBuffer<S> {
    transitions: Vec<Transition<S>>,
    capacity: usize,
}

impl<S> OnPolicyBuffer<S> {
    pub fn new(capacity: usize) -> Self {
        Self {
            transitions: Vec::with_capacity(capacity),
            capacity,
        }
    }

    pub fn from_transitions(transitions: Vec<Transition<S>>) -> Self {
        Self {
            capacity: transitions.len(),
            transitions,
        }
    }

    pub fn push(&mut self, t: Transition<S>) {
        debug_assert!(self.transitions.len() < self.capacity, "buffer overflow");
        self.transitions.push(t);
    }

    pub fn is_full(&self) -> bool {
        self.transitions.len() >= self.capacity
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.transitions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.transitions.is_empty()
    }

    pub fn transitions(&self) -> &[Transition<S>] {
        &self.transitions
    }

    pub fn clear(&mut self) {
        self.transitions.clear();
    }
}

/// Solves `(ΦᵀΦ + εI)θ = Φᵀy + εθ_prior`; without a prior this is plain ridge.
pub fn ridge_solve(
    phi: &DMatrix<f64>,
    y: &DVector<f64>,
    ridge: f64,
    prior: Option<&DVector<f64>>,
) -> Result<DVector<f64>> {
    if !(ridge >= 0.0 && ridge.is_finite()) {
        return Err(domain("ridge", format!("{ridge} must be finite and non-negative")));
    }
    let m = phi.ncols();
    if ridge == 0.0 {
        let svd = phi.clone().svd(false, false);
        let top = svd.singular_values.max();
        if phi.nrows() < m || svd.rank(top * 1e-10) < m {
            return Err(Error::DegenerateDesign);
        }
    }
    let mut gram = phi.tr_mul(phi);
    for i in 0..m {
        gram[(i, i)] += ridge;
    }
    let mut rhs = phi.tr_mul(y);
    if let Some(p) = prior {
        rhs.axpy(ridge, p, 1.0);
    }
    let chol = gram.cholesky().ok_or(Error::DegenerateDesign)?;
    Ok(chol.solve(&rhs))
}

/// Design matrix and empirical targets `r + γ Σ_a π_next(a|s') Q_prev(s', a)`.
pub fn design<S, F: Features<S>>(
    features: &F,
    buffer: &OnPolicyBuffer<S>,
    pi_next: &LogitPolicy,
    q_prev: &LinearQ,
    gamma: f64,
) -> (DMatrix<f64>, DVector<f64>) {
    let n = buffer.len();
    let mut phi = DMatrix::zeros(n, features.dim());
    let mut y = DVector::zeros(n);
    let mut row = vec![0.0; features.dim()];
    for (i, t) in buffer.transitions().iter().enumerate() {
        features.write(&t.state, t.action, &mut row);
        phi.row_mut(i).copy_from_slice(&row);
        let mut target = t.reward;
        if !t.terminal {
            let block = state_block(features, &t.next_state);
            let q = block.tr_mul(&q_prev.theta);
            let p = pi_next.probs_from_block(&block);
            target += gamma * q.iter().zip(&p).map(|(q, p)| q * p).sum::<f64>();
        }
        y[i] = target;
    }
    (phi, y)
}

/// Least-squares fit of `Q` to one empirical Bellman backup of `q_prev`.
pub fn fit<S, F: Features<S>>(
    features: &F,
    buffer: &OnPolicyBuffer<S>,
    pi_next: &LogitPolicy,
    q_prev: &LinearQ,
    gamma: f64,
    ridge: f64,
    prior: Option<&LinearQ>,
) -> Result<LinearQ> {
    if buffer.is_empty() {
        return Err(domain("buffer", "cannot fit on an empty buffer"));
    }
    let (phi, y) = design(features, buffer, pi_next, q_prev, gamma);
    let theta = ridge_solve(&phi, &y, ridge, prior.map(|q| &q.theta))?;
    Ok(LinearQ { theta })
}

/// Sample-based advantage statistics over the buffer states.
#[derive(Debug, Clone, PartialEq)]
pub struct AdvantageEstimate {
    /// `max_a Q(s, a) − Σ_a π_curr(a|s) Q(s, a)` per buffer state.
    pub per_state: Vec<f64>,
    pub mean: f64,
    pub min: f64,
    /// Largest L1 distance between `π_next` and `π_curr` over the buffer.
    pub delta: f64,
    /// Range of `Σ_a (π_next − π_curr)(a|s) Q(s, a)` over the buffer.
    pub delta_a: f64,
    /// Largest total variation between `π_next` and `π_curr` over the buffer.
    pub max_tv: f64,
}

pub fn estimate_advantages<S, F: Features<S>>(
    q: &LinearQ,
    features: &F,
    buffer: &OnPolicyBuffer<S>,
    pi_next: &LogitPolicy,
    pi_curr: &LogitPolicy,
) -> Result<AdvantageEstimate> {
    if buffer.is_empty() {
        return Err(domain("buffer", "cannot estimate advantages on an empty buffer"));
    }
    let mut per_state = Vec::with_capacity(buffer.len());
    let (mut delta, mut max_tv): (f64, f64) = (0.0, 0.0);
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for t in buffer.transitions() {
        let block = state_block(features, &t.state);
        let qs = block.tr_mul(&q.theta);
        let next = pi_next.probs_from_block(&block);
        let curr = pi_curr.probs_from_block(&block);
        let v: f64 = qs.iter().zip(&curr).map(|(q, p)| q * p).sum();
        per_state.push(qs.max() - v);
        let spread: f64 = qs.iter().zip(next.iter().zip(&curr)).map(|(q, (n, c))| (n - c) * q).sum();
        lo = lo.min(spread);
        hi = hi.max(spread);
        let tv = total_variation(&next, &curr);
        delta = delta.max(2.0 * tv);
        max_tv = max_tv.max(tv);
    }
    let mean = per_state.iter().sum::<f64>() / per_state.len() as f64;
    let min = per_state.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(AdvantageEstimate {
        per_state,
        mean,
        min,
        delta,
        delta_a: hi - lo,
        max_tv,
    })
}
