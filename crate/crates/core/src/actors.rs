//! Linear policies and the emphatically weighted actor update.

use thiserror::Error;

use crate::env::{gaussian_log_density, ActionLaw, ContinuousOracle};
use crate::features::Features;
use crate::mdp::{exact_values, stationary_distribution, EntropyConfig, FiniteMdp, MdpError, TabularPolicy};
use crate::scalar::Scalar;
use crate::Prng;

/// Lower bound on the Gaussian policy's standard deviation.
pub const MIN_STD: f64 = 1e-3;
/// Densities are floored here before forming ratios.
pub const DENSITY_FLOOR: f64 = 1e-300;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ActorError {
    #[error("actor parameters became non-finite")]
    ActorDiverged,
    #[error("action does not match the policy type")]
    InvalidAction,
    #[error("feature dimension mismatch: expected {expected}, got {got}")]
    FeatureDimMismatch { expected: usize, got: usize },
}

fn check_finite<T: Scalar>(theta: &[T]) -> Result<(), ActorError> {
    if theta.iter().all(|t| t.is_finite()) {
        Ok(())
    } else {
        Err(ActorError::ActorDiverged)
    }
}

/// `π(a|x) ∝ exp(θ_aᵀx)`; `theta` is row-major `(feature, action)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SoftmaxLinearPolicy<T> {
    pub theta: Vec<T>,
    n_actions: usize,
    dim: usize,
}

impl<T: Scalar> SoftmaxLinearPolicy<T> {
    pub fn new(dim: usize, n_actions: usize) -> Self {
        Self { theta: vec![T::zero(); dim * n_actions], n_actions, dim }
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Sets the preference of `action` on feature `j`.
    pub fn set(&mut self, j: usize, action: usize, value: T) {
        self.theta[j * self.n_actions + action] = value;
    }

    pub fn preferences(&self, x: &Features<T>) -> Vec<T> {
        let mut prefs = vec![T::zero(); self.n_actions];
        for (j, v) in x.iter() {
            let row = &self.theta[j * self.n_actions..][..self.n_actions];
            for (p, t) in prefs.iter_mut().zip(row) {
                *p += *t * v;
            }
        }
        prefs
    }

    pub fn probs(&self, x: &Features<T>) -> Vec<T> {
        softmax(&self.preferences(x))
    }

    pub fn prob(&self, x: &Features<T>, a: usize) -> T {
        self.probs(x)[a]
    }

    /// `(onehot(a) − π(·|x)) ⊗ x`, laid out like `theta`.
    pub fn log_prob_grad(&self, x: &Features<T>, a: usize) -> Vec<T> {
        let mut g = vec![T::zero(); self.theta.len()];
        self.add_log_prob_grad(&mut g, x, a, T::one(), &self.probs(x));
        g
    }

    fn add_log_prob_grad(&self, out: &mut [T], x: &Features<T>, a: usize, scale: T, probs: &[T]) {
        for (j, v) in x.iter() {
            let row = &mut out[j * self.n_actions..][..self.n_actions];
            for (b, (o, p)) in row.iter_mut().zip(probs).enumerate() {
                let ind = if b == a { T::one() } else { T::zero() };
                *o += scale * v * (ind - *p);
            }
        }
    }

    pub fn sample(&self, x: &Features<T>, rng: &mut Prng) -> usize {
        let probs: Vec<f64> = self.probs(x).iter().map(|p| p.to_f64_lossy()).collect();
        crate::env::sample_discrete(&probs, rng)
    }
}

pub fn softmax<T: Scalar>(prefs: &[T]) -> Vec<T> {
    let max = prefs.iter().copied().fold(T::neg_infinity(), T::max);
    let exps: Vec<T> = prefs.iter().map(|p| (*p - max).exp()).collect();
    let z: T = exps.iter().copied().sum();
    exps.into_iter().map(|e| e / z).collect()
}

fn softplus<T: Scalar>(s: T) -> T {
    if s > T::lit(30.0) {
        s
    } else {
        s.exp().ln_1p()
    }
}

fn logistic<T: Scalar>(s: T) -> T {
    T::one() / (T::one() + (-s).exp())
}

/// Gaussian with linear mean and softplus-linear standard deviation.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianLinearPolicy<T> {
    pub theta_mean: Vec<T>,
    pub theta_std: Vec<T>,
}

impl<T: Scalar> GaussianLinearPolicy<T> {
    pub fn new(dim: usize) -> Self {
        Self { theta_mean: vec![T::zero(); dim], theta_std: vec![T::zero(); dim] }
    }

    pub fn mean(&self, x: &Features<T>) -> T {
        x.dot(&self.theta_mean)
    }

    pub fn std(&self, x: &Features<T>) -> T {
        softplus(x.dot(&self.theta_std)).max(T::lit(MIN_STD))
    }

    pub fn log_density(&self, x: &Features<T>, a: T) -> T {
        T::lit(gaussian_log_density(a.to_f64_lossy(), self.mean(x).to_f64_lossy(), self.std(x).to_f64_lossy()))
    }

    pub fn density(&self, x: &Features<T>, a: T) -> T {
        self.log_density(x, a).exp().max(T::lit(DENSITY_FLOOR))
    }

    /// Gradient of `log π(a|x)`: mean block followed by std block.
    pub fn log_prob_grad(&self, x: &Features<T>, a: T) -> Vec<T> {
        let dim = self.theta_mean.len();
        let mut g = vec![T::zero(); 2 * dim];
        let mu = self.mean(x);
        let s = x.dot(&self.theta_std);
        let raw = softplus(s);
        let sigma = raw.max(T::lit(MIN_STD));
        let z = a - mu;
        let d_mean = z / (sigma * sigma);
        let d_sigma = if raw > T::lit(MIN_STD) {
            (z * z / (sigma * sigma * sigma) - T::one() / sigma) * logistic(s)
        } else {
            T::zero()
        };
        for (j, v) in x.iter() {
            g[j] += d_mean * v;
            g[dim + j] += d_sigma * v;
        }
        g
    }

    pub fn sample(&self, x: &Features<T>, rng: &mut Prng) -> T {
        let law = ActionLaw::Gaussian { mean: self.mean(x).to_f64_lossy(), std: self.std(x).to_f64_lossy() };
        T::lit(law.sample(rng))
    }

    fn params_mut(&mut self) -> impl Iterator<Item = &mut T> {
        self.theta_mean.iter_mut().chain(self.theta_std.iter_mut())
    }
}

/// `a = θᵀx`.
#[derive(Debug, Clone, PartialEq)]
pub struct DeterministicLinearPolicy<T> {
    pub theta: Vec<T>,
}

impl<T: Scalar> DeterministicLinearPolicy<T> {
    pub fn new(dim: usize) -> Self {
        Self { theta: vec![T::zero(); dim] }
    }

    pub fn action(&self, x: &Features<T>) -> T {
        x.dot(&self.theta)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum LinearPolicy<T> {
    Softmax(SoftmaxLinearPolicy<T>),
    Gaussian(GaussianLinearPolicy<T>),
    Deterministic(DeterministicLinearPolicy<T>),
}

/// A sampled or chosen action in the learner's scalar type.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PolicyAction<T> {
    Discrete(usize),
    Continuous(T),
}

impl<T: Scalar> LinearPolicy<T> {
    /// `π(a|x)`: probability for discrete actions, density for Gaussian.
    pub fn prob(&self, x: &Features<T>, a: PolicyAction<T>) -> Result<T, ActorError> {
        match (self, a) {
            (LinearPolicy::Softmax(p), PolicyAction::Discrete(a)) if a < p.n_actions => Ok(p.prob(x, a)),
            (LinearPolicy::Gaussian(p), PolicyAction::Continuous(a)) => Ok(p.density(x, a)),
            _ => Err(ActorError::InvalidAction),
        }
    }

    pub fn log_prob_grad(&self, x: &Features<T>, a: PolicyAction<T>) -> Result<Vec<T>, ActorError> {
        match (self, a) {
            (LinearPolicy::Softmax(p), PolicyAction::Discrete(a)) if a < p.n_actions => Ok(p.log_prob_grad(x, a)),
            (LinearPolicy::Gaussian(p), PolicyAction::Continuous(a)) => Ok(p.log_prob_grad(x, a)),
            _ => Err(ActorError::InvalidAction),
        }
    }

    pub fn sample(&self, x: &Features<T>, rng: &mut Prng) -> PolicyAction<T> {
        match self {
            LinearPolicy::Softmax(p) => PolicyAction::Discrete(p.sample(x, rng)),
            LinearPolicy::Gaussian(p) => PolicyAction::Continuous(p.sample(x, rng)),
            LinearPolicy::Deterministic(p) => PolicyAction::Continuous(p.action(x)),
        }
    }

    pub fn params(&self) -> Vec<T> {
        match self {
            LinearPolicy::Softmax(p) => p.theta.clone(),
            LinearPolicy::Gaussian(p) => p.theta_mean.iter().chain(&p.theta_std).copied().collect(),
            LinearPolicy::Deterministic(p) => p.theta.clone(),
        }
    }

    pub fn norm(&self) -> T {
        self.params().iter().map(|t| *t * *t).sum::<T>().sqrt()
    }

    fn add_scaled(&mut self, x: &Features<T>, a: PolicyAction<T>, scale: T) -> Result<(), ActorError> {
        match (self, a) {
            (LinearPolicy::Softmax(p), PolicyAction::Discrete(a)) if a < p.n_actions => {
                let probs = p.probs(x);
                let mut theta = std::mem::take(&mut p.theta);
                p.add_log_prob_grad(&mut theta, x, a, scale, &probs);
                p.theta = theta;
                check_finite(&p.theta)
            }
            (LinearPolicy::Gaussian(p), PolicyAction::Continuous(a)) => {
                let g = p.log_prob_grad(x, a);
                p.params_mut().zip(g).for_each(|(t, d)| *t += scale * d);
                check_finite(&p.theta_mean).and(check_finite(&p.theta_std))
            }
            _ => Err(ActorError::InvalidAction),
        }
    }
}

/// `θ ← θ + α ρ M δ ∇ log π(a|x)`.
pub fn ace_actor_update<T: Scalar>(
    policy: &mut LinearPolicy<T>,
    m_t: T,
    rho_t: T,
    delta_t: T,
    x_t: &Features<T>,
    a_t: PolicyAction<T>,
    alpha: T,
) -> Result<(), ActorError> {
    policy.add_scaled(x_t, a_t, alpha * rho_t * m_t * delta_t)
}

/// The update scaled by the current interest only.
pub fn offpac_actor_update<T: Scalar>(
    policy: &mut LinearPolicy<T>,
    i_t: T,
    rho_t: T,
    delta_t: T,
    x_t: &Features<T>,
    a_t: PolicyAction<T>,
    alpha: T,
) -> Result<(), ActorError> {
    policy.add_scaled(x_t, a_t, alpha * rho_t * i_t * delta_t)
}

/// Target policy over all states of `mdp` given per-state actor features.
pub fn tabular_policy<T: Scalar>(
    policy: &SoftmaxLinearPolicy<T>,
    features: &[Features<T>],
) -> Result<TabularPolicy<T>, MdpError> {
    let probs: Vec<T> = features.iter().flat_map(|x| policy.probs(x)).collect();
    TabularPolicy::new(features.len(), policy.n_actions(), probs)
}

/// Average of `ρ M δ ψ` over `s ~ d_µ`, `a ~ µ`, with `E[M | s] = m_η(s)/d_µ(s)`
/// and `δ` the expected soft TD error under exact values.
pub fn expected_ace_update<T: Scalar>(
    mdp: &FiniteMdp<T>,
    features: &[Features<T>],
    policy: &SoftmaxLinearPolicy<T>,
    mu: &TabularPolicy<T>,
    interest: &[T],
    eta: T,
    entropy: EntropyConfig<T>,
) -> Result<Vec<T>, MdpError> {
    let pi = tabular_policy(policy, features)?;
    let d_mu = stationary_distribution(mdp, mu)?;
    let m_eta = crate::mdp::emphatic_weighting(mdp, &pi, mu, interest, eta)?;
    let vals = exact_values(mdp, &pi, entropy)?;
    let mut out = vec![T::zero(); policy.theta.len()];
    for s in 0..mdp.n_states() {
        if d_mu[s] == T::zero() {
            continue;
        }
        let m = m_eta[s] / d_mu[s];
        let probs = policy.probs(&features[s]);
        for a in 0..mdp.n_actions() {
            let b = mu.prob(s, a);
            if b == T::zero() {
                continue;
            }
            let rho = probs[a] / b;
            let log_pi = if probs[a] > T::zero() { probs[a].ln() } else { T::zero() };
            let delta = vals.q(s, a) - entropy.tau * log_pi - vals.v[s];
            let w = d_mu[s] * b * rho * m * delta;
            policy.add_log_prob_grad(&mut out, &features[s], a, w, &probs);
        }
    }
    Ok(out)
}

/// Expected deterministic-policy step on the continuous three-state problem,
/// with states weighted by `m` (`use_emphasis`) or by `d_µ`.
pub fn true_dpg_update(
    policy: &mut DeterministicLinearPolicy<f64>,
    oracle: &ContinuousOracle,
    use_emphasis: bool,
    alpha: f64,
) -> Result<(), ActorError> {
    if policy.theta.len() != 2 {
        return Err(ActorError::FeatureDimMismatch { expected: 2, got: policy.theta.len() });
    }
    let g = oracle.deterministic_gradient([policy.theta[0], policy.theta[1]], use_emphasis);
    policy.theta[0] += alpha * g[0];
    policy.theta[1] += alpha * g[1];
    check_finite(&policy.theta)
}

/// Per-step update scalings of the follow-on trace and of the discounted
/// reference `I` (reset to 1 at episode start, `I ← γI` after each step)
/// along one on-policy stream with episodic interest.
pub fn episodic_scalings(mdp: &FiniteMdp<f64>, steps: usize, seed: u64) -> (Vec<f64>, Vec<f64>) {
    use rand::SeedableRng;
    let mut rng = Prng::seed_from_u64(seed);
    let pi = TabularPolicy::<f64>::uniform(mdp.n_states(), mdp.n_actions());
    let mut trace = crate::emphasis::EmphasisTrace::new(1.0);
    let mut s = crate::env::sample_discrete(mdp.d0(), &mut rng);
    let (mut gamma_t, mut start) = (0.0, true);
    let mut reference = 1.0;
    let (mut f_out, mut i_out) = (Vec::with_capacity(steps), Vec::with_capacity(steps));
    for _ in 0..steps {
        let i_t = if start { 1.0 } else { 0.0 };
        if start {
            reference = 1.0;
        }
        f_out.push(trace.update(1.0, gamma_t, i_t));
        i_out.push(reference);
        let a = crate::env::sample_discrete(pi.row(s), &mut rng);
        let s2 = crate::env::sample_discrete(mdp.successors(s, a), &mut rng);
        gamma_t = mdp.gamma(s, a, s2);
        reference *= gamma_t;
        start = gamma_t == 0.0;
        s = s2;
    }
    (f_out, i_out)
}

/// True when the trace scalings equal the discounted reference on every step
/// within 1e-12.
pub fn on_policy_episodic_equivalence_check(mdp: &FiniteMdp<f64>, steps: usize, seed: u64) -> bool {
    let (f, i) = episodic_scalings(mdp, steps, seed);
    f.iter().zip(&i).all(|(a, b)| (a - b).abs() <= 1e-12)
}
