//! Finite MDPs with transition-based discounting, and exact oracles over them.
//!
//! Episodes are encoded as transitions with `gamma = 0` that route back to a
//! start state; there are no absorbing terminal states.

mod exact;
mod gradient;

pub use exact::{
    emphatic_weighting, exact_values, implicit_weighting, objective, stationary_distribution,
    ExactAnalysis, Values,
};
pub use gradient::{
    counterexample_stationary_conditions, find_stationary_point, semi_gradient, softmax_policy,
    true_gradient, StationaryConditions, StationaryPoint,
};

use serde::Serialize;
use thiserror::Error;

use crate::scalar::Scalar;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MdpError {
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("no unique stationary distribution under the behaviour policy")]
    NoStationaryDistribution,
    #[error("I - P(pi, gamma) is numerically singular; the target policy never terminates")]
    NonTerminatingPolicy,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
}

fn check_len(expected: usize, got: usize) -> Result<(), MdpError> {
    if expected == got {
        Ok(())
    } else {
        Err(MdpError::DimensionMismatch { expected, got })
    }
}

/// Tabular model with tensors indexed `(s, a, s')`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FiniteMdp<T> {
    n_states: usize,
    n_actions: usize,
    p: Vec<T>,
    r: Vec<T>,
    gamma: Vec<T>,
    d0: Vec<T>,
}

impl<T: Scalar> FiniteMdp<T> {
    pub fn new(
        n_states: usize,
        n_actions: usize,
        p: Vec<T>,
        r: Vec<T>,
        gamma: Vec<T>,
        d0: Vec<T>,
    ) -> Result<Self, MdpError> {
        let len = n_states * n_actions * n_states;
        check_len(len, p.len())?;
        check_len(len, r.len())?;
        check_len(len, gamma.len())?;
        check_len(n_states, d0.len())?;
        let tol = T::simplex_tol();
        for s in 0..n_states {
            for a in 0..n_actions {
                let row = &p[(s * n_actions + a) * n_states..][..n_states];
                if row.iter().any(|&x| !(x >= T::zero())) {
                    return Err(MdpError::InvalidModel(format!("negative probability at ({s},{a})")));
                }
                let total: T = row.iter().copied().sum();
                if (total - T::one()).abs() > tol {
                    return Err(MdpError::InvalidModel(format!(
                        "transition row ({s},{a}) sums to {total}"
                    )));
                }
            }
        }
        if gamma.iter().any(|&g| !(g >= T::zero() && g <= T::one())) {
            return Err(MdpError::InvalidModel("discount outside [0, 1]".into()));
        }
        if r.iter().any(|x| !x.is_finite()) {
            return Err(MdpError::InvalidModel("non-finite reward".into()));
        }
        let d0_total: T = d0.iter().copied().sum();
        if d0.iter().any(|&x| !(x >= T::zero())) || (d0_total - T::one()).abs() > tol {
            return Err(MdpError::InvalidModel("start distribution is not a distribution".into()));
        }
        Ok(Self { n_states, n_actions, p, r, gamma, d0 })
    }

    pub fn builder(n_states: usize, n_actions: usize) -> MdpBuilder<T> {
        let len = n_states * n_actions * n_states;
        MdpBuilder {
            n_states,
            n_actions,
            p: vec![T::zero(); len],
            r: vec![T::zero(); len],
            gamma: vec![T::zero(); len],
            d0: vec![T::zero(); n_states],
        }
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    #[inline]
    fn idx(&self, s: usize, a: usize, s2: usize) -> usize {
        (s * self.n_actions + a) * self.n_states + s2
    }

    pub fn p(&self, s: usize, a: usize, s2: usize) -> T {
        self.p[self.idx(s, a, s2)]
    }

    pub fn r(&self, s: usize, a: usize, s2: usize) -> T {
        self.r[self.idx(s, a, s2)]
    }

    pub fn gamma(&self, s: usize, a: usize, s2: usize) -> T {
        self.gamma[self.idx(s, a, s2)]
    }

    pub fn d0(&self) -> &[T] {
        &self.d0
    }

    /// Successor row `P(s, a, ·)`.
    pub fn successors(&self, s: usize, a: usize) -> &[T] {
        &self.p[self.idx(s, a, 0)..][..self.n_states]
    }

    /// Expected immediate reward `Σ_{s'} P r`.
    pub fn expected_reward(&self, s: usize, a: usize) -> T {
        (0..self.n_states).map(|s2| self.p(s, a, s2) * self.r(s, a, s2)).sum()
    }

    /// Copy with every non-zero discount replaced by `gamma`.
    pub fn with_episode_discount(&self, gamma: T) -> Self {
        let mut out = self.clone();
        for g in out.gamma.iter_mut() {
            if *g > T::zero() {
                *g = gamma;
            }
        }
        out
    }

    fn check_policy(&self, pi: &TabularPolicy<T>) -> Result<(), MdpError> {
        check_len(self.n_states, pi.n_states)?;
        check_len(self.n_actions, pi.n_actions)
    }
}

/// Incremental construction of a [`FiniteMdp`].
#[derive(Debug, Clone)]
pub struct MdpBuilder<T> {
    n_states: usize,
    n_actions: usize,
    p: Vec<T>,
    r: Vec<T>,
    gamma: Vec<T>,
    d0: Vec<T>,
}

impl<T: Scalar> MdpBuilder<T> {
    pub fn transition(mut self, s: usize, a: usize, s2: usize, prob: T, reward: T, gamma: T) -> Self {
        let i = (s * self.n_actions + a) * self.n_states + s2;
        self.p[i] += prob;
        self.r[i] = reward;
        self.gamma[i] = gamma;
        self
    }

    pub fn start(mut self, s: usize, prob: T) -> Self {
        self.d0[s] += prob;
        self
    }

    pub fn build(self) -> Result<FiniteMdp<T>, MdpError> {
        FiniteMdp::new(self.n_states, self.n_actions, self.p, self.r, self.gamma, self.d0)
    }
}

/// Action probabilities per state.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TabularPolicy<T> {
    n_states: usize,
    n_actions: usize,
    probs: Vec<T>,
}

impl<T: Scalar> TabularPolicy<T> {
    pub fn new(n_states: usize, n_actions: usize, probs: Vec<T>) -> Result<Self, MdpError> {
        check_len(n_states * n_actions, probs.len())?;
        let tol = T::simplex_tol();
        for s in 0..n_states {
            let row = &probs[s * n_actions..][..n_actions];
            let total: T = row.iter().copied().sum();
            if row.iter().any(|&x| !(x >= T::zero())) || (total - T::one()).abs() > tol {
                return Err(MdpError::InvalidModel(format!("policy row {s} is not a distribution")));
            }
        }
        Ok(Self { n_states, n_actions, probs })
    }

    pub fn uniform(n_states: usize, n_actions: usize) -> Self {
        let p = T::one() / T::lit(n_actions as f64);
        Self { n_states, n_actions, probs: vec![p; n_states * n_actions] }
    }

    /// Same action distribution in every state.
    pub fn constant(n_states: usize, row: &[T]) -> Result<Self, MdpError> {
        let probs = (0..n_states).flat_map(|_| row.iter().copied()).collect();
        Self::new(n_states, row.len(), probs)
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    pub fn prob(&self, s: usize, a: usize) -> T {
        self.probs[s * self.n_actions + a]
    }

    pub fn row(&self, s: usize) -> &[T] {
        &self.probs[s * self.n_actions..][..self.n_actions]
    }

    /// Shannon entropy of `π(·|s)` in nats.
    pub fn entropy(&self, s: usize) -> T {
        -self.row(s).iter().map(|&p| xlogx(p)).sum::<T>()
    }
}

/// Maps every state to a single bin; aliased states share a bin.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct StateAggregation {
    rep_of: Vec<usize>,
    n_bins: usize,
}

impl StateAggregation {
    pub fn new(rep_of: Vec<usize>) -> Self {
        let n_bins = rep_of.iter().max().map_or(0, |m| m + 1);
        Self { rep_of, n_bins }
    }

    /// Every state in its own bin.
    pub fn tabular(n_states: usize) -> Self {
        Self::new((0..n_states).collect())
    }

    pub fn bin(&self, s: usize) -> usize {
        self.rep_of[s]
    }

    pub fn n_bins(&self) -> usize {
        self.n_bins
    }

    pub fn n_states(&self) -> usize {
        self.rep_of.len()
    }

    pub fn alias(&self, s: usize) -> impl Iterator<Item = usize> + '_ {
        let b = self.rep_of[s];
        self.rep_of.iter().enumerate().filter(move |(_, &r)| r == b).map(|(i, _)| i)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EntropyConfig<T> {
    pub tau: T,
}

impl<T: Scalar> EntropyConfig<T> {
    pub fn new(tau: T) -> Result<Self, MdpError> {
        if tau >= T::zero() {
            Ok(Self { tau })
        } else {
            Err(MdpError::InvalidModel(format!("entropy weight {tau} is negative")))
        }
    }

    pub fn none() -> Self {
        Self { tau: T::zero() }
    }
}

/// `x ln x` with the continuous extension `0 ln 0 = 0`.
pub fn xlogx<T: Scalar>(x: T) -> T {
    if x > T::zero() {
        x * x.ln()
    } else {
        T::zero()
    }
}
