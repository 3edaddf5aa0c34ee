//! Interest functions and estimators of the emphatic weighting used to scale
//! actor updates: the follow-on trace, a learned linear estimator, and an
//! exact recomputation over the current episode.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::features::Features;
use crate::scalar::Scalar;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EmphasisError {
    #[error("emphasis estimator diverged")]
    EmphasisDiverged,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum InterestFunction {
    /// 1 on every step.
    Uniform,
    /// 1 on the first step of each episode, 0 elsewhere.
    Episodic,
    /// Fixed value per discrete state.
    Table(Vec<f64>),
}

impl InterestFunction {
    pub fn value<T: Scalar>(&self, episode_start: bool, state: Option<usize>) -> T {
        match self {
            InterestFunction::Uniform => T::one(),
            InterestFunction::Episodic => {
                if episode_start {
                    T::one()
                } else {
                    T::zero()
                }
            }
            InterestFunction::Table(t) => T::lit(state.and_then(|s| t.get(s)).copied().unwrap_or(0.0)),
        }
    }
}

/// `(1-η) i + η x`, returning `i` unchanged at `η = 0`.
#[inline]
pub fn mix_emphasis<T: Scalar>(i: T, x: T, eta: T) -> T {
    if eta == T::zero() {
        i
    } else {
        (T::one() - eta) * i + eta * x
    }
}

/// Follow-on trace `F_t = γ_t ρ_{t-1} F_{t-1} + i_t` with `M_t = (1-η) i_t + η F_t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmphasisTrace<T> {
    pub f: T,
    pub m: T,
    pub eta: T,
}

impl<T: Scalar> EmphasisTrace<T> {
    pub fn new(eta: T) -> Self {
        Self { f: T::zero(), m: T::zero(), eta }
    }

    /// Advances `F` and returns the new `M`.
    pub fn update(&mut self, rho_prev: T, gamma_t: T, i_t: T) -> T {
        self.f = gamma_t * rho_prev * self.f + i_t;
        self.m = mix_emphasis(i_t, self.f, self.eta);
        self.m
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DirectVariant {
    SemiGradient,
    Gradient,
}

/// Linear estimate `f_φ(x) = φᵀx` of `m(s)/d_µ(s)`, learned by a TD update
/// that bootstraps from the previous state.
///
/// The gradient variant is TDC-style: `h` regresses the TD error at `S_t`
/// and the correction `ρ_{t-1} γ_t h(S_t)` is applied along `x_{t-1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct DirectEstimator<T> {
    pub phi: Vec<T>,
    pub h: Vec<T>,
    pub beta: T,
    pub variant: DirectVariant,
}

/// One weighted transition for [`DirectEstimator::expected_update`].
#[derive(Debug, Clone)]
pub struct WeightedTransition<'a, T> {
    pub weight: T,
    pub x_prev: &'a Features<T>,
    pub x_t: &'a Features<T>,
    pub rho_prev: T,
    pub gamma_t: T,
    pub i_t: T,
}

impl<T: Scalar> DirectEstimator<T> {
    pub fn new(dim: usize, beta: T, variant: DirectVariant) -> Self {
        Self { phi: vec![T::zero(); dim], h: vec![T::zero(); dim], beta, variant }
    }

    pub fn predict(&self, x: &Features<T>) -> T {
        x.dot(&self.phi)
    }

    pub fn emphasis_value(&self, i_t: T, x_t: &Features<T>, eta: T) -> T {
        if eta == T::zero() {
            return i_t;
        }
        mix_emphasis(i_t, self.predict(x_t), eta)
    }

    fn td_error(&self, x_prev: &Features<T>, x_t: &Features<T>, rho_prev: T, gamma_t: T, i_t: T) -> T {
        i_t + rho_prev * gamma_t * x_prev.dot(&self.phi) - x_t.dot(&self.phi)
    }

    pub fn update(
        &mut self,
        x_prev: &Features<T>,
        x_t: &Features<T>,
        rho_prev: T,
        gamma_t: T,
        i_t: T,
    ) -> Result<(), EmphasisError> {
        let delta = self.td_error(x_prev, x_t, rho_prev, gamma_t, i_t);
        let h_t = x_t.dot(&self.h);
        x_t.add_scaled_to(&mut self.phi, self.beta * delta);
        if self.variant == DirectVariant::Gradient {
            x_prev.add_scaled_to(&mut self.phi, -self.beta * rho_prev * gamma_t * h_t);
            x_t.add_scaled_to(&mut self.h, self.beta * (delta - h_t));
        }
        self.check()
    }

    /// Applies the probability-weighted sum of single-transition updates,
    /// all evaluated at the current parameters.
    pub fn expected_update(&mut self, batch: &[WeightedTransition<'_, T>]) -> Result<(), EmphasisError> {
        let mut d_phi = vec![T::zero(); self.phi.len()];
        let mut d_h = vec![T::zero(); self.h.len()];
        for t in batch {
            let delta = self.td_error(t.x_prev, t.x_t, t.rho_prev, t.gamma_t, t.i_t);
            t.x_t.add_scaled_to(&mut d_phi, t.weight * self.beta * delta);
            if self.variant == DirectVariant::Gradient {
                let h_t = t.x_t.dot(&self.h);
                t.x_prev.add_scaled_to(&mut d_phi, -t.weight * self.beta * t.rho_prev * t.gamma_t * h_t);
                t.x_t.add_scaled_to(&mut d_h, t.weight * self.beta * (delta - h_t));
            }
        }
        self.phi.iter_mut().zip(&d_phi).for_each(|(p, d)| *p += *d);
        self.h.iter_mut().zip(&d_h).for_each(|(p, d)| *p += *d);
        self.check()
    }

    fn check(&self) -> Result<(), EmphasisError> {
        if self.phi.iter().chain(&self.h).all(|x| x.is_finite()) {
            Ok(())
        } else {
            Err(EmphasisError::EmphasisDiverged)
        }
    }
}

/// Exact follow-on trace for the current target policy, recomputed from the
/// stored episode each step. Memory grows with episode length.
#[derive(Debug, Clone)]
pub struct IdealTrace<T, X, A> {
    states: Vec<(X, T, T)>,
    actions: Vec<(A, T)>,
    pub eta: T,
}

impl<T: Scalar, X, A> IdealTrace<T, X, A> {
    pub fn new(eta: T) -> Self {
        Self { states: Vec::new(), actions: Vec::new(), eta }
    }

    /// Records the arrival at `x_t`; a zero discount starts a new episode.
    pub fn push_state(&mut self, x_t: X, gamma_t: T, i_t: T) {
        if gamma_t == T::zero() {
            self.states.clear();
            self.actions.clear();
        }
        self.states.push((x_t, gamma_t, i_t));
    }

    /// Records the behaviour action taken in the latest state.
    pub fn push_action(&mut self, action: A, mu_prob: T) {
        self.actions.push((action, mu_prob));
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    /// `F_t` with every ratio recomputed by `pi_prob(x, a)`; returns `(F_t, M_t)`.
    pub fn compute(&self, mut pi_prob: impl FnMut(&X, &A) -> T) -> (T, T) {
        let mut f = T::zero();
        for (j, (_, gamma, i)) in self.states.iter().enumerate() {
            if j == 0 {
                f = *i;
                continue;
            }
            let (prev_x, _, _) = &self.states[j - 1];
            let (a, mu) = &self.actions[j - 1];
            let rho = pi_prob(prev_x, a) / *mu;
            f = *gamma * rho * f + *i;
        }
        let i_t = self.states.last().map_or(T::zero(), |s| s.2);
        (f, mix_emphasis(i_t, f, self.eta))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trace_arithmetic() {
        let mut t = EmphasisTrace { f: 1.0, m: 0.0, eta: 1.0 };
        assert_eq!(t.update(0.5, 1.0, 1.0), 1.5);
        assert_eq!(t.update(3.0, 0.0, 0.25), 0.25);
    }

    #[test]
    fn half_mix_of_zero_estimate() {
        let d = DirectEstimator::<f64>::new(1, 0.1, DirectVariant::SemiGradient);
        let x = Features::binary(1, vec![0]);
        assert_eq!(d.emphasis_value(1.0, &x, 0.5), 0.5);
    }

    #[test]
    fn ideal_matches_online_trace_for_fixed_ratios() {
        let mut ideal = IdealTrace::<f64, usize, usize>::new(1.0);
        let mut online = EmphasisTrace::new(1.0);
        let gammas = [0.0, 0.9, 0.9, 0.0, 0.9];
        let mut rho_prev = 0.0;
        for (t, g) in gammas.iter().enumerate() {
            ideal.push_state(t, *g, 1.0);
            let m = online.update(rho_prev, *g, 1.0);
            let (_, mi) = ideal.compute(|_, _| 0.6);
            assert!((m - mi).abs() < 1e-12);
            ideal.push_action(0, 0.5);
            rho_prev = 0.6 / 0.5;
        }
    }
}
