//! Linear state-value critics with eligibility traces.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::features::Features;
use crate::scalar::Scalar;

/// Weights beyond this magnitude count as divergence.
pub const DIVERGENCE_THRESHOLD: f64 = 1e8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CriticError {
    #[error("critic diverged at step {step}")]
    CriticDiverged { step: u64 },
    #[error("feature dimension mismatch: expected {expected}, got {got}")]
    FeatureDimMismatch { expected: usize, got: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CriticAlg {
    Td,
    Etd,
    Gtd,
    Tdrc,
}

impl std::str::FromStr for CriticAlg {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "td" => Ok(CriticAlg::Td),
            "etd" => Ok(CriticAlg::Etd),
            "gtd" => Ok(CriticAlg::Gtd),
            "tdrc" => Ok(CriticAlg::Tdrc),
            other => Err(format!("unknown critic {other:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TdError<T> {
    pub delta: T,
}

/// `w`, trace `e`, auxiliary `h`, and the scalars each algorithm carries
/// between steps.
#[derive(Debug, Clone, PartialEq)]
pub struct CriticState<T> {
    pub alg: CriticAlg,
    pub w: Vec<T>,
    pub e: Vec<T>,
    pub h: Vec<T>,
    pub alpha: T,
    pub alpha_h: T,
    pub lambda: T,
    /// Mixing between interest and follow-on trace in the ETD emphasis.
    pub lambda_c: T,
    pub beta_reg: T,
    pub f_v: T,
    pub m_v: T,
    gamma_t: T,
    rho_prev: T,
    steps: u64,
}

impl<T: Scalar> CriticState<T> {
    pub fn new(alg: CriticAlg, dim: usize, alpha: T, lambda: T) -> Self {
        Self {
            alg,
            w: vec![T::zero(); dim],
            e: vec![T::zero(); dim],
            h: vec![T::zero(); dim],
            alpha,
            alpha_h: alpha,
            lambda,
            lambda_c: T::one() - lambda,
            beta_reg: T::one(),
            f_v: T::zero(),
            m_v: T::zero(),
            gamma_t: T::zero(),
            rho_prev: T::zero(),
            steps: 0,
        }
    }

    pub fn dim(&self) -> usize {
        self.w.len()
    }

    fn check(&self, x: &Features<T>) -> Result<(), CriticError> {
        if x.dim() == self.w.len() {
            Ok(())
        } else {
            Err(CriticError::FeatureDimMismatch { expected: self.w.len(), got: x.dim() })
        }
    }

    pub fn predict(&self, x: &Features<T>) -> Result<T, CriticError> {
        self.check(x)?;
        Ok(x.dot(&self.w))
    }

    /// One transition `x_t → x_{t+1}` with entropy-augmented reward.
    pub fn update(
        &mut self,
        x_t: &Features<T>,
        x_t1: &Features<T>,
        reward_tilde: T,
        gamma_t1: T,
        rho_t: T,
        interest_t: T,
    ) -> Result<TdError<T>, CriticError> {
        self.check(x_t)?;
        self.check(x_t1)?;
        self.steps += 1;
        let delta = reward_tilde + gamma_t1 * x_t1.dot(&self.w) - x_t.dot(&self.w);
        if !delta.is_finite() {
            return Err(CriticError::CriticDiverged { step: self.steps });
        }
        let decay = self.gamma_t * self.lambda;
        let scale = match self.alg {
            CriticAlg::Etd => {
                self.f_v = self.rho_prev * self.gamma_t * self.f_v + interest_t;
                self.m_v = (T::one() - self.lambda_c) * interest_t + self.lambda_c * self.f_v;
                self.m_v
            }
            _ => T::one(),
        };
        for v in self.e.iter_mut() {
            *v = rho_t * decay * *v;
        }
        x_t.add_scaled_to(&mut self.e, rho_t * scale);

        let step = self.alpha * delta;
        for (w, e) in self.w.iter_mut().zip(&self.e) {
            *w += step * *e;
        }
        if matches!(self.alg, CriticAlg::Gtd | CriticAlg::Tdrc) {
            let eh: T = self.e.iter().zip(&self.h).map(|(a, b)| *a * *b).sum();
            x_t1.add_scaled_to(&mut self.w, -self.alpha * gamma_t1 * (T::one() - self.lambda) * eh);
            let hx = x_t.dot(&self.h);
            if self.alg == CriticAlg::Tdrc {
                let shrink = T::one() - self.alpha_h * self.beta_reg;
                self.h.iter_mut().for_each(|h| *h *= shrink);
            }
            let step_h = self.alpha_h * delta;
            for (h, e) in self.h.iter_mut().zip(&self.e) {
                *h += step_h * *e;
            }
            x_t.add_scaled_to(&mut self.h, -self.alpha_h * hx);
        }

        self.gamma_t = gamma_t1;
        self.rho_prev = rho_t;
        let limit = T::lit(DIVERGENCE_THRESHOLD);
        if self.w.iter().chain(&self.h).any(|w| !(w.abs() <= limit)) {
            return Err(CriticError::CriticDiverged { step: self.steps });
        }
        Ok(TdError { delta })
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_error_is_reward_at_zero_weights() {
        let mut c = CriticState::<f64>::new(CriticAlg::Td, 2, 0.1, 0.0);
        let x = Features::binary(2, vec![0]);
        let y = Features::binary(2, vec![1]);
        let d = c.update(&x, &y, 1.0, 0.0, 1.0, 1.0).unwrap();
        assert_eq!(d.delta, 1.0);
        assert!((c.w[0] - 0.1).abs() < 1e-15);
    }

    #[test]
    fn zero_ratio_clears_trace_and_freezes_weights() {
        let mut c = CriticState::<f64>::new(CriticAlg::Td, 2, 0.1, 0.9);
        let x = Features::binary(2, vec![0]);
        let y = Features::binary(2, vec![1]);
        c.update(&x, &y, 1.0, 1.0, 1.0, 1.0).unwrap();
        let before = c.w.clone();
        c.update(&y, &x, 5.0, 1.0, 0.0, 1.0).unwrap();
        assert_eq!(c.e, vec![0.0, 0.0]);
        assert_eq!(c.w, before);
    }

    #[test]
    fn huge_rewards_trip_divergence() {
        let mut c = CriticState::<f64>::new(CriticAlg::Gtd, 1, 1.0, 0.0);
        let x = Features::binary(1, vec![0]);
        assert!(matches!(
            c.update(&x, &x, 1e12, 0.0, 1.0, 1.0),
            Err(CriticError::CriticDiverged { step: 1 })
        ));
    }
}
