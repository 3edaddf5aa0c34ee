use serde::Serialize;

use super::exact::{mix, ExactAnalysis};
use super::{check_len, xlogx, EntropyConfig, FiniteMdp, MdpError, StateAggregation, TabularPolicy};
use crate::scalar::Scalar;

const THETA_CLAMP: f64 = 50.0;

/// Softmax policy over aggregation bins; `theta` is row-major `(bin, action)`.
pub fn softmax_policy<T: Scalar>(
    agg: &StateAggregation,
    theta: &[T],
    n_actions: usize,
) -> Result<TabularPolicy<T>, MdpError> {
    check_len(agg.n_bins() * n_actions, theta.len())?;
    let clamp = T::lit(THETA_CLAMP);
    let mut probs = Vec::with_capacity(agg.n_states() * n_actions);
    for s in 0..agg.n_states() {
        let row = &theta[agg.bin(s) * n_actions..][..n_actions];
        let clamped: Vec<T> = row.iter().map(|t| t.max(-clamp).min(clamp)).collect();
        let max = clamped.iter().copied().fold(T::neg_infinity(), T::max);
        let exps: Vec<T> = clamped.iter().map(|t| (*t - max).exp()).collect();
        let z: T = exps.iter().copied().sum();
        probs.extend(exps.into_iter().map(|e| e / z));
    }
    TabularPolicy::new(agg.n_states(), n_actions, probs)
}

/// `Σ_{s ∈ bin} w(s) π(s,a) [q̃(s,a) − τ log π(s,a) − ṽ(s)]` per `(bin, a)`.
fn weighted_gradient<T: Scalar>(
    agg: &StateAggregation,
    pi: &TabularPolicy<T>,
    analysis: &ExactAnalysis<T>,
    weights: &[T],
    tau: T,
) -> Vec<T> {
    let na = pi.n_actions();
    let mut g = vec![T::zero(); agg.n_bins() * na];
    for s in 0..agg.n_states() {
        let w = weights[s];
        if w == T::zero() {
            continue;
        }
        let b = agg.bin(s);
        let v = analysis.v_tilde[s];
        for a in 0..na {
            let p = pi.prob(s, a);
            let term = p * (analysis.q_tilde[s * na + a] - v) - tau * xlogx(p);
            g[b * na + a] += w * term;
        }
    }
    g
}

fn analysis_for<T: Scalar>(
    mdp: &FiniteMdp<T>,
    agg: &StateAggregation,
    theta: &[T],
    mu: &TabularPolicy<T>,
    interest: &[T],
    entropy: EntropyConfig<T>,
) -> Result<(TabularPolicy<T>, ExactAnalysis<T>), MdpError> {
    check_len(mdp.n_states(), agg.n_states())?;
    let pi = softmax_policy(agg, theta, mdp.n_actions())?;
    let analysis = ExactAnalysis::compute(mdp, &pi, mu, interest, T::one(), entropy)?;
    Ok((pi, analysis))
}

/// Exact gradient of the weighted-excursions objective weighted by `m_η`.
/// At `η = 1` this is the gradient of `Σ d_µ i ṽ`.
pub fn true_gradient<T: Scalar>(
    mdp: &FiniteMdp<T>,
    agg: &StateAggregation,
    theta: &[T],
    mu: &TabularPolicy<T>,
    interest: &[T],
    eta: T,
    entropy: EntropyConfig<T>,
) -> Result<Vec<T>, MdpError> {
    let (pi, an) = analysis_for(mdp, agg, theta, mu, interest, entropy)?;
    let i: Vec<T> = an.d_mu.iter().zip(interest).map(|(d, w)| *d * *w).collect();
    let weights = mix(&i, &an.m, eta);
    Ok(weighted_gradient(agg, &pi, &an, &weights, entropy.tau))
}

/// Same per-state gradients weighted by `d_µ`.
pub fn semi_gradient<T: Scalar>(
    mdp: &FiniteMdp<T>,
    agg: &StateAggregation,
    theta: &[T],
    mu: &TabularPolicy<T>,
    entropy: EntropyConfig<T>,
) -> Result<Vec<T>, MdpError> {
    let ones = vec![T::one(); mdp.n_states()];
    let (pi, an) = analysis_for(mdp, agg, theta, mu, &ones, entropy)?;
    Ok(weighted_gradient(agg, &pi, &an, &an.d_mu, entropy.tau))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StationaryConditions<T> {
    pub p1: T,
    pub p2: T,
    pub gap: T,
}

/// The two closed-form conditions on `π(a0|s0)` at a stationary point of the
/// aliased three-state problem.
pub fn counterexample_stationary_conditions<T: Scalar>(tau: T) -> StationaryConditions<T> {
    let three = T::lit(3.0);
    let p1 = (T::one() - tau * three.ln()) / three;
    let p2 = T::one() / ((T::lit(0.25) / tau).exp() + T::one());
    StationaryConditions { p1, p2, gap: p1 - p2 }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StationaryPoint<T> {
    pub theta: Vec<T>,
    pub grad_norm: T,
    pub iterations: usize,
}

fn norm<T: Scalar>(v: &[T]) -> T {
    v.iter().map(|x| *x * *x).sum::<T>().sqrt()
}

/// Gradient ascent on the true gradient (`η = 1`) with Barzilai-Borwein steps,
/// stopping when the gradient norm drops below `tol`.
pub fn find_stationary_point<T: Scalar>(
    mdp: &FiniteMdp<T>,
    agg: &StateAggregation,
    mu: &TabularPolicy<T>,
    interest: &[T],
    entropy: EntropyConfig<T>,
    theta0: &[T],
    tol: T,
    max_iters: usize,
) -> Result<StationaryPoint<T>, MdpError> {
    let grad = |th: &[T]| true_gradient(mdp, agg, th, mu, interest, T::one(), entropy);
    let mut theta = theta0.to_vec();
    let mut g = grad(&theta)?;
    let mut step = T::one();
    let (lo, hi) = (T::lit(1e-3), T::lit(1e3));
    for it in 0..max_iters {
        let gn = norm(&g);
        if gn < tol {
            return Ok(StationaryPoint { theta, grad_norm: gn, iterations: it });
        }
        let next: Vec<T> = theta.iter().zip(&g).map(|(t, d)| *t + step * *d).collect();
        let g_next = grad(&next)?;
        let (mut sy, mut yy) = (T::zero(), T::zero());
        for k in 0..theta.len() {
            let s = next[k] - theta[k];
            let y = g_next[k] - g[k];
            sy += s * y;
            yy += y * y;
        }
        step = if yy > T::zero() { (sy.abs() / yy).max(lo).min(hi) } else { hi };
        theta = next;
        g = g_next;
    }
    let gn = norm(&g);
    Ok(StationaryPoint { theta, grad_norm: gn, iterations: max_iters })
}
