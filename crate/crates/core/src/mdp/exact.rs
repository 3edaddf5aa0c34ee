use serde::Serialize;

use super::{check_len, EntropyConfig, FiniteMdp, MdpError, TabularPolicy};
use crate::linalg::{Lu, Matrix};
use crate::scalar::Scalar;

const POWER_TOL: f64 = 1e-12;
const POWER_MAX_ITERS: usize = 1_000_000;

/// State-to-state kernel `Σ_a π(a|s) P(s,a,s')`, optionally discounted.
fn state_kernel<T: Scalar>(mdp: &FiniteMdp<T>, pi: &TabularPolicy<T>, discounted: bool) -> Matrix<T> {
    let n = mdp.n_states();
    let mut k = Matrix::zeros(n);
    for s in 0..n {
        for a in 0..mdp.n_actions() {
            let pa = pi.prob(s, a);
            if pa == T::zero() {
                continue;
            }
            for s2 in 0..n {
                let g = if discounted { mdp.gamma(s, a, s2) } else { T::one() };
                k[(s, s2)] += pa * mdp.p(s, a, s2) * g;
            }
        }
    }
    k
}

fn identity_minus<T: Scalar>(k: &Matrix<T>) -> Matrix<T> {
    let mut m = Matrix::identity(k.dim());
    for i in 0..k.dim() {
        for j in 0..k.dim() {
            m[(i, j)] -= k[(i, j)];
        }
    }
    m
}

fn discounted_lu<T: Scalar>(mdp: &FiniteMdp<T>, pi: &TabularPolicy<T>) -> Result<Lu<T>, MdpError> {
    identity_minus(&state_kernel(mdp, pi, true)).lu().ok_or(MdpError::NonTerminatingPolicy)
}

fn residual<T: Scalar>(k: &Matrix<T>, d: &[T]) -> T {
    k.vec_mul(d).iter().zip(d).fold(T::zero(), |m, (a, b)| m.max((*a - *b).abs()))
}

/// Limiting state distribution of the chain induced by `mu`.
pub fn stationary_distribution<T: Scalar>(
    mdp: &FiniteMdp<T>,
    mu: &TabularPolicy<T>,
) -> Result<Vec<T>, MdpError> {
    mdp.check_policy(mu)?;
    let n = mdp.n_states();
    let k = state_kernel(mdp, mu, false);
    let tol = T::lit(POWER_TOL).max(T::epsilon() * T::lit(256.0));

    let mut a = Matrix::from_fn(n, |i, j| k[(j, i)] - if i == j { T::one() } else { T::zero() });
    for j in 0..n {
        a[(n - 1, j)] = T::one();
    }
    if let Some(lu) = a.lu() {
        let mut rhs = vec![T::zero(); n];
        rhs[n - 1] = T::one();
        let d = lu.solve(&rhs);
        let neg_tol = -tol * T::lit(1e3);
        if d.iter().all(|x| x.is_finite() && *x >= neg_tol) {
            let mut d: Vec<T> = d.into_iter().map(|x| x.max(T::zero())).collect();
            let total: T = d.iter().copied().sum();
            d.iter_mut().for_each(|x| *x /= total);
            if residual(&k, &d) < tol * T::lit(1e3) {
                return Ok(d);
            }
        }
    }
    power_iteration(&k, mdp.d0(), tol)
}

/// Iterates the lazy chain `(I + K) / 2`, which shares the stationary
/// vectors of `K` but is aperiodic.
fn power_iteration<T: Scalar>(k: &Matrix<T>, start: &[T], tol: T) -> Result<Vec<T>, MdpError> {
    let half = T::lit(0.5);
    let mut d = start.to_vec();
    for _ in 0..POWER_MAX_ITERS {
        let kd = k.vec_mul(&d);
        let next: Vec<T> = d.iter().zip(&kd).map(|(a, b)| half * (*a + *b)).collect();
        let change = next.iter().zip(&d).fold(T::zero(), |m, (a, b)| m.max((*a - *b).abs()));
        d = next;
        if change < tol {
            let total: T = d.iter().copied().sum();
            d.iter_mut().for_each(|x| *x /= total);
            return Ok(d);
        }
    }
    Err(MdpError::NoStationaryDistribution)
}

/// Generalised emphatic weighting `m_η = (1-η) i + η m` with
/// `mᵀ = iᵀ (I - P_{π,γ})⁻¹` and `i(s) = d_µ(s) interest(s)`.
pub fn emphatic_weighting<T: Scalar>(
    mdp: &FiniteMdp<T>,
    pi: &TabularPolicy<T>,
    mu: &TabularPolicy<T>,
    interest: &[T],
    eta: T,
) -> Result<Vec<T>, MdpError> {
    mdp.check_policy(pi)?;
    check_len(mdp.n_states(), interest.len())?;
    let d_mu = stationary_distribution(mdp, mu)?;
    let i: Vec<T> = d_mu.iter().zip(interest).map(|(d, w)| *d * *w).collect();
    let m = discounted_lu(mdp, pi)?.solve_transpose(&i);
    Ok(mix(&i, &m, eta))
}

pub(crate) fn mix<T: Scalar>(i: &[T], m: &[T], eta: T) -> Vec<T> {
    if eta == T::one() {
        return m.to_vec();
    }
    if eta == T::zero() {
        return i.to_vec();
    }
    i.iter().zip(m).map(|(a, b)| (T::one() - eta) * *a + eta * *b).collect()
}

/// State and action values; soft values when `tau > 0`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Values<T> {
    pub v: Vec<T>,
    /// Row-major `(s, a)`.
    pub q: Vec<T>,
    #[serde(skip)]
    n_actions: usize,
}

impl<T: Scalar> Values<T> {
    pub fn q(&self, s: usize, a: usize) -> T {
        self.q[s * self.n_actions + a]
    }
}

/// Solves `ṽ = r_π + τ H(π) + P_{π,γ} ṽ`, then `q̃(s,a) = Σ P [r + γ ṽ(s')]`.
pub fn exact_values<T: Scalar>(
    mdp: &FiniteMdp<T>,
    pi: &TabularPolicy<T>,
    entropy: EntropyConfig<T>,
) -> Result<Values<T>, MdpError> {
    mdp.check_policy(pi)?;
    let lu = discounted_lu(mdp, pi)?;
    values_with(mdp, pi, entropy, &lu)
}

fn values_with<T: Scalar>(
    mdp: &FiniteMdp<T>,
    pi: &TabularPolicy<T>,
    entropy: EntropyConfig<T>,
    lu: &Lu<T>,
) -> Result<Values<T>, MdpError> {
    let (ns, na) = (mdp.n_states(), mdp.n_actions());
    let rhs: Vec<T> = (0..ns)
        .map(|s| {
            let r: T = (0..na).map(|a| pi.prob(s, a) * mdp.expected_reward(s, a)).sum();
            if entropy.tau > T::zero() {
                r + entropy.tau * pi.entropy(s)
            } else {
                r
            }
        })
        .collect();
    let v = lu.solve(&rhs);
    if v.iter().any(|x| !x.is_finite()) {
        return Err(MdpError::NonTerminatingPolicy);
    }
    let mut q = vec![T::zero(); ns * na];
    for s in 0..ns {
        for a in 0..na {
            q[s * na + a] = (0..ns)
                .map(|s2| mdp.p(s, a, s2) * (mdp.r(s, a, s2) + mdp.gamma(s, a, s2) * v[s2]))
                .sum();
        }
    }
    Ok(Values { v, q, n_actions: na })
}

/// `Σ_s weighting(s) ṽ_π(s)`.
pub fn objective<T: Scalar>(
    mdp: &FiniteMdp<T>,
    pi: &TabularPolicy<T>,
    weighting: &[T],
    entropy: EntropyConfig<T>,
) -> Result<T, MdpError> {
    check_len(mdp.n_states(), weighting.len())?;
    let vals = exact_values(mdp, pi, entropy)?;
    Ok(weighting.iter().zip(&vals.v).map(|(w, v)| *w * *v).sum())
}

/// Signed weighting `d = d_µᵀ (I - P_{π,γ})` under which the semi-gradient is
/// locally a gradient.
pub fn implicit_weighting<T: Scalar>(
    mdp: &FiniteMdp<T>,
    pi: &TabularPolicy<T>,
    mu: &TabularPolicy<T>,
) -> Result<Vec<T>, MdpError> {
    mdp.check_policy(pi)?;
    let d_mu = stationary_distribution(mdp, mu)?;
    Ok(identity_minus(&state_kernel(mdp, pi, true)).vec_mul(&d_mu))
}

/// All exact quantities for one `(π, µ, interest, η, τ)` configuration.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExactAnalysis<T> {
    pub d_mu: Vec<T>,
    pub m: Vec<T>,
    pub m_eta: Vec<T>,
    pub v: Vec<T>,
    pub q: Vec<T>,
    pub v_tilde: Vec<T>,
    pub q_tilde: Vec<T>,
    pub implicit: Vec<T>,
    /// `Σ_s d_µ(s) interest(s) ṽ(s)`.
    pub j: T,
}

impl<T: Scalar> ExactAnalysis<T> {
    pub fn compute(
        mdp: &FiniteMdp<T>,
        pi: &TabularPolicy<T>,
        mu: &TabularPolicy<T>,
        interest: &[T],
        eta: T,
        entropy: EntropyConfig<T>,
    ) -> Result<Self, MdpError> {
        mdp.check_policy(pi)?;
        check_len(mdp.n_states(), interest.len())?;
        let d_mu = stationary_distribution(mdp, mu)?;
        let i: Vec<T> = d_mu.iter().zip(interest).map(|(d, w)| *d * *w).collect();
        let lu = discounted_lu(mdp, pi)?;
        let m = lu.solve_transpose(&i);
        let m_eta = mix(&i, &m, eta);
        let plain = values_with(mdp, pi, EntropyConfig::none(), &lu)?;
        let soft = values_with(mdp, pi, entropy, &lu)?;
        let implicit = identity_minus(&state_kernel(mdp, pi, true)).vec_mul(&d_mu);
        let j = i.iter().zip(&soft.v).map(|(a, b)| *a * *b).sum();
        Ok(Self {
            d_mu,
            m,
            m_eta,
            v: plain.v,
            q: plain.q,
            v_tilde: soft.v,
            q_tilde: soft.q,
            implicit,
            j,
        })
    }
}
