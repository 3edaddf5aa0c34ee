use approx::assert_abs_diff_eq;
use emphace_core::actors::{GaussianLinearPolicy, SoftmaxLinearPolicy};
use emphace_core::critics::{CriticAlg, CriticState};
use emphace_core::emphasis::{
    mix_emphasis, DirectEstimator, DirectVariant, EmphasisTrace, IdealTrace, WeightedTransition,
};
use emphace_core::env::{make_chain11, make_counterexample, sample_discrete};
use emphace_core::features::Features;
use emphace_core::mdp::{exact_values, stationary_distribution, EntropyConfig, FiniteMdp, TabularPolicy};
use emphace_core::Prng;
use proptest::prelude::*;
use rand::SeedableRng;

fn one_hot(n: usize) -> Vec<Features<f64>> {
    (0..n).map(|s| Features::binary(n, vec![s])).collect()
}

fn counterexample_batch<'a>(
    mdp: &FiniteMdp<f64>,
    pi: &TabularPolicy<f64>,
    mu: &TabularPolicy<f64>,
    x: &'a [Features<f64>],
) -> Vec<WeightedTransition<'a, f64>> {
    let d = stationary_distribution(mdp, mu).unwrap();
    let mut batch = Vec::new();
    for s in 0..3 {
        for a in 0..2 {
            for s2 in 0..3 {
                let p = mdp.p(s, a, s2);
                if p > 0.0 {
                    batch.push(WeightedTransition {
                        weight: d[s] * mu.prob(s, a) * p,
                        x_prev: &x[s],
                        x_t: &x[s2],
                        rho_prev: pi.prob(s, a) / mu.prob(s, a),
                        gamma_t: mdp.gamma(s, a, s2),
                        i_t: 1.0,
                    });
                }
            }
        }
    }
    batch
}

#[test]
fn direct_estimator_reaches_weighting_ratio() {
    let (mdp, _) = make_counterexample();
    let pi = TabularPolicy::constant(3, &[0.9, 0.1]).unwrap();
    let mu = TabularPolicy::constant(3, &[0.25, 0.75]).unwrap();
    let x = one_hot(3);
    let batch = counterexample_batch(&mdp, &pi, &mu, &x);
    // m = (0.5, 0.575, 0.425) over d = (0.5, 0.125, 0.375).
    let target = [1.0, 4.6, 0.425 / 0.375];
    for variant in [DirectVariant::SemiGradient, DirectVariant::Gradient] {
        let mut est = DirectEstimator::new(3, 0.5, variant);
        for _ in 0..20_000 {
            est.expected_update(&batch).unwrap();
        }
        for (p, t) in est.phi.iter().zip(target) {
            assert_abs_diff_eq!(*p, t, epsilon = 1e-9);
        }
        assert_abs_diff_eq!(est.emphasis_value(1.0, &x[1], 1.0), 4.6, epsilon = 1e-9);
    }
}

#[test]
fn sampled_direct_estimator_settles_near_ratio() {
    let (mdp, _) = make_counterexample();
    let x = one_hot(3);
    let mut rng = Prng::seed_from_u64(3);
    let mut est = DirectEstimator::new(3, 0.01, DirectVariant::SemiGradient);
    let (mut s, mut s_prev, mut rho_prev, mut gamma) = (0usize, 0usize, 0.0, 0.0);
    let mut avg = [0.0; 3];
    let steps = 400_000;
    for t in 0..steps {
        let a = sample_discrete(&[0.25, 0.75], &mut rng);
        let s2 = (0..3).find(|&k| mdp.p(s, a, k) > 0.0).unwrap();
        if t > 0 {
            est.update(&x[s_prev], &x[s], rho_prev, gamma, 1.0).unwrap();
        }
        rho_prev = [0.9, 0.1][a] / [0.25, 0.75][a];
        gamma = mdp.gamma(s, a, s2);
        s_prev = s;
        s = s2;
        if t >= steps / 2 {
            let k = (t - steps / 2 + 1) as f64;
            avg.iter_mut().zip(&est.phi).for_each(|(m, p)| *m += (p - *m) / k);
        }
    }
    for (p, t) in avg.iter().zip([1.0, 4.6, 0.425 / 0.375]) {
        assert!((p - t).abs() < 0.1 * t, "{avg:?}");
    }
}

#[test]
fn ideal_trace_matches_trace_under_a_fixed_policy() {
    let (mdp, _) = make_counterexample();
    let pi = [0.9, 0.1];
    let mu = [0.25, 0.75];
    let mut rng = Prng::seed_from_u64(11);
    let mut trace = EmphasisTrace::new(0.7);
    let mut ideal: IdealTrace<f64, usize, usize> = IdealTrace::new(0.7);
    let (mut s, mut rho_prev, mut gamma) = (0usize, 0.0, 0.0);
    for _ in 0..1000 {
        let m = trace.update(rho_prev, gamma, 1.0);
        ideal.push_state(s, gamma, 1.0);
        let (f_ideal, m_ideal) = ideal.compute(|_, a| pi[*a]);
        assert_abs_diff_eq!(trace.f, f_ideal, epsilon = 1e-12);
        assert_abs_diff_eq!(m, m_ideal, epsilon = 1e-12);
        let a = sample_discrete(&mu, &mut rng);
        ideal.push_action(a, mu[a]);
        let s2 = (0..3).find(|&k| mdp.p(s, a, k) > 0.0).unwrap();
        rho_prev = pi[a] / mu[a];
        gamma = mdp.gamma(s, a, s2);
        s = s2;
    }
}

#[test]
fn expected_td_sweeps_recover_values() {
    let (mdp, _) = make_chain11();
    let mu = TabularPolicy::constant(11, &[0.25, 0.75]).unwrap();
    let d = stationary_distribution(&mdp, &mu).unwrap();
    let exact = exact_values(&mdp, &mu, EntropyConfig::none()).unwrap();
    let x = one_hot(11);
    let mut critic = CriticState::new(CriticAlg::Td, 11, 0.1, 0.0);
    for k in 0..20_000 {
        // Decaying sweep size removes the ordering bias of in-place updates.
        let c = 1000.0 / (1000.0 + k as f64);
        for s in 0..11 {
            for a in 0..2 {
                for s2 in 0..11 {
                    let p = mdp.p(s, a, s2);
                    if p > 0.0 {
                        critic.alpha = c * d[s] * mu.prob(s, a) * p;
                        critic.update(&x[s], &x[s2], mdp.r(s, a, s2), mdp.gamma(s, a, s2), 1.0, 1.0).unwrap();
                    }
                }
            }
        }
    }
    for s in 0..11 {
        assert_abs_diff_eq!(critic.predict(&x[s]).unwrap(), exact.v[s], epsilon = 1e-3);
    }
}

#[test]
fn critic_rejects_wrong_dimension() {
    let mut critic = CriticState::<f64>::new(CriticAlg::Tdrc, 3, 0.1, 0.0);
    let x = Features::binary(4, vec![0]);
    assert!(critic.update(&x, &x, 0.0, 0.9, 1.0, 1.0).is_err());
}

proptest! {
    #[test]
    fn zero_eta_emphasis_is_the_interest(i in -10.0f64..10.0, f in -1e6f64..1e6) {
        prop_assert_eq!(mix_emphasis(i, f, 0.0).to_bits(), i.to_bits());
        let mut t = EmphasisTrace::new(0.0);
        t.f = f;
        prop_assert_eq!(t.update(2.0, 1.0, i).to_bits(), i.to_bits());
    }

    #[test]
    fn trace_follows_its_recursion(
        steps in prop::collection::vec((0.0f64..5.0, prop_oneof![Just(0.0), 0.0f64..1.0], 0.0f64..2.0), 1..50),
        eta in 0.0f64..1.0,
    ) {
        let mut t = EmphasisTrace::new(eta);
        let mut f = 0.0;
        for (rho, gamma, i) in steps {
            let m = t.update(rho, gamma, i);
            f = gamma * rho * f + i;
            prop_assert!((t.f - f).abs() <= 1e-12 * f.abs().max(1.0));
            prop_assert!(t.f >= i - 1e-12);
            prop_assert!((m - ((1.0 - eta) * i + eta * f)).abs() <= 1e-12 * f.abs().max(1.0));
        }
    }

    #[test]
    fn softmax_score_matches_finite_differences(
        theta in prop::collection::vec(-2.0f64..2.0, 9),
        xs in prop::collection::vec(-1.0f64..1.0, 3),
        a in 0usize..3,
    ) {
        let mut pol = SoftmaxLinearPolicy::new(3, 3);
        pol.theta = theta.clone();
        let x = Features::dense(xs);
        let g = pol.log_prob_grad(&x, a);
        let h = 1e-6;
        for k in 0..theta.len() {
            let (mut up, mut down) = (pol.clone(), pol.clone());
            up.theta[k] += h;
            down.theta[k] -= h;
            let fd = (up.prob(&x, a).ln() - down.prob(&x, a).ln()) / (2.0 * h);
            prop_assert!((fd - g[k]).abs() < 1e-6 * fd.abs().max(1.0));
        }
        let probs = pol.probs(&x);
        prop_assert!((probs.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn gaussian_score_matches_finite_differences(
        mean in prop::collection::vec(-1.0f64..1.0, 2),
        std in prop::collection::vec(-0.5f64..1.0, 2),
        xs in prop::collection::vec(0.1f64..1.0, 2),
        a in -2.0f64..2.0,
    ) {
        let mut pol = GaussianLinearPolicy::new(2);
        pol.theta_mean = mean;
        pol.theta_std = std;
        let x = Features::dense(xs);
        let g = pol.log_prob_grad(&x, a);
        let h = 1e-6;
        for k in 0..4 {
            let (mut up, mut down) = (pol.clone(), pol.clone());
            let bump = |p: &mut GaussianLinearPolicy<f64>, d: f64| {
                if k < 2 { p.theta_mean[k] += d } else { p.theta_std[k - 2] += d }
            };
            bump(&mut up, h);
            bump(&mut down, -h);
            let fd = (up.log_density(&x, a) - down.log_density(&x, a)) / (2.0 * h);
            prop_assert!((fd - g[k]).abs() < 1e-5 * fd.abs().max(1.0));
        }
    }
}
