use approx::assert_abs_diff_eq;
use emphace_core::env::{make_chain11, make_counterexample};
use emphace_core::mdp::{
    counterexample_stationary_conditions, emphatic_weighting, exact_values, implicit_weighting, objective,
    semi_gradient, softmax_policy, stationary_distribution, true_gradient, EntropyConfig, ExactAnalysis, FiniteMdp,
    StateAggregation, TabularPolicy,
};
use proptest::prelude::*;

fn behaviour(ns: usize) -> TabularPolicy<f64> {
    TabularPolicy::constant(ns, &[0.25, 0.75]).unwrap()
}

fn policy(ns: usize, p: f64) -> TabularPolicy<f64> {
    TabularPolicy::constant(ns, &[p, 1.0 - p]).unwrap()
}

/// Row-vector power iteration `d ← d P_µ` with no shortcuts.
fn power_stationary(mdp: &FiniteMdp<f64>, mu: &TabularPolicy<f64>) -> Vec<f64> {
    let n = mdp.n_states();
    let mut d = vec![1.0 / n as f64; n];
    for _ in 0..1_000_000 {
        let mut next = vec![0.0; n];
        for s in 0..n {
            for a in 0..mdp.n_actions() {
                for s2 in 0..n {
                    next[s2] += d[s] * mu.prob(s, a) * mdp.p(s, a, s2);
                }
            }
        }
        // Averaging with the previous iterate removes periodicity.
        let next: Vec<f64> = next.iter().zip(&d).map(|(a, b)| 0.5 * (a + b)).collect();
        let change = next.iter().zip(&d).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        d = next;
        if change < 1e-15 {
            break;
        }
    }
    d
}

fn discounted_kernel(mdp: &FiniteMdp<f64>, pi: &TabularPolicy<f64>) -> Vec<Vec<f64>> {
    let n = mdp.n_states();
    let mut k = vec![vec![0.0; n]; n];
    for (s, row) in k.iter_mut().enumerate() {
        for a in 0..mdp.n_actions() {
            for (s2, cell) in row.iter_mut().enumerate() {
                *cell += pi.prob(s, a) * mdp.p(s, a, s2) * mdp.gamma(s, a, s2);
            }
        }
    }
    k
}

fn neumann_weighting(mdp: &FiniteMdp<f64>, pi: &TabularPolicy<f64>, i: &[f64], terms: usize) -> Vec<f64> {
    let k = discounted_kernel(mdp, pi);
    let n = i.len();
    let mut term = i.to_vec();
    let mut total = i.to_vec();
    for _ in 0..terms {
        let mut next = vec![0.0; n];
        for s in 0..n {
            for s2 in 0..n {
                next[s2] += term[s] * k[s][s2];
            }
        }
        if next.iter().all(|x| x.abs() < 1e-300) {
            break;
        }
        total.iter_mut().zip(&next).for_each(|(t, x)| *t += x);
        term = next;
    }
    total
}

#[test]
fn counterexample_weighting_matches_closed_form() {
    let (mdp, _) = make_counterexample();
    let (b, p) = (0.25, 0.9);
    let m = emphatic_weighting(&mdp, &policy(3, p), &behaviour(3), &[1.0; 3], 1.0).unwrap();
    let expected = [0.5, 0.5 * (b + p), 0.5 * (2.0 - b - p)];
    for (x, y) in m.iter().zip(expected) {
        assert_abs_diff_eq!(*x, y, epsilon = 1e-12);
    }
    assert_abs_diff_eq!(expected[1], 0.575, epsilon = 1e-15);
}

#[test]
fn counterexample_behaviour_distribution() {
    let (mdp, _) = make_counterexample();
    let d = stationary_distribution(&mdp, &behaviour(3)).unwrap();
    for (x, y) in d.iter().zip([0.5, 0.125, 0.375]) {
        assert_abs_diff_eq!(*x, y, epsilon = 1e-12);
    }
}

#[test]
fn chain_distribution_matches_power_iteration() {
    let (mdp, _) = make_chain11();
    let mu = behaviour(11);
    let d = stationary_distribution(&mdp, &mu).unwrap();
    let oracle = power_stationary(&mdp, &mu);
    for (x, y) in d.iter().zip(&oracle) {
        assert_abs_diff_eq!(*x, *y, epsilon = 1e-12);
    }
}

#[test]
fn chain_weighting_matches_neumann_series() {
    let (mdp, _) = make_chain11();
    let mu = behaviour(11);
    let pi = policy(11, 0.6);
    let d = stationary_distribution(&mdp, &mu).unwrap();
    let m = emphatic_weighting(&mdp, &pi, &mu, &[1.0; 11], 1.0).unwrap();
    let oracle = neumann_weighting(&mdp, &pi, &d, 1_000_000);
    for (x, y) in m.iter().zip(&oracle) {
        assert_abs_diff_eq!(*x, *y, epsilon = 1e-12);
    }
}

#[test]
fn hand_backed_values() {
    let (mdp, _) = make_counterexample();
    let greedy = exact_values(&mdp, &policy(3, 1.0), EntropyConfig::none()).unwrap();
    for (x, y) in greedy.v.iter().zip([2.0, 2.0, 0.0]) {
        assert_abs_diff_eq!(*x, y, epsilon = 1e-12);
    }
    let uniform = exact_values(&mdp, &policy(3, 0.5), EntropyConfig::none()).unwrap();
    for (x, y) in uniform.v.iter().zip([0.75, 1.0, 0.5]) {
        assert_abs_diff_eq!(*x, y, epsilon = 1e-12);
    }
}

#[test]
fn objectives_under_two_weightings() {
    let (mdp, _) = make_counterexample();
    let pi = policy(3, 1.0);
    let d = stationary_distribution(&mdp, &behaviour(3)).unwrap();
    assert_abs_diff_eq!(objective(&mdp, &pi, &d, EntropyConfig::none()).unwrap(), 1.25, epsilon = 1e-12);
    assert_abs_diff_eq!(objective(&mdp, &pi, &[1.0, 0.0, 0.0], EntropyConfig::none()).unwrap(), 2.0, epsilon = 1e-12);
}

#[test]
fn implicit_weighting_closed_form() {
    let (mdp, _) = make_counterexample();
    let d = implicit_weighting(&mdp, &policy(3, 0.9), &behaviour(3)).unwrap();
    for (x, y) in d.iter().zip([0.5, -0.325, 0.325]) {
        assert_abs_diff_eq!(*x, y, epsilon = 1e-12);
    }
    let d = implicit_weighting(&mdp, &policy(3, 0.25), &behaviour(3)).unwrap();
    for (x, y) in d.iter().zip([0.5, 0.0, 0.0]) {
        assert_abs_diff_eq!(*x, y, epsilon = 1e-12);
    }
}

#[test]
fn stationary_conditions_closed_form() {
    let c = counterexample_stationary_conditions(0.1);
    assert_abs_diff_eq!(c.p1, (1.0 - 0.1 * 3f64.ln()) / 3.0, epsilon = 1e-15);
    assert_abs_diff_eq!(c.p1, 0.29671, epsilon = 1e-5);
    assert_abs_diff_eq!(c.p2, 0.07586, epsilon = 1e-5);
    assert!(c.gap > 0.2);
    let tiny = counterexample_stationary_conditions(1e-3);
    assert_abs_diff_eq!(tiny.p1, 1.0 / 3.0, epsilon = 1e-3);
    assert!(tiny.p2 < 1e-12);
}

#[test]
fn uniform_gradient_follows_breakdown() {
    let (mdp, agg) = make_counterexample();
    let mu = behaviour(3);
    let theta = [0.0; 4];
    let pi = softmax_policy(&agg, &theta, 2).unwrap();
    let an = ExactAnalysis::compute(&mdp, &pi, &mu, &[1.0; 3], 1.0, EntropyConfig::none()).unwrap();
    let g = true_gradient(&mdp, &agg, &theta, &mu, &[1.0; 3], 1.0, EntropyConfig::none()).unwrap();
    let expected: f64 = [1, 2].iter().map(|&s| an.m[s] * 0.5 * (an.q[s * 2] - an.v[s])).sum();
    assert_abs_diff_eq!(g[2], expected, epsilon = 1e-12);
}

#[test]
fn semi_gradient_component_at_quarter_policy() {
    let (mdp, agg) = make_counterexample();
    let mu = behaviour(3);
    let ent = EntropyConfig::new(0.1).unwrap();
    // π(a0|s0) = 0.25, aliased bin at 0.6.
    let theta = [0.25f64.ln(), 0.75f64.ln(), 0.6f64.ln(), 0.4f64.ln()];
    let pi = softmax_policy(&agg, &theta, 2).unwrap();
    let vals = exact_values(&mdp, &pi, ent).unwrap();
    let g = semi_gradient(&mdp, &agg, &theta, &mu, ent).unwrap();
    let soft_gap = (vals.q(0, 0) - ent.tau * 0.25f64.ln()) - (vals.q(0, 1) - ent.tau * 0.75f64.ln());
    assert_abs_diff_eq!(g[0], 0.5 * 0.25 * 0.75 * soft_gap, epsilon = 1e-12);
}

#[test]
fn deterministic_limit_flattens_gradient() {
    let (mdp, agg) = make_counterexample();
    let theta = [40.0, -40.0, 40.0, -40.0];
    let g = true_gradient(&mdp, &agg, &theta, &behaviour(3), &[1.0; 3], 1.0, EntropyConfig::none()).unwrap();
    assert!(g.iter().all(|x| x.abs() < 1e-20));
}

#[test]
fn eta_zero_gradient_is_semi_gradient() {
    let (mdp, agg) = make_counterexample();
    let theta = [0.3, -0.2, 1.1, 0.4];
    let ent = EntropyConfig::new(0.05).unwrap();
    let a = true_gradient(&mdp, &agg, &theta, &behaviour(3), &[1.0; 3], 0.0, ent).unwrap();
    let b = semi_gradient(&mdp, &agg, &theta, &behaviour(3), ent).unwrap();
    assert_eq!(a, b);
}

fn random_mdp() -> impl Strategy<Value = (FiniteMdp<f64>, TabularPolicy<f64>, TabularPolicy<f64>, Vec<f64>)> {
    (2usize..6).prop_flat_map(|n| {
        (
            prop::collection::vec(prop::collection::vec(0.05f64..1.0, n), n * 2),
            prop::collection::vec(0.0f64..0.9, n * 2),
            prop::collection::vec(-1.0f64..1.0, n * 2),
            prop::collection::vec(0.05f64..0.95, n),
            prop::collection::vec(0.05f64..0.95, n),
            prop::collection::vec(0.0f64..2.0, n),
        )
            .prop_map(move |(rows, gammas, rewards, pi, mu, interest)| {
                let mut b = FiniteMdp::builder(n, 2);
                for s in 0..n {
                    for a in 0..2 {
                        let row = &rows[s * 2 + a];
                        let total: f64 = row.iter().sum();
                        for (s2, w) in row.iter().enumerate() {
                            b = b.transition(s, a, s2, w / total, rewards[s * 2 + a], gammas[s * 2 + a]);
                        }
                    }
                }
                for s in 0..n {
                    b = b.start(s, 1.0 / n as f64);
                }
                let to_policy = |p: &[f64]| {
                    TabularPolicy::new(n, 2, p.iter().flat_map(|x| [*x, 1.0 - x]).collect()).unwrap()
                };
                (b.build().unwrap(), to_policy(&pi), to_policy(&mu), interest)
            })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn distribution_is_a_fixed_point((mdp, _pi, mu, _i) in random_mdp()) {
        let d = stationary_distribution(&mdp, &mu).unwrap();
        prop_assert!((d.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        prop_assert!(d.iter().all(|x| *x >= 0.0));
        let n = mdp.n_states();
        for s2 in 0..n {
            let inflow: f64 = (0..n)
                .flat_map(|s| (0..2).map(move |a| (s, a)))
                .map(|(s, a)| d[s] * mu.prob(s, a) * mdp.p(s, a, s2))
                .sum();
            prop_assert!((inflow - d[s2]).abs() < 1e-12);
        }
    }

    #[test]
    fn weighting_satisfies_recursion((mdp, pi, mu, interest) in random_mdp()) {
        let m = emphatic_weighting(&mdp, &pi, &mu, &interest, 1.0).unwrap();
        let d = stationary_distribution(&mdp, &mu).unwrap();
        let n = mdp.n_states();
        for s2 in 0..n {
            let back: f64 = (0..n)
                .flat_map(|s| (0..2).map(move |a| (s, a)))
                .map(|(s, a)| pi.prob(s, a) * mdp.p(s, a, s2) * mdp.gamma(s, a, s2) * m[s])
                .sum();
            prop_assert!((m[s2] - d[s2] * interest[s2] - back).abs() < 1e-10);
        }
    }

    #[test]
    fn eta_mixes_linearly((mdp, pi, mu, interest) in random_mdp(), eta in 0.0f64..1.0) {
        let d = stationary_distribution(&mdp, &mu).unwrap();
        let m = emphatic_weighting(&mdp, &pi, &mu, &interest, 1.0).unwrap();
        let m_eta = emphatic_weighting(&mdp, &pi, &mu, &interest, eta).unwrap();
        for s in 0..mdp.n_states() {
            let expected = (1.0 - eta) * d[s] * interest[s] + eta * m[s];
            prop_assert!((m_eta[s] - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_temperature_soft_values_are_plain((mdp, pi, _mu, _i) in random_mdp()) {
        let plain = exact_values(&mdp, &pi, EntropyConfig::none()).unwrap();
        let soft = exact_values(&mdp, &pi, EntropyConfig::new(0.0).unwrap()).unwrap();
        for (a, b) in plain.v.iter().zip(&soft.v) {
            prop_assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn implicit_weighting_inverts_to_distribution((mdp, pi, mu, _i) in random_mdp()) {
        let implicit = implicit_weighting(&mdp, &pi, &mu).unwrap();
        let d = stationary_distribution(&mdp, &mu).unwrap();
        let back = neumann_weighting(&mdp, &pi, &implicit, 100_000);
        for (a, b) in back.iter().zip(&d) {
            prop_assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn gradient_matches_finite_differences(
        theta in prop::collection::vec(-3.0f64..3.0, 20),
        tau in prop_oneof![Just(0.0), 0.01f64..0.5],
        chain in any::<bool>(),
    ) {
        let (mdp, agg) = if chain { make_chain11() } else { make_counterexample() };
        let theta = &theta[..agg.n_bins() * 2];
        let ns = mdp.n_states();
        let mu = behaviour(ns);
        let ent = EntropyConfig::new(tau).unwrap();
        let d = stationary_distribution(&mdp, &mu).unwrap();
        let ones = vec![1.0; ns];
        let j = |th: &[f64]| objective(&mdp, &softmax_policy(&agg, th, 2).unwrap(), &d, ent).unwrap();
        let g = true_gradient(&mdp, &agg, theta, &mu, &ones, 1.0, ent).unwrap();
        let h = 1e-6;
        let fd: Vec<f64> = (0..theta.len())
            .map(|k| {
                let (mut up, mut down) = (theta.to_vec(), theta.to_vec());
                up[k] += h;
                down[k] -= h;
                (j(&up) - j(&down)) / (2.0 * h)
            })
            .collect();
        let scale = fd.iter().map(|x| x.abs()).fold(1e-3, f64::max);
        let err = g.iter().zip(&fd).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        prop_assert!(err / scale < 1e-6, "err {err} scale {scale}");
    }

    #[test]
    fn weighting_is_irrelevant_when_every_state_is_stationary(
        weights in prop::collection::vec(prop::collection::vec(0.0f64..5.0, 3), 10),
    ) {
        // Without aliasing and with τ > 0 the unique stationary point zeroes
        // every per-state gradient, so any nonnegative weighting gives zero.
        let (mdp, _) = make_counterexample();
        let agg = StateAggregation::tabular(3);
        let mu = behaviour(3);
        let ent = EntropyConfig::new(0.2).unwrap();
        let sp = emphace_core::mdp::find_stationary_point(&mdp, &agg, &mu, &[1.0; 3], ent, &[0.0; 6], 1e-13, 200_000)
            .unwrap();
        let pi = softmax_policy(&agg, &sp.theta, 2).unwrap();
        let vals = exact_values(&mdp, &pi, ent).unwrap();
        for w in &weights {
            for s in 0..3 {
                for a in 0..2 {
                    let adv = vals.q(s, a) - ent.tau * pi.prob(s, a).ln() - vals.v[s];
                    let component = w[s] * pi.prob(s, a) * adv;
                    prop_assert!(component.abs() < 1e-10, "component {component}");
                }
            }
        }
    }
}
