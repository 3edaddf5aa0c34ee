use approx::assert_abs_diff_eq;
use emphace_core::env::constants::{mountain_car::GOAL_POSITION, virtual_office::WALL_RGB};
use emphace_core::env::{
    make_chain11, make_counterexample, make_env, Action, EnvState, Environment, MountainCar, Observation,
    TabularEnv, VirtualOffice, ENV_NAMES,
};
use emphace_core::evaluation::{build_steady_state_pool, evaluate, EvalProtocol, Objective};
use emphace_core::features::FeatureMap;
use emphace_core::mdp::{stationary_distribution, TabularPolicy};
use emphace_core::Prng;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};

fn state_of(env: &dyn Environment) -> usize {
    match env.state() {
        EnvState::Discrete(s) => s,
        other => panic!("not discrete: {other:?}"),
    }
}

#[test]
fn every_named_environment_builds() {
    for name in ENV_NAMES {
        let env = make_env(name).unwrap();
        assert_eq!(env.name(), name);
    }
    assert!(make_env("cartpole").is_err());
}

#[test]
fn sampled_transitions_match_the_model() {
    for mut env in [TabularEnv::counterexample(), TabularEnv::chain11()] {
        let mdp = env.mdp().clone();
        let (ns, na) = (mdp.n_states(), mdp.n_actions());
        let mut rng = Prng::seed_from_u64(5);
        env.reset(&mut rng);
        let mut counts = vec![0u64; ns * na * ns];
        let mut visits = vec![0u64; ns * na];
        for _ in 0..1_000_000 {
            let s = env.current();
            let a = rng.random_range(0..na);
            env.step(Action::Discrete(a), &mut rng).unwrap();
            counts[(s * na + a) * ns + env.current()] += 1;
            visits[s * na + a] += 1;
        }
        for s in 0..ns {
            for a in 0..na {
                let n = visits[s * na + a] as f64;
                for s2 in 0..ns {
                    let p = mdp.p(s, a, s2);
                    let freq = counts[(s * na + a) * ns + s2] as f64 / n;
                    let se = (p * (1.0 - p) / n).sqrt().max(1e-12);
                    assert!((freq - p).abs() <= 3.0 * se + 1e-12, "cell ({s},{a},{s2}): {freq} vs {p}");
                }
            }
        }
    }
}

#[test]
fn episode_start_follows_a_zero_discount() {
    let mut env = make_env("chain11").unwrap();
    let mut rng = Prng::seed_from_u64(9);
    env.reset(&mut rng);
    for _ in 0..10_000 {
        let step = env.step(Action::Discrete(rng.random_range(0..2)), &mut rng).unwrap();
        assert_eq!(step.episode_start, step.gamma == 0.0);
    }
}

#[test]
fn chain_episodes_last_six_steps() {
    let (mdp, agg) = make_chain11();
    // Enumerate every action sequence from the start state.
    let mut frontier = vec![(0usize, 0usize)];
    let mut lengths = Vec::new();
    while let Some((s, len)) = frontier.pop() {
        for a in 0..2 {
            for s2 in 0..11 {
                if mdp.p(s, a, s2) > 0.0 {
                    if mdp.gamma(s, a, s2) == 0.0 {
                        lengths.push(len + 1);
                    } else {
                        frontier.push((s2, len + 1));
                    }
                }
            }
        }
    }
    assert!(lengths.iter().all(|&l| l == 6));
    let shared: Vec<usize> = (0..11).filter(|&s| agg.alias(s).count() > 1).collect();
    assert_eq!(shared, vec![9, 10]);
    for mu in [[0.5, 0.5], [0.1, 0.9]] {
        let d = stationary_distribution(&mdp, &TabularPolicy::constant(11, &mu).unwrap()).unwrap();
        assert_abs_diff_eq!(d[0], 1.0 / 6.0, epsilon = 1e-12);
    }
}

#[test]
fn counterexample_aliasing() {
    let (_, agg) = make_counterexample();
    assert_eq!(agg.bin(1), agg.bin(2));
    assert_ne!(agg.bin(0), agg.bin(1));
}

#[test]
fn continuous_counterexample_branching() {
    let mut env = make_env("continuous-counterexample").unwrap();
    let mut rng = Prng::seed_from_u64(1);
    env.reset(&mut rng);
    let n = 200_000;
    let mut to_s1 = 0;
    for _ in 0..n {
        env.set_state(&EnvState::Discrete(0)).unwrap();
        let step = env.step(Action::Continuous(0.0), &mut rng).unwrap();
        assert_eq!(step.reward, 0.0);
        to_s1 += usize::from(state_of(env.as_ref()) == 1);
    }
    let frac = to_s1 as f64 / n as f64;
    assert!((frac - 0.5).abs() < 3.0 * (0.25 / n as f64).sqrt());
    env.set_state(&EnvState::Discrete(1)).unwrap();
    assert_abs_diff_eq!(env.step(Action::Continuous(0.0), &mut rng).unwrap().reward, 1.0, epsilon = 1e-15);
}

#[test]
fn behaviour_mean_logistic_matches_monte_carlo() {
    use emphace_core::env::ActionLaw;
    let law = ActionLaw::Gaussian { mean: 1.0, std: 1.0 };
    let exact = law.expect(|a| 1.0 / (1.0 + (-a).exp()));
    let mut rng = Prng::seed_from_u64(2);
    let n = 10_000_000;
    let mc = (0..n).map(|_| 1.0 / (1.0 + (-law.sample(&mut rng)).exp())).sum::<f64>() / n as f64;
    assert_abs_diff_eq!(exact, mc, epsilon = 1e-3);
}

#[test]
fn rocking_the_car_reaches_the_goal() {
    // Pushing with the velocity pumps energy into the oscillation.
    let (mut x, mut v) = (-0.5, 0.0);
    let mut reached = false;
    for _ in 0..1000 {
        let a = if v >= 0.0 { 2 } else { 0 };
        (x, v) = MountainCar::dynamics(x, v, a);
        if x >= GOAL_POSITION {
            reached = true;
            break;
        }
    }
    assert!(reached);
}

#[test]
fn office_wall_view_is_wall_coloured() {
    let office = VirtualOffice::new();
    // Top-left room cell facing north looks straight at the outer wall.
    let s = office.state_index(1, 4, 0).unwrap();
    let obs = office.observation_of(s);
    assert_eq!(obs.len(), 27);
    for px in obs.chunks(3) {
        assert_eq!(px, WALL_RGB);
    }
    let map = FeatureMap::IdentityBias { dim: 27 };
    let x = map.featurize::<f64>(&Observation::Vector(obs)).unwrap();
    assert_eq!(x.dim(), 28);
    assert_eq!(x.to_dense()[27], 1.0);
}

#[test]
fn office_rooms_look_identical() {
    let office = VirtualOffice::new();
    let mut checked = 0;
    for row in 1..=2 {
        for col in 4..=9 {
            for heading in 0..4 {
                let (Some(a), Some(b)) = (office.state_index(row, col, heading), office.state_index(row + 3, col, heading))
                else {
                    continue;
                };
                assert_eq!(office.observation_of(a), office.observation_of(b), "({row},{col},{heading})");
                checked += 1;
            }
        }
    }
    assert!(checked > 30);
}

#[test]
fn counterexample_pool_follows_behaviour_distribution() {
    let env = TabularEnv::counterexample();
    let d = stationary_distribution(env.mdp(), &TabularPolicy::constant(3, &[0.25, 0.75]).unwrap()).unwrap();
    let mut rng = Prng::seed_from_u64(4);
    let pool = build_steady_state_pool(&env, 700_000, 7, &mut rng).unwrap();
    let n = pool.len() as f64;
    for (s, p) in d.iter().enumerate() {
        let freq = pool.iter().filter(|x| **x == EnvState::Discrete(s)).count() as f64 / n;
        assert!((freq - p).abs() < 3.0 * (p * (1.0 - p) / n).sqrt(), "state {s}: {freq} vs {p}");
    }
}

#[test]
fn greedy_counterexample_returns() {
    let env = TabularEnv::counterexample();
    let mut always_a0 = |_: &Observation, _: &mut Prng| Action::Discrete(0);
    let mut rng = Prng::seed_from_u64(6);
    let mut protocol = EvalProtocol::new(50, 1000, 0.95);
    let episodic = evaluate(&mut always_a0, &env, Objective::Episodic, &protocol, &mut rng).unwrap();
    assert_abs_diff_eq!(episodic.mean, 1.9, epsilon = 1e-12);

    protocol.n_rollouts = 20_000;
    protocol.steady_state_pool = build_steady_state_pool(&env, 140_000, 7, &mut rng).unwrap();
    let exc = evaluate(&mut always_a0, &env, Objective::Excursions, &protocol, &mut rng).unwrap();
    // Per-start returns are 1.9, 2 and 0 under d = (0.5, 0.125, 0.375).
    let exact = 0.5 * 1.9 + 0.125 * 2.0;
    assert!((exc.mean - exact).abs() < 3.0 * exc.stderr, "{} vs {exact}", exc.mean);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn tile_coding_activity(x in -1.2f64..0.5, v in -0.07f64..0.07) {
        let map = FeatureMap::tile_coder(8, 4, vec![-1.2, -0.07], vec![0.5, 0.07], true).unwrap();
        let obs = Observation::Vector(vec![x, v]);
        let f = map.featurize::<f64>(&obs).unwrap();
        prop_assert_eq!(f.indices().len(), 9);
        prop_assert_eq!(*f.indices().last().unwrap(), map.n_features() - 1);
        prop_assert_eq!(map.featurize::<f64>(&obs).unwrap(), f.clone());

        // One tile width along position changes at most one index per tiling.
        let width = 1.7 / 4.0;
        if x + width <= 0.5 {
            let g = map.featurize::<f64>(&Observation::Vector(vec![x + width, v])).unwrap();
            let changed = f.indices().iter().filter(|i| !g.indices().contains(i)).count();
            prop_assert!(changed <= 8);
        }
    }

    #[test]
    fn puddle_features_have_five_active(x in 0.0f64..1.0, y in 0.0f64..1.0) {
        let map = FeatureMap::tile_coder(4, 2, vec![0.0, 0.0], vec![1.0, 1.0], true).unwrap();
        let f = map.featurize::<f64>(&Observation::Vector(vec![x, y])).unwrap();
        prop_assert_eq!(f.indices().len(), 5);
    }
}

#[test]
fn shared_tile_cell_gives_identical_features() {
    let map = FeatureMap::tile_coder(4, 2, vec![0.0, 0.0], vec![1.0, 1.0], true).unwrap();
    // With offsets k/4 of a half-width tile, every tiling boundary lies on a
    // multiple of 1/8, so two points inside (0.01, 0.12) share every cell.
    let a = map.featurize::<f64>(&Observation::Vector(vec![0.01, 0.02])).unwrap();
    let b = map.featurize::<f64>(&Observation::Vector(vec![0.11, 0.12])).unwrap();
    assert_eq!(a, b);
}
