use coopkitchen::eval::{
    build_start_pool, default_population, episode_return, sample_start, validation_reward,
    EvalConfig, EvalError, PoolError, StartStatePool,
};
use coopkitchen::grid::Layout;
use coopkitchen::policy::{PolicySpec, Population};
use coopkitchen::rollout::Trajectory;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn spec(text: &str) -> PolicySpec {
    PolicySpec::parse(text).unwrap()
}

fn layout(name: &str) -> Layout {
    coopkitchen::assets::layout(name).unwrap()
}

fn trajectories(layout: &str) -> Vec<Trajectory> {
    coopkitchen::assets::trajectory_files()
        .iter()
        .filter(|(n, _)| n.starts_with(&format!("{layout}_")))
        .map(|(_, t)| Trajectory::from_json(t).unwrap())
        .collect()
}

proptest! {
    #[test]
    fn discounted_return_matches_closed_form(
        rewards in prop::collection::vec(prop::sample::select(vec![0u32, 0, 0, 20, 40]), 0..400),
        gamma in 0.5f64..=1.0,
    ) {
        let want: f64 = rewards.iter().enumerate().map(|(t, r)| gamma.powi(t as i32) * *r as f64).sum();
        let got = episode_return(&rewards, gamma);
        prop_assert!((got - want).abs() <= 1e-12 * want.abs().max(1.0), "{got} vs {want}");
        let deliveries: u32 = rewards.iter().map(|r| r / 20).sum();
        prop_assert_eq!(episode_return(&rewards, 1.0), 20.0 * deliveries as f64);
    }

    #[test]
    fn pool_takes_every_stride_th_state(stride in 1usize..40) {
        let l = layout("room");
        let trajs = trajectories("room");
        let pool = build_start_pool(&trajs, &l, stride).unwrap();
        let mut expected = Vec::new();
        for t in &trajs {
            for mut s in t.states(&l).into_iter().step_by(stride) {
                s.tick = 0;
                expected.push(s);
            }
        }
        prop_assert_eq!(pool.states(), &expected[..]);
        let per: usize = trajs.iter().map(|t| (t.len() + 1).div_ceil(stride)).sum();
        prop_assert_eq!(pool.len(), per);
        prop_assert!(pool.states().iter().all(|s| s.tick == 0 && s.validate(&l).is_ok()));
    }
}

#[test]
fn pool_rejects_bad_input() {
    let l = layout("room");
    assert!(matches!(
        build_start_pool(&trajectories("room"), &l, 0),
        Err(PoolError::ZeroStride)
    ));
    assert!(matches!(
        build_start_pool(&trajectories("corridor"), &l, 10),
        Err(PoolError::LayoutMismatch { .. })
    ));
    assert!(matches!(
        StartStatePool::new(&l, vec![], None),
        Err(PoolError::EmptyPool)
    ));
    let s = coopkitchen::grid::WorldState::initial(&l);
    assert!(matches!(
        StartStatePool::new(&l, vec![s.clone()], Some(vec![-1.0])),
        Err(PoolError::BadWeights)
    ));
}

#[test]
fn pool_round_trips_through_json() {
    let l = layout("bottleneck");
    let pool = build_start_pool(&trajectories("bottleneck"), &l, 25).unwrap();
    let text = pool.to_json(&l);
    let (back, bl) = StartStatePool::from_json(&text).unwrap();
    assert_eq!(back, pool);
    assert_eq!(bl, l);
    assert_eq!(back.to_json(&bl), text);
}

#[test]
fn sampling_a_forty_state_pool_is_uniform() {
    let l = layout("room");
    let states: Vec<_> = trajectories("room")[0]
        .states(&l)
        .into_iter()
        .take(40)
        .map(|mut s| {
            s.tick = 0;
            s
        })
        .collect();
    let pool = StartStatePool::new(&l, states.clone(), None).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut counts = [0u32; 40];
    for _ in 0..10_000 {
        let s = sample_start(&pool, &mut rng);
        assert!(s.validate(&l).is_ok());
        // Trajectory states may repeat; credit the first match.
        counts[states.iter().position(|x| *x == s).unwrap()] += 1;
    }
    let mut expected = [0.0f64; 40];
    for s in &states {
        expected[states.iter().position(|x| x == s).unwrap()] += 1.0 / 40.0;
    }
    for i in 0..40 {
        let f = counts[i] as f64 / 10_000.0;
        assert!(
            (f - expected[i]).abs() <= 0.005,
            "state {i}: {f} vs {}",
            expected[i]
        );
    }
}

#[test]
fn max_capability_beats_random_in_validation() {
    let l = layout("room");
    let pop = default_population(&l).unwrap();
    assert_eq!(pop.len(), 20);
    let config = EvalConfig::default();
    let max = validation_reward(&spec("tom:max_capability"), &pop, &l, &config, None, 2).unwrap();
    let random =
        validation_reward(&spec("scripted:uniform_random"), &pop, &l, &config, None, 2).unwrap();
    assert_eq!(max.episodes, 100);
    assert!(max.mean > random.mean, "{} vs {}", max.mean, random.mean);
}

#[test]
fn validation_is_reproducible_and_independent_of_parallelism() {
    let l = layout("center_pots");
    let pop = Population::uniform(vec![
        spec("tom:V2"),
        spec("replay:center_pots_04"),
        spec("tom:V9"),
    ])
    .unwrap();
    let config = EvalConfig {
        episodes_per_member: 3,
        horizon: 150,
        seed: 21,
        ..EvalConfig::default()
    };
    let a = validation_reward(&spec("tom:mle_like"), &pop, &l, &config, None, 1)
        .unwrap()
        .to_json();
    let b = validation_reward(&spec("tom:mle_like"), &pop, &l, &config, None, 4)
        .unwrap()
        .to_json();
    assert_eq!(a, b);
    let other = EvalConfig { seed: 22, ..config };
    let c = validation_reward(&spec("tom:mle_like"), &pop, &l, &other, None, 1)
        .unwrap()
        .to_json();
    assert_ne!(a, c);
}

#[test]
fn standard_error_shrinks_with_more_episodes() {
    let l = layout("room");
    let pop = Population::uniform(vec![spec("tom:V1"), spec("tom:V5")]).unwrap();
    let se = |episodes_per_member: u32| {
        let config = EvalConfig {
            episodes_per_member,
            horizon: 120,
            seed: 3,
            ..EvalConfig::default()
        };
        let r = validation_reward(&spec("tom:V8"), &pop, &l, &config, None, 2).unwrap();
        r.standard_error.unwrap()
    };
    let (few, many) = (se(5), se(50));
    assert!(many < few, "{many} vs {few}");
}

#[test]
fn diverse_starts_need_a_matching_pool() {
    let l = layout("room");
    let pop = Population::uniform(vec![spec("tom:V1")]).unwrap();
    let tested = spec("tom:V2");
    let diverse = EvalConfig {
        diverse_starts: true,
        episodes_per_member: 4,
        horizon: 50,
        ..EvalConfig::default()
    };
    assert!(matches!(
        validation_reward(&tested, &pop, &l, &diverse, None, 1),
        Err(EvalError::Config(_))
    ));
    let other = layout("corridor");
    let wrong = build_start_pool(&trajectories("corridor"), &other, 10).unwrap();
    assert!(matches!(
        validation_reward(&tested, &pop, &l, &diverse, Some(&wrong), 1),
        Err(EvalError::Config(_))
    ));
    let pool = build_start_pool(&trajectories("room"), &l, 10).unwrap();
    let r = validation_reward(&tested, &pop, &l, &diverse, Some(&pool), 1).unwrap();
    assert_eq!(r.episodes, 4);
    let bad_gamma = EvalConfig {
        gamma: 0.0,
        ..EvalConfig::default()
    };
    assert!(validation_reward(&tested, &pop, &l, &bad_gamma, None, 1).is_err());
}
