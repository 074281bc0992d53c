mod common;

use coopkitchen::grid::{Action, History, WorldState, DEFAULT_HORIZON};
use coopkitchen::planning::{finite_costs, MotionPlanner, PartnerModel};
use coopkitchen::policy::{Policy, PolicySpec};
use coopkitchen::rollout::{run_episode, slot_seed};
use coopkitchen::tom::{tom_act, ParamError, ToMParams, ToMState};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use common::{bundled_layouts, quiet_params, random_state, tom_action_counts, total_variation};

#[test]
fn pausing_always_stays() {
    let params = ToMParams {
        prob_pausing: 1.0,
        ..quiet_params()
    };
    let counts = tom_action_counts(&params, 100_000, 1);
    assert_eq!(counts[Action::Stay.index()], 100_000, "{counts:?}");
}

#[test]
fn random_actions_are_uniform_over_all_six() {
    let params = ToMParams {
        prob_random_action: 1.0,
        ..quiet_params()
    };
    let counts = tom_action_counts(&params, 100_000, 2);
    let tv = total_variation(&counts, &[1.0 / 6.0; 6]);
    assert!(tv <= 0.02, "tv {tv}: {counts:?}");
    assert!(counts.iter().all(|c| *c > 0));
}

#[test]
fn zero_rationality_is_uniform_over_finite_cost_actions() {
    let params = ToMParams {
        rationality_coefficient: 0.0,
        ..quiet_params()
    };
    let layout = coopkitchen::assets::layout("room").unwrap();
    let planner = MotionPlanner::new(&layout);
    let state = WorldState::initial(&layout);
    let history = History::new();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut goal = None;
    let mut counts = [0u64; 6];
    for _ in 0..100_000 {
        let (a, tom) = tom_act(
            &params,
            &ToMState::default(),
            &history,
            &planner,
            &state,
            0,
            &mut rng,
        );
        let g = tom.current_goal.expect("a task is open").1;
        assert!(
            goal.is_none_or(|x| x == g),
            "goal choice is deterministic here"
        );
        goal = Some(g);
        counts[a.index()] += 1;
    }
    let costs = planner.action_costs(&state, 0, &goal.unwrap(), PartnerModel::Ignore);
    let finite = finite_costs(&costs);
    let probs: Vec<f64> = Action::ALL
        .iter()
        .map(|a| {
            if finite.iter().any(|(b, _)| b == a) {
                1.0 / finite.len() as f64
            } else {
                0.0
            }
        })
        .collect();
    let tv = total_variation(&counts, &probs);
    assert!(tv <= 0.02, "tv {tv}: {counts:?}");
}

#[test]
fn presets_are_in_range() {
    ToMParams::max_capability().validate().unwrap();
    for layout in bundled_layouts() {
        ToMParams::mle_like(layout.name())
            .unwrap()
            .validate()
            .unwrap();
    }
    for i in 1..=10 {
        ToMParams::validation(&format!("V{i}"))
            .unwrap()
            .validate()
            .unwrap();
    }
    assert!(matches!(
        ToMParams::validation("V11"),
        Err(ParamError::UnknownPreset(_))
    ));
}

fn field_ranges() -> [(f64, f64); 10] {
    [
        (0.0, 1.0),
        (1.0, 4.0),
        (0.0, 1.0),
        (0.0, 1.0),
        (0.0, 1.0),
        (0.0, 0.4),
        (0.0, 1.0),
        (0.0, 1.0),
        (0.0, 20.0),
        (0.0, 1.0),
    ]
}

fn build(v: [f64; 10]) -> Result<ToMParams, ParamError> {
    ToMParams::new(
        v[0],
        v[1] as usize,
        v[2],
        v[3],
        v[4],
        v[5],
        v[6],
        v[7],
        v[8],
        v[9],
    )
}

proptest! {
    #[test]
    fn out_of_range_parameters_are_rejected(field in 0usize..10, over: bool, excess in 0.001f64..10.0) {
        let ranges = field_ranges();
        let mut v = ranges.map(|(lo, _)| lo);
        let (lo, hi) = ranges[field];
        if field == 1 {
            // Integer field: step a whole task past either end.
            v[1] = if over { hi + excess.ceil() } else { 0.0 };
        } else {
            v[field] = if over { hi + excess } else { lo - excess };
        }
        let rejected = matches!(build(v), Err(ParamError::OutOfRange { .. }));
        prop_assert!(rejected);
    }

    #[test]
    fn in_range_parameters_are_accepted_and_round_trip(u in prop::array::uniform10(0.0f64..=1.0)) {
        let ranges = field_ranges();
        let mut v = [0.0; 10];
        for i in 0..10 {
            v[i] = ranges[i].0 + u[i] * (ranges[i].1 - ranges[i].0);
        }
        v[1] = v[1].round();
        let p = build(v).unwrap();
        prop_assert_eq!(ToMParams::parse(&p.to_text()).unwrap(), p);
    }

    /// The agent sees the past only through its own state and the last few
    /// history entries.
    #[test]
    fn decisions_ignore_old_history(seed: u64, prefix in 0usize..30) {
        let layout = coopkitchen::assets::layout("room").unwrap();
        let planner = MotionPlanner::new(&layout);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut policies = [spec("tom:V3"), spec("tom:V7")].map(|s| s.build(&layout, seed).unwrap());
        let episode = run_episode(&layout, WorldState::initial(&layout), &mut policies, 40, |_, _, _| false).unwrap();
        let entries = episode.history.entries();
        let tail = &entries[entries.len() - 4..];

        let mut long = History::new();
        for (s, j) in entries {
            long.push(s.clone(), *j);
        }
        let mut short = History::new();
        for _ in 0..prefix {
            let s = random_state(&layout, &mut rng);
            short.push(s, [Action::Stay; 2]);
        }
        for (s, j) in tail {
            short.push(s.clone(), *j);
        }
        let tom = ToMState::default();
        let params = ToMParams::validation("V5").unwrap();
        let a = tom_act(&params, &tom, &long, &planner, &episode.final_state, 0, &mut ChaCha8Rng::seed_from_u64(seed));
        let b = tom_act(&params, &tom, &short, &planner, &episode.final_state, 0, &mut ChaCha8Rng::seed_from_u64(seed));
        prop_assert_eq!(a, b);
    }
}

fn spec(text: &str) -> PolicySpec {
    PolicySpec::parse(text).unwrap()
}

fn self_play_mean(layout: &coopkitchen::grid::Layout, spec: &PolicySpec, episodes: u64) -> f64 {
    let mut total = 0u64;
    for e in 0..episodes {
        let mut policies: [Box<dyn Policy>; 2] =
            [0, 1].map(|slot| spec.build(layout, slot_seed(e, slot)).unwrap());
        let episode = run_episode(
            layout,
            WorldState::initial(layout),
            &mut policies,
            DEFAULT_HORIZON,
            |_, _, _| false,
        )
        .unwrap();
        total += episode.total_reward() as u64;
    }
    total as f64 / episodes as f64
}

#[test]
fn capability_orders_self_play_reward() {
    let paused = PolicySpec::TomParams(ToMParams {
        prob_pausing: 1.0,
        ..quiet_params()
    });
    for layout in bundled_layouts() {
        let max = self_play_mean(&layout, &spec("tom:max_capability"), 50);
        let mle = self_play_mean(&layout, &spec("tom:mle_like"), 50);
        let none = self_play_mean(&layout, &paused, 50);
        assert!(
            max >= mle && mle >= none,
            "{}: {max} {mle} {none}",
            layout.name()
        );
        assert_eq!(none, 0.0);
        assert!(max > 0.0, "{}", layout.name());
    }
}
