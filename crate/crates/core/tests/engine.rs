mod common;

use coopkitchen::grid::{
    deserialize_state, serialize_state, step, Action, Direction, Event, History, Object, Pos,
    PotState, WorldState, COOK_TIME, POT_CAPACITY, SOUP_REWARD,
};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use common::{bundled_layouts, fuzz_layout, random_state};

#[test]
fn pinned_constants() {
    assert_eq!(POT_CAPACITY, 3);
    assert_eq!(COOK_TIME, 20);
    assert_eq!(SOUP_REWARD, 20);
}

/// Fill a pot by hand, wait for it, carry the soup to the pass.
#[test]
fn soup_cycle_from_scratch() {
    let layout = coopkitchen::assets::layout("room").unwrap();
    let pot = Pos::new(0, 3);
    let mut s = WorldState::initial(&layout);
    s.players[0].pos = Pos::new(1, 3);
    s.players[0].facing = Direction::North;
    let idle = [Action::Interact, Action::Stay];

    for n in 1..=3u8 {
        s.players[0].held = Some(Object::Onion);
        let out = step(&layout, &s, idle).unwrap();
        assert_eq!(out.reward, 0);
        s = out.next_state;
        assert_eq!(s.players[0].held, None);
        if n < 3 {
            assert_eq!(s.pot(pot), Some(PotState::Idle { onions: n }));
        } else {
            assert!(out.events.contains(&Event::CookStarted { pot }));
        }
    }

    let mut ticks_after_third = 0;
    while s.pot(pot) != Some(PotState::Ready) {
        s = step(&layout, &s, [Action::Stay; 2]).unwrap().next_state;
        ticks_after_third += 1;
        assert!(ticks_after_third <= 20);
    }
    assert_eq!(ticks_after_third, 20);

    s.players[0].held = Some(Object::Dish);
    s = step(&layout, &s, idle).unwrap().next_state;
    assert_eq!(s.players[0].held, Some(Object::Soup));
    assert_eq!(s.pot(pot), Some(PotState::EMPTY));

    s.players[0].pos = Pos::new(2, 9);
    s.players[0].facing = Direction::East;
    let out = step(&layout, &s, idle).unwrap();
    assert_eq!(out.reward, 20);
    assert_eq!(out.deliveries(), 1);
    assert_eq!(out.next_state.players[0].held, None);
}

#[test]
fn a_dish_on_a_cooking_pot_does_nothing() {
    let layout = coopkitchen::assets::layout("room").unwrap();
    let mut s = WorldState::initial(&layout);
    s.players[0].pos = Pos::new(1, 3);
    s.pots
        .insert(Pos::new(0, 3), PotState::Cooking { remaining: 4 });
    s.players[0].held = Some(Object::Dish);
    let out = step(&layout, &s, [Action::Interact, Action::Stay]).unwrap();
    assert_eq!(out.next_state.players[0].held, Some(Object::Dish));
    assert_eq!(
        out.next_state.pot(Pos::new(0, 3)),
        Some(PotState::Cooking { remaining: 3 })
    );
}

#[test]
fn invalid_states_are_rejected() {
    let layout = coopkitchen::assets::layout("room").unwrap();
    let mut s = WorldState::initial(&layout);
    s.players[1].pos = s.players[0].pos;
    assert!(step(&layout, &s, [Action::Stay; 2]).is_err());
    let mut s = WorldState::initial(&layout);
    s.players[0].pos = Pos::new(0, 0);
    assert!(step(&layout, &s, [Action::Stay; 2]).is_err());
}

#[test]
fn swap_and_shared_target_are_collisions() {
    let layout = coopkitchen::assets::layout("room").unwrap();
    let mut s = WorldState::initial(&layout);
    s.players[0].pos = Pos::new(2, 4);
    s.players[1].pos = Pos::new(2, 5);
    let out = step(&layout, &s, [Action::Right, Action::Left]).unwrap();
    assert_eq!(out.next_state.players[0].pos, Pos::new(2, 4));
    assert_eq!(out.next_state.players[1].pos, Pos::new(2, 5));
    assert!(out.collided(0) && out.collided(1));

    s.players[1].pos = Pos::new(2, 6);
    let out = step(&layout, &s, [Action::Right, Action::Left]).unwrap();
    assert_eq!(out.next_state.players[0].pos, Pos::new(2, 4));
    assert_eq!(out.next_state.players[1].pos, Pos::new(2, 6));
    assert_eq!(out.next_state.players[0].facing, Direction::East);
    assert!(out.collided(0));
}

#[test]
fn double_reward_needs_two_deliveries() {
    let layout = coopkitchen::grid::Layout::parse("two_passes", "XSXPX\nO1 2D\nXXSXX\n").unwrap();
    let mut s = WorldState::initial(&layout);
    s.players[0].facing = Direction::North;
    s.players[1].facing = Direction::South;
    s.players[0].pos = Pos::new(1, 1);
    s.players[1].pos = Pos::new(1, 2);
    s.players[0].held = Some(Object::Soup);
    s.players[1].held = Some(Object::Soup);
    let both = step(&layout, &s, [Action::Interact, Action::Interact]).unwrap();
    assert_eq!((both.reward, both.deliveries()), (40, 2));
    let one = step(&layout, &s, [Action::Interact, Action::Stay]).unwrap();
    assert_eq!((one.reward, one.deliveries()), (20, 1));
}

#[test]
fn fuzz_one_million_steps_per_layout() {
    for layout in bundled_layouts() {
        fuzz_layout(&layout, 1_000_000, 11).unwrap();
    }
}

fn layout_strategy() -> impl Strategy<Value = coopkitchen::grid::Layout> {
    prop::sample::select(bundled_layouts())
}

fn action_strategy() -> impl Strategy<Value = Action> {
    prop::sample::select(Action::ALL.to_vec())
}

proptest! {
    #[test]
    fn step_is_deterministic(layout in layout_strategy(), seed: u64, a in action_strategy(), b in action_strategy()) {
        let s = random_state(&layout, &mut ChaCha8Rng::seed_from_u64(seed));
        prop_assert_eq!(step(&layout, &s, [a, b]).unwrap(), step(&layout, &s, [a, b]).unwrap());
    }

    #[test]
    fn state_text_round_trips(layout in layout_strategy(), seed: u64) {
        let s = random_state(&layout, &mut ChaCha8Rng::seed_from_u64(seed));
        let text = serialize_state(&s);
        prop_assert_eq!(deserialize_state(&text, &layout).unwrap(), s);
    }

    #[test]
    fn players_stay_apart_on_floor(
        layout in layout_strategy(),
        seed: u64,
        actions in prop::collection::vec((action_strategy(), action_strategy()), 1..80),
    ) {
        let mut s = random_state(&layout, &mut ChaCha8Rng::seed_from_u64(seed));
        for (a, b) in actions {
            let out = step(&layout, &s, [a, b]).unwrap();
            s = out.next_state;
            prop_assert!(s.players[0].pos != s.players[1].pos);
            prop_assert!(layout.is_floor(s.players[0].pos) && layout.is_floor(s.players[1].pos));
        }
    }

    #[test]
    fn replay_reproduces_final_state(
        layout in layout_strategy(),
        seed: u64,
        actions in prop::collection::vec((action_strategy(), action_strategy()), 0..60),
    ) {
        let mut s = random_state(&layout, &mut ChaCha8Rng::seed_from_u64(seed));
        let mut history = History::new();
        for (a, b) in actions {
            let next = step(&layout, &s, [a, b]).unwrap().next_state;
            history.push(s, [a, b]);
            s = next;
        }
        let replayed = history.replay(&layout).unwrap();
        if history.is_empty() {
            prop_assert_eq!(replayed, None);
        } else {
            prop_assert_eq!(replayed, Some(s));
        }
    }
}
