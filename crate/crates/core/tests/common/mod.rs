#![allow(dead_code)]

use std::collections::{BTreeMap, HashMap, VecDeque};

use coopkitchen::grid::{
    Action, Direction, Event, Layout, Object, PlayerState, Pos, PotState, StepOutcome, Tile,
    WorldState, COOK_TIME, POT_CAPACITY,
};
use rand::seq::IndexedRandom;
use rand::Rng;

pub fn bundled_layouts() -> Vec<Layout> {
    coopkitchen::assets::layout_names()
        .into_iter()
        .map(|n| coopkitchen::assets::layout(n).unwrap())
        .collect()
}

pub fn random_action<R: Rng>(rng: &mut R) -> Action {
    Action::ALL[rng.random_range(0..6)]
}

fn random_held<R: Rng>(rng: &mut R) -> Option<Object> {
    [
        None,
        Some(Object::Onion),
        Some(Object::Dish),
        Some(Object::Soup),
    ][rng.random_range(0..4)]
}

/// A uniformly scattered valid state: distinct floor cells, any facing and
/// held object, arbitrary pot phases and a sprinkling of counter objects.
pub fn random_state<R: Rng>(layout: &Layout, rng: &mut R) -> WorldState {
    let floor: Vec<Pos> = layout.floor_cells().collect();
    let a = *floor.choose(rng).unwrap();
    let b = loop {
        let b = *floor.choose(rng).unwrap();
        if b != a {
            break b;
        }
    };
    let player = |pos, rng: &mut R| PlayerState {
        pos,
        facing: Direction::ALL[rng.random_range(0..4)],
        held: random_held(rng),
    };
    let players = [player(a, rng), player(b, rng)];
    let pots = layout
        .pots()
        .iter()
        .map(|p| {
            let s = match rng.random_range(0..3) {
                0 => PotState::Idle {
                    onions: rng.random_range(0..POT_CAPACITY),
                },
                1 => PotState::Cooking {
                    remaining: rng.random_range(1..=COOK_TIME),
                },
                _ => PotState::Ready,
            };
            (*p, s)
        })
        .collect();
    let mut counters = BTreeMap::new();
    for c in layout.counters() {
        if rng.random_bool(0.25) {
            counters.insert(
                *c,
                [Object::Onion, Object::Dish, Object::Soup][rng.random_range(0..3)],
            );
        }
    }
    WorldState {
        players,
        pots,
        counters,
        tick: rng.random_range(0..400),
    }
}

/// A 6x6 kitchen: a wall of counters holding one of each feature and a 4x4
/// interior with random obstacles. Retries until the grid is a valid layout.
pub fn random_kitchen<R: Rng>(rng: &mut R) -> Layout {
    loop {
        let mut g = vec![vec!['X'; 6]; 6];
        for row in g.iter_mut().take(5).skip(1) {
            for c in row.iter_mut().take(5).skip(1) {
                *c = if rng.random_bool(0.3) { 'X' } else { ' ' };
            }
        }
        let mut border: Vec<(usize, usize)> = (0..6)
            .flat_map(|r| (0..6).map(move |c| (r, c)))
            .filter(|&(r, c)| (r == 0 || r == 5 || c == 0 || c == 5) && (r % 5 != 0 || c % 5 != 0))
            .collect();
        for feature in ['O', 'D', 'P', 'S'] {
            let i = rng.random_range(0..border.len());
            let (r, c) = border.swap_remove(i);
            g[r][c] = feature;
        }
        let floor: Vec<(usize, usize)> = (1..5)
            .flat_map(|r| (1..5).map(move |c| (r, c)))
            .filter(|&(r, c)| g[r][c] == ' ')
            .collect();
        if floor.len() < 2 {
            continue;
        }
        let s1 = floor[rng.random_range(0..floor.len())];
        let s2 = floor[rng.random_range(0..floor.len())];
        if s1 == s2 {
            continue;
        }
        g[s1.0][s1.1] = '1';
        g[s2.0][s2.1] = '2';
        let text: String = g
            .iter()
            .map(|r| r.iter().collect::<String>() + "\n")
            .collect();
        if let Ok(layout) = Layout::parse("random", &text) {
            return layout;
        }
    }
}

/// Pose reached by a move: the player turns, and steps if the cell ahead is
/// floor and not `blocked`.
pub fn oracle_move(
    layout: &Layout,
    pos: Pos,
    dir: Direction,
    blocked: Option<Pos>,
) -> (Pos, Direction) {
    let (dr, dc) = dir.delta();
    let r = pos.row as i32 + dr;
    let c = pos.col as i32 + dc;
    if r >= 0 && c >= 0 && (r as u16) < layout.height() && (c as u16) < layout.width() {
        let next = Pos::new(r as u16, c as u16);
        if layout.tile(next) == Tile::Floor && Some(next) != blocked {
            return (next, dir);
        }
    }
    (pos, dir)
}

/// Breadth-first distances from one pose to every reachable pose, with an
/// optional cell nobody may enter.
pub fn bfs_from(
    layout: &Layout,
    pos: Pos,
    facing: Direction,
    blocked: Option<Pos>,
) -> HashMap<(Pos, Direction), u32> {
    let mut dist = HashMap::from([((pos, facing), 0)]);
    let mut queue = VecDeque::from([(pos, facing)]);
    while let Some(node) = queue.pop_front() {
        let d = dist[&node];
        for dir in Direction::ALL {
            let next = oracle_move(layout, node.0, dir, blocked);
            if let std::collections::hash_map::Entry::Vacant(e) = dist.entry(next) {
                e.insert(d + 1);
                queue.push_back(next);
            }
        }
    }
    dist
}

/// Follow moves from a pose with the oracle's movement rule.
pub fn follow(layout: &Layout, mut pose: (Pos, Direction), path: &[Action]) -> (Pos, Direction) {
    for a in path {
        if let Some(d) = a.direction() {
            pose = oracle_move(layout, pose.0, d, None);
        }
    }
    pose
}

/// Every (cell, facing) pair from which an Interact acts on a non-floor tile.
pub fn all_goals(layout: &Layout) -> Vec<(Pos, Direction)> {
    let mut out = Vec::new();
    for cell in layout.floor_cells() {
        for dir in Direction::ALL {
            if let Some(t) = layout.neighbor(cell, dir) {
                if layout.tile(t) != Tile::Floor {
                    out.push((cell, dir));
                }
            }
        }
    }
    out
}

/// Check the object bookkeeping of one step: counts of (onions, dishes,
/// soups) change only through dispenser pickups, soup pickups and deliveries.
pub fn conservation_holds(layout: &Layout, before: &WorldState, out: &StepOutcome) -> bool {
    let mut expect = before.object_counts().map(i64::from);
    for e in &out.events {
        match *e {
            Event::ObjectPickedUp { cell, .. } => match layout.tile(cell) {
                Tile::OnionDispenser => expect[0] += 1,
                Tile::DishDispenser => expect[1] += 1,
                _ => {}
            },
            Event::SoupPickedUp { .. } => {
                expect[0] -= POT_CAPACITY as i64;
                expect[1] -= 1;
                expect[2] += 1;
            }
            Event::SoupDelivered { .. } => expect[2] -= 1,
            _ => {}
        }
    }
    out.next_state.object_counts().map(i64::from) == expect
}

/// Total-variation distance between empirical counts and a distribution.
pub fn total_variation(counts: &[u64], probs: &[f64]) -> f64 {
    let n: u64 = counts.iter().sum();
    counts
        .iter()
        .zip(probs)
        .map(|(c, p)| (*c as f64 / n as f64 - p).abs())
        .sum::<f64>()
        / 2.0
}

/// Compare partner-unaware planning with the BFS oracle on every (start pose,
/// goal) pair of `layout`. Returns the number of pairs checked.
pub fn planner_matches_bfs(layout: &Layout) -> Result<usize, String> {
    use coopkitchen::planning::{MotionGoal, MotionPlanner, PartnerModel};
    let planner = MotionPlanner::new(layout);
    let goals = all_goals(layout);
    let floor: Vec<Pos> = layout.floor_cells().collect();
    let other = WorldState::initial(layout).players[1];
    let mut checked = 0;
    for &pos in &floor {
        for facing in Direction::ALL {
            let dist = bfs_from(layout, pos, facing, None);
            let mut state = WorldState::initial(layout);
            state.players[0] = PlayerState {
                pos,
                facing,
                held: None,
            };
            state.players[1] = other;
            for &(cell, gf) in &goals {
                let goal = MotionGoal { cell, facing: gf };
                let want = dist.get(&(cell, gf)).copied();
                let got = planner.distance(pos, facing, &goal);
                let planned = planner
                    .plan_path(&state, 0, &goal, PartnerModel::Ignore)
                    .ok();
                let fail = |what: &str| {
                    Err(format!(
                        "{}: {what} from {pos} {facing:?} to {cell} {gf:?}",
                        layout.name()
                    ))
                };
                if got != want {
                    return fail(&format!("distance {got:?}, oracle {want:?}"));
                }
                match (&planned, want) {
                    (None, None) => {}
                    (Some(plan), Some(d)) => {
                        if plan.cost != d || plan.path.len() as u32 != d {
                            return fail(&format!(
                                "plan cost {} (len {}), oracle {d}",
                                plan.cost,
                                plan.path.len()
                            ));
                        }
                        if follow(layout, (pos, facing), &plan.path) != (cell, gf) {
                            return fail("path does not end on the goal");
                        }
                    }
                    _ => {
                        return fail(&format!(
                            "plan {:?}, oracle {want:?}",
                            planned.map(|p| p.cost)
                        ))
                    }
                }
                checked += 1;
            }
        }
    }
    Ok(checked)
}

/// Action counts of `draws` independent ToM decisions with `params`, each
/// from a fresh agent in a random state of a bundled layout.
pub fn tom_action_counts(
    params: &coopkitchen::tom::ToMParams,
    draws: usize,
    seed: u64,
) -> [u64; 6] {
    use coopkitchen::planning::MotionPlanner;
    use coopkitchen::tom::{tom_act, ToMState};
    use rand::SeedableRng;
    let layouts = bundled_layouts();
    let planners: Vec<MotionPlanner> = layouts.iter().map(MotionPlanner::new).collect();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let history = coopkitchen::grid::History::new();
    let mut counts = [0u64; 6];
    for i in 0..draws {
        let k = i % layouts.len();
        let state = random_state(&layouts[k], &mut rng);
        let agent = rng.random_range(0..2);
        let (a, _) = tom_act(
            params,
            &ToMState::default(),
            &history,
            &planners[k],
            &state,
            agent,
            &mut rng,
        );
        counts[a.index()] += 1;
    }
    counts
}

/// Parameters with every noise source off; tests switch one on.
pub fn quiet_params() -> coopkitchen::tom::ToMParams {
    coopkitchen::tom::ToMParams::new(1.0, 1, 1.0, 1.0, 0.0, 0.0, 0.0, 0.0, 20.0, 0.0).unwrap()
}

/// Closed-form softmax over negated costs.
pub fn softmax_oracle(costs: &[(Action, f64)], beta: f64) -> Vec<f64> {
    let w: Vec<f64> = costs.iter().map(|(_, c)| (-beta * c).exp()).collect();
    let z: f64 = w.iter().sum();
    w.iter().map(|x| x / z).collect()
}

/// How often each entry of `costs` is chosen in `draws` Boltzmann draws.
pub fn empirical_choice(costs: &[(Action, f64)], beta: f64, draws: usize, seed: u64) -> Vec<u64> {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut counts = vec![0u64; costs.len()];
    for _ in 0..draws {
        let a = coopkitchen::planning::boltzmann_select(costs, beta, &mut rng).unwrap();
        counts[costs.iter().position(|(b, _)| *b == a).unwrap()] += 1;
    }
    counts
}

/// Total variation between `draws` Boltzmann choices over a fixed spread of
/// six action costs and the softmax.
pub fn boltzmann_tv(beta: f64, draws: usize, seed: u64) -> f64 {
    let costs = [
        (Action::Up, 1.0),
        (Action::Down, 2.0),
        (Action::Left, 3.0),
        (Action::Right, 2.0),
        (Action::Stay, 4.0),
        (Action::Interact, 6.0),
    ];
    total_variation(
        &empirical_choice(&costs, beta, draws, seed),
        &softmax_oracle(&costs, beta),
    )
}

/// Random walks from random states, resampled every 100 steps, checking
/// every invariant after every step.
pub fn fuzz_layout(layout: &Layout, steps: u64, seed: u64) -> Result<(), String> {
    use coopkitchen::grid::{serialize_state, step, SOUP_REWARD};
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut s = random_state(layout, &mut rng);
    for i in 0..steps {
        if i % 100 == 0 {
            s = random_state(layout, &mut rng);
        }
        let joint = [random_action(&mut rng), random_action(&mut rng)];
        let fail = |what: String| {
            Err(format!(
                "{}: step {i}: {what}\n{}",
                layout.name(),
                serialize_state(&s)
            ))
        };
        let out = match step(layout, &s, joint) {
            Ok(out) => out,
            Err(e) => return fail(e.to_string()),
        };
        if let Err(e) = out.next_state.validate(layout) {
            return fail(e.to_string());
        }
        if !conservation_holds(layout, &s, &out) {
            return fail("object counts not conserved".into());
        }
        if out.reward != SOUP_REWARD * out.deliveries() as u32 || !matches!(out.reward, 0 | 20 | 40)
        {
            return fail(format!("reward {}", out.reward));
        }
        if out.next_state.tick != s.tick + 1 {
            return fail("tick did not advance".into());
        }
        s = out.next_state;
    }
    Ok(())
}

/// Put three onions into a pot of `room`, count the ticks until it is ready
/// and deliver the soup. Returns (ticks after the third onion, reward).
pub fn room_soup_cycle() -> Result<(u32, u32), String> {
    use coopkitchen::grid::step;
    let layout = coopkitchen::assets::layout("room").ok_or("no room layout")?;
    let pot = Pos::new(0, 3);
    let mut s = WorldState::initial(&layout);
    s.players[0].pos = Pos::new(1, 3);
    s.players[0].facing = Direction::North;
    let interact = [Action::Interact, Action::Stay];
    for _ in 0..POT_CAPACITY {
        s.players[0].held = Some(Object::Onion);
        s = step(&layout, &s, interact)
            .map_err(|e| e.to_string())?
            .next_state;
    }
    if s.pot(pot)
        != Some(PotState::Cooking {
            remaining: COOK_TIME,
        })
    {
        return Err(format!("pot after three onions: {:?}", s.pot(pot)));
    }
    let mut ticks = 0u32;
    while s.pot(pot) != Some(PotState::Ready) {
        s = step(&layout, &s, [Action::Stay; 2])
            .map_err(|e| e.to_string())?
            .next_state;
        ticks += 1;
        if ticks > 10 * u32::from(COOK_TIME) {
            return Err("pot never became ready".into());
        }
    }
    s.players[0].held = Some(Object::Dish);
    s = step(&layout, &s, interact)
        .map_err(|e| e.to_string())?
        .next_state;
    s.players[0].pos = Pos::new(2, 9);
    s.players[0].facing = Direction::East;
    let out = step(&layout, &s, interact).map_err(|e| e.to_string())?;
    Ok((ticks, out.reward))
}
