use rand::Rng;

use super::params::ToMParams;
use crate::grid::{
    step_unchecked, Action, Direction, History, Layout, Object, Pos, PotState, Tile, WorldState,
};
use crate::planning::{
    allocate_tasks, boltzmann_select, enumerate_tasks, finite_costs, plan_task, Allocation,
    AllocationMode, MotionGoal, MotionPlanner, PartnerModel, Situation, SoupSource, Task, TaskKind,
};

/// Ticks spent thinking after finishing a sub-task.
pub const THINK_TICKS: u32 = 2;
/// Consecutive ticks of futile action after which the agent acts randomly.
/// How many past poses count as "recent" for stuck detection.
const RECENT_POSES: usize = 4;

pub const STUCK_WINDOW: u32 = 3;

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ToMState {
    pub current_goal: Option<(Task, MotionGoal)>,
    pub think_ticks_remaining: u32,
    /// Ticks in a row in which the agent acted without progress: its
    /// position, facing and held object match a pose from the last few ticks.
    pub stuck_counter: u32,
    /// The agent was involved in a collision last tick.
    pub last_blocked: bool,
    /// What the partner did last tick.
    pub partner_last_action: Option<Action>,
    /// Ticks in a row the partner has stayed on the same cell.
    pub partner_still: u32,
}

/// The task the partner appears to be working on, judged from what it holds
/// or, with empty hands, from useful counter objects in front of it that it
/// is nearer to than the observer is.
pub fn infer_partner_task(layout: &Layout, state: &WorldState, partner: usize) -> Option<Task> {
    let tasks = enumerate_tasks(layout, state);
    let p = state.players[partner];
    let observer = state.players[1 - partner].pos;
    if let Some(held) = p.held {
        return tasks
            .iter()
            .find(|t| match (held, t.kind) {
                (Object::Soup, TaskKind::DeliverSoup(SoupSource::Held(h))) => h == partner,
                (Object::Onion, TaskKind::PotOnion { .. }) => true,
                (Object::Dish, TaskKind::LoadSoup { .. }) => true,
                _ => false,
            })
            .copied();
    }

    let (dr, dc) = p.facing.delta();
    let mut best: Option<(u8, u32, Pos, Task)> = None;
    for (cell, obj) in &state.counters {
        let ahead =
            (cell.row as i32 - p.pos.row as i32) * dr + (cell.col as i32 - p.pos.col as i32) * dc;
        if ahead < 0 || cell.manhattan(p.pos) >= cell.manhattan(observer) {
            continue;
        }
        let served = tasks.iter().find(|t| match (obj, t.kind) {
            (Object::Soup, TaskKind::DeliverSoup(SoupSource::Counter(c))) => c == *cell,
            (Object::Onion, TaskKind::FetchOnion { .. }) => true,
            (Object::Dish, TaskKind::FetchDish { .. }) => true,
            _ => false,
        });
        if let Some(t) = served {
            let key = (t.priority, cell.manhattan(p.pos), *cell);
            if best.is_none_or(|(bp, bd, bc, _)| key < (bp, bd, bc)) {
                best = Some((key.0, key.1, key.2, *t));
            }
        }
    }
    best.map(|b| b.3)
}

/// Whether an Interact by `agent` at `target` would change anything.
fn interaction_effective(layout: &Layout, state: &WorldState, agent: usize, target: Pos) -> bool {
    let held = state.players[agent].held;
    match (layout.tile_at(target), held) {
        (Some(Tile::OnionDispenser | Tile::DishDispenser), None) => true,
        (Some(Tile::Pot), Some(Object::Onion)) => state.pot(target).is_some_and(|p| p.space() > 0),
        (Some(Tile::Pot), Some(Object::Dish)) => {
            matches!(
                state.pot(target),
                Some(PotState::Ready | PotState::Cooking { .. })
            )
        }
        (Some(Tile::Serving), Some(Object::Soup)) => true,
        (Some(Tile::Counter), Some(_)) => !state.counters.contains_key(&target),
        (Some(Tile::Counter), None) => state.counters.contains_key(&target),
        _ => false,
    }
}

fn chance<R: Rng + ?Sized>(rng: &mut R, p: f64) -> bool {
    rng.random::<f64>() < p
}

fn random_action<R: Rng + ?Sized>(rng: &mut R) -> Action {
    Action::ALL[rng.random_range(0..Action::ALL.len())]
}

/// Update bookkeeping from the last history entry: collision, stuck counter
/// and sub-task completion.
fn observe<R: Rng + ?Sized>(
    params: &ToMParams,
    tom: &mut ToMState,
    history: &History,
    layout: &Layout,
    state: &WorldState,
    agent: usize,
    rng: &mut R,
) {
    let Some((prev, joint)) = history.last() else {
        tom.last_blocked = false;
        tom.stuck_counter = 0;
        tom.partner_last_action = None;
        tom.partner_still = 0;
        return;
    };
    let mine = joint[agent];
    tom.partner_last_action = Some(joint[1 - agent]);
    tom.partner_still = if prev.players[1 - agent].pos == state.players[1 - agent].pos {
        tom.partner_still + 1
    } else {
        0
    };
    let before = prev.players[agent];
    let now = state.players[agent];
    tom.last_blocked = step_unchecked(layout, prev, *joint).collided(agent);
    // No progress: back in a pose held within the last few ticks, which
    // covers standing still and short back-and-forth cycles.
    let entries = history.entries();
    let revisited = entries
        .iter()
        .rev()
        .take(RECENT_POSES)
        .any(|(s, _)| s.players[agent] == now);
    tom.stuck_counter = if mine != Action::Stay && (before == now || revisited) {
        tom.stuck_counter + 1
    } else {
        0
    };
    if let Some((_, goal)) = tom.current_goal {
        if mine == Action::Interact && goal.reached_by(&before) && before.held != now.held {
            tom.current_goal = None;
            if chance(rng, params.thinking_prob) {
                tom.think_ticks_remaining = THINK_TICKS;
            }
        }
    }
}

fn goal_still_valid(
    planner: &MotionPlanner,
    state: &WorldState,
    agent: usize,
    task: &Task,
    goal: &MotionGoal,
    avoid: &[Pos],
) -> bool {
    let layout = planner.layout();
    !avoid.contains(&goal.cell)
        && interaction_effective(layout, state, agent, goal.target())
        && enumerate_tasks(layout, state)
            .iter()
            .any(|t| t.kind == task.kind)
}

/// Cells to keep goals off: the partner's cell once it has not moved for a
/// while.
fn parked_partner(tom: &ToMState, state: &WorldState, agent: usize) -> Vec<Pos> {
    if tom.partner_still >= STUCK_WINDOW {
        vec![state.players[1 - agent].pos]
    } else {
        Vec::new()
    }
}

fn remove_task(tasks: &mut Vec<Task>, task: &Task) {
    if let Some(i) = tasks.iter().position(|t| t.kind == task.kind) {
        tasks.remove(i);
    }
}

/// Pick a new (task, first motion goal) for `agent`.
fn choose_goal<R: Rng + ?Sized>(
    params: &ToMParams,
    planner: &MotionPlanner,
    state: &WorldState,
    agent: usize,
    avoid: &[Pos],
    rng: &mut R,
) -> Option<(Task, MotionGoal)> {
    let layout = planner.layout();
    let mut tasks = enumerate_tasks(layout, state);
    if chance(rng, params.prob_obs) {
        if let Some(theirs) = infer_partner_task(layout, state, 1 - agent) {
            remove_task(&mut tasks, &theirs);
        }
    }
    let mode = if chance(rng, params.prob_greedy) {
        AllocationMode::Greedy
    } else {
        AllocationMode::Joint {
            horizon: params.lookahead_horizon,
        }
    };
    let here = Situation::of(state, agent);
    let plan_first = |task: Task| {
        plan_task(planner, state, agent, &here, &task, avoid).map(|p| (task, p.first_goal()))
    };

    let own = allocate_tasks(planner, state, agent, &tasks, mode, avoid)
        .ok()
        .and_then(|a: Allocation| a.first_task(agent))
        .and_then(plan_first);
    if own.is_some() {
        return own;
    }
    // Nothing assigned to us: work on whatever we can reach best rather
    // than wait for the partner.
    if let Some(t) = allocate_tasks(planner, state, agent, &tasks, AllocationMode::Greedy, avoid)
        .ok()
        .and_then(|a| a.first_task(agent))
    {
        if let Some(g) = plan_first(t) {
            return Some(g);
        }
    }
    if state.players[agent].held.is_some() {
        return plan_first(Task::new(TaskKind::ClearHands { player: agent }));
    }
    None
}

/// Cells the partner is predicted to visit, starting with its current cell.
/// Among equally short paths the one continuing its last move is assumed.
fn partner_route(
    planner: &MotionPlanner,
    state: &WorldState,
    partner: usize,
    last: Option<Action>,
) -> Vec<Pos> {
    let p = state.players[partner];
    let layout = planner.layout();
    let Some(task) = infer_partner_task(layout, state, partner) else {
        return vec![p.pos];
    };
    let Some(plan) = plan_task(
        planner,
        state,
        partner,
        &Situation::of(state, partner),
        &task,
        &[],
    ) else {
        return vec![p.pos];
    };
    let prefer = last.and_then(Action::direction);
    match planner.path_preferring(p.pos, p.facing, &plan.first_goal(), prefer) {
        Some(path) => planner.route_of(p.pos, p.facing, &path),
        None => vec![p.pos],
    }
}

/// A step to a free neighbouring cell, preferring cells off both our own
/// planned path and the partner's predicted route.
fn avoiding_action(
    planner: &MotionPlanner,
    tom: &ToMState,
    state: &WorldState,
    agent: usize,
    goal: Option<&MotionGoal>,
) -> Option<Action> {
    let layout = planner.layout();
    let me = state.players[agent];
    let other = state.players[1 - agent].pos;
    let own_path = match goal.map(|g| planner.plan_path(state, agent, g, PartnerModel::Ignore)) {
        Some(Ok(plan)) => planner.route_of(me.pos, me.facing, &plan.path),
        _ => vec![me.pos],
    };
    let theirs = partner_route(planner, state, 1 - agent, tom.partner_last_action);
    let mut options: Vec<(bool, Pos, Direction)> = Direction::ALL
        .into_iter()
        .filter_map(|d| layout.neighbor(me.pos, d).map(|c| (c, d)))
        .filter(|(c, _)| layout.is_floor(*c) && *c != other && !own_path.contains(c))
        .map(|(c, d)| (theirs.contains(&c), c, d))
        .collect();
    options.sort();
    options.first().map(|(_, _, d)| Action::from_direction(*d))
}

/// With nothing to do, get off the partner's way.
fn idle<R: Rng + ?Sized>(
    params: &ToMParams,
    tom: &ToMState,
    planner: &MotionPlanner,
    state: &WorldState,
    agent: usize,
    rng: &mut R,
) -> Action {
    let me = state.players[agent].pos;
    let in_the_way = tom.last_blocked
        || partner_route(planner, state, 1 - agent, tom.partner_last_action).contains(&me);
    if in_the_way && chance(rng, params.compliance) {
        if let Some(a) = avoiding_action(planner, tom, state, agent, None) {
            return a;
        }
    }
    Action::Stay
}

fn motion<R: Rng + ?Sized>(
    params: &ToMParams,
    tom: &ToMState,
    planner: &MotionPlanner,
    state: &WorldState,
    agent: usize,
    goal: &MotionGoal,
    rng: &mut R,
) -> Action {
    if goal.reached_by(&state.players[agent]) {
        return Action::Interact;
    }
    let aware = chance(rng, params.path_teamwork);
    if tom.last_blocked && chance(rng, params.compliance) {
        if let Some(a) = avoiding_action(planner, tom, state, agent, Some(goal)) {
            return a;
        }
    }
    let mut costs = if aware {
        let route = partner_route(planner, state, 1 - agent, tom.partner_last_action);
        planner.action_costs(state, agent, goal, PartnerModel::Route(&route))
    } else {
        planner.action_costs(state, agent, goal, PartnerModel::Ignore)
    };
    if costs.iter().all(Option::is_none) {
        costs = planner.action_costs(state, agent, goal, PartnerModel::Ignore);
    }
    boltzmann_select(&finite_costs(&costs), params.rationality_coefficient, rng)
        .unwrap_or(Action::Stay)
}

/// One decision of the Theory-of-Mind agent.
///
/// Gates run in a fixed order: random action, thinking, pausing, stuck
/// recovery, then strategic choice (goal retention or re-planning) and
/// motion choice toward the goal.
pub fn tom_act<R: Rng + ?Sized>(
    params: &ToMParams,
    tom_state: &ToMState,
    history: &History,
    planner: &MotionPlanner,
    state: &WorldState,
    agent: usize,
    rng: &mut R,
) -> (Action, ToMState) {
    let layout = planner.layout();
    let mut tom = tom_state.clone();
    observe(params, &mut tom, history, layout, state, agent, rng);

    if chance(rng, params.prob_random_action) {
        return (random_action(rng), tom);
    }
    if tom.think_ticks_remaining > 0 {
        tom.think_ticks_remaining -= 1;
        return (Action::Stay, tom);
    }
    if chance(rng, params.prob_pausing) {
        return (Action::Stay, tom);
    }
    if tom.stuck_counter >= STUCK_WINDOW {
        if let Some((_, goal)) = tom.current_goal {
            if !goal.reached_by(&state.players[agent]) {
                return (random_action(rng), tom);
            }
        }
    }

    let avoid = parked_partner(&tom, state, agent);
    let keep = match &tom.current_goal {
        Some((task, goal)) => {
            goal_still_valid(planner, state, agent, task, goal, &avoid)
                && chance(rng, params.retain_goals)
        }
        None => false,
    };
    if !keep {
        tom.current_goal = choose_goal(params, planner, state, agent, &avoid, rng);
    }
    let Some((_, goal)) = tom.current_goal else {
        let action = idle(params, &tom, planner, state, agent, rng);
        return (action, tom);
    };
    let action = motion(params, &tom, planner, state, agent, &goal, rng);
    (action, tom)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn layout() -> Layout {
        Layout::parse("t", "XXXPXXX\nO1    S\nX    2X\nXXXDXXX\n").unwrap()
    }

    fn pinned() -> ToMParams {
        ToMParams {
            prob_greedy: 1.0,
            lookahead_horizon: 1,
            prob_obs: 1.0,
            retain_goals: 1.0,
            prob_pausing: 0.0,
            thinking_prob: 0.0,
            compliance: 1.0,
            path_teamwork: 1.0,
            rationality_coefficient: 20.0,
            prob_random_action: 0.0,
        }
    }

    #[test]
    fn onion_next_to_pot_is_potted() {
        let layout = layout();
        let planner = MotionPlanner::new(&layout);
        let mut s = WorldState::initial(&layout);
        s.players[0].pos = Pos::new(1, 3);
        s.players[0].facing = Direction::North;
        s.players[0].held = Some(Object::Onion);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let (a, next) = tom_act(
            &pinned(),
            &ToMState::default(),
            &History::new(),
            &planner,
            &s,
            0,
            &mut rng,
        );
        assert_eq!(a, Action::Interact);
        assert!(
            matches!(next.current_goal, Some((t, _)) if matches!(t.kind, TaskKind::PotOnion { .. }))
        );
    }

    #[test]
    fn partner_inference_uses_held_object() {
        let layout = layout();
        let mut s = WorldState::initial(&layout);
        s.pots
            .insert(Pos::new(0, 3), PotState::Cooking { remaining: 5 });
        s.players[1].held = Some(Object::Dish);
        let t = infer_partner_task(&layout, &s, 1).unwrap();
        assert!(matches!(t.kind, TaskKind::LoadSoup { .. }));
        s.players[1].held = None;
        assert_eq!(infer_partner_task(&layout, &s, 1).map(|t| t.kind), None);
    }

    #[test]
    fn field_of_view_is_a_half_plane() {
        let layout = Layout::parse("t", "XXXXPXX\nO     S\nX 1  2X\nXXXXXDX\n").unwrap();
        let mut s = WorldState::initial(&layout);
        s.players[1].pos = Pos::new(1, 3);
        s.players[1].facing = Direction::East;
        s.counters.insert(Pos::new(0, 5), Object::Onion);
        let t = infer_partner_task(&layout, &s, 1).unwrap();
        assert!(matches!(t.kind, TaskKind::FetchOnion { .. }));
        s.counters.clear();
        s.counters.insert(Pos::new(0, 1), Object::Onion);
        assert_eq!(infer_partner_task(&layout, &s, 1), None);
    }

    #[test]
    fn objects_nearer_the_observer_are_not_claimed() {
        let layout = Layout::parse("t", "XXXXPXX\nO     S\nX 1  2X\nXXXXXDX\n").unwrap();
        let mut s = WorldState::initial(&layout);
        s.players[1].pos = Pos::new(1, 3);
        s.players[1].facing = Direction::East;
        s.players[0].pos = Pos::new(1, 5);
        s.counters.insert(Pos::new(0, 5), Object::Onion);
        assert_eq!(infer_partner_task(&layout, &s, 1), None);
    }

    #[test]
    fn completion_clears_goal_and_replans() {
        let layout = layout();
        let planner = MotionPlanner::new(&layout);
        let mut s = WorldState::initial(&layout);
        s.players[0].pos = Pos::new(1, 1);
        s.players[0].facing = Direction::West;
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut history = History::new();
        let (a, tom) = tom_act(
            &pinned(),
            &ToMState::default(),
            &history,
            &planner,
            &s,
            0,
            &mut rng,
        );
        assert_eq!(a, Action::Interact);
        let joint = [a, Action::Stay];
        let next = step_unchecked(&layout, &s, joint).next_state;
        history.push(s.clone(), joint);
        assert_eq!(next.players[0].held, Some(Object::Onion));
        let (_, tom2) = tom_act(&pinned(), &tom, &history, &planner, &next, 0, &mut rng);
        let (task, _) = tom2.current_goal.unwrap();
        assert!(matches!(task.kind, TaskKind::PotOnion { .. }));
    }
}
