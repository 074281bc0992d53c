use thiserror::Error;

use super::motion::{MotionGoal, MotionPlanner};
use super::tasks::{SoupSource, Task, TaskKind};
use crate::grid::{Direction, Object, Pos, PotState, WorldState};

/// Where an agent is and what it carries, possibly hypothetically (after
/// finishing earlier tasks in its list).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Situation {
    pub pos: Pos,
    pub facing: Direction,
    pub held: Option<Object>,
}

impl Situation {
    pub fn of(state: &WorldState, agent: usize) -> Situation {
        let p = state.players[agent];
        Situation {
            pos: p.pos,
            facing: p.facing,
            held: p.held,
        }
    }

    fn at(goal: MotionGoal, held: Option<Object>) -> Situation {
        Situation {
            pos: goal.cell,
            facing: goal.facing,
            held,
        }
    }
}

/// How one agent would carry out one task: a sequence of interaction goals.
/// The first leg is the agent's immediate sub-goal.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TaskPlan {
    pub legs: Vec<MotionGoal>,
    pub cost: u32,
    pub end: Situation,
}

impl TaskPlan {
    pub fn first_goal(&self) -> MotionGoal {
        self.legs[0]
    }
}

/// A pose an agent can be in after some legs: the goal it stands on, the
/// cheapest time to get there and the index of its predecessor in the
/// previous layer.
#[derive(Clone, Copy, Debug)]
struct Node {
    goal: MotionGoal,
    cost: u32,
    parent: usize,
}

/// One leg of a task: interact with any of `targets`, not before tick
/// `ready_at`.
struct Leg {
    targets: Vec<Pos>,
    ready_at: u32,
}

impl Leg {
    fn to(targets: Vec<Pos>) -> Leg {
        Leg {
            targets,
            ready_at: 0,
        }
    }
}

/// Extend every start by one leg. Each goal of the leg keeps its cheapest
/// predecessor.
fn relax(
    planner: &MotionPlanner,
    starts: &[(Pos, Direction, u32)],
    leg: &Leg,
    avoid: &[Pos],
) -> Vec<Node> {
    let mut out = Vec::new();
    for target in &leg.targets {
        for goal in planner.goals_for(*target) {
            if avoid.contains(&goal.cell) {
                continue;
            }
            let mut best: Option<Node> = None;
            for (i, (pos, facing, c)) in starts.iter().enumerate() {
                if let Some(d) = planner.distance(*pos, *facing, &goal) {
                    let cost = (c + d).max(leg.ready_at);
                    if best.is_none_or(|b| cost < b.cost) {
                        best = Some(Node {
                            goal,
                            cost,
                            parent: i,
                        });
                    }
                }
            }
            out.extend(best);
        }
    }
    out
}

/// Layers of reachable goals, one per leg. `None` if some leg has no
/// reachable goal.
fn run_legs(
    planner: &MotionPlanner,
    starts: &[(Pos, Direction, u32)],
    legs: &[Leg],
    avoid: &[Pos],
) -> Option<Vec<Vec<Node>>> {
    let mut layers: Vec<Vec<Node>> = Vec::with_capacity(legs.len());
    let mut frontier = starts.to_vec();
    for leg in legs {
        let layer = relax(planner, &frontier, leg, avoid);
        if layer.is_empty() {
            return None;
        }
        frontier = layer
            .iter()
            .map(|n| (n.goal.cell, n.goal.facing, n.cost))
            .collect();
        layers.push(layer);
    }
    Some(layers)
}

fn free_counters(planner: &MotionPlanner, state: &WorldState) -> Vec<Pos> {
    planner
        .layout()
        .counters()
        .iter()
        .filter(|c| !state.counters.contains_key(c))
        .copied()
        .collect()
}

fn sources(planner: &MotionPlanner, state: &WorldState, obj: Object) -> Vec<Pos> {
    let layout = planner.layout();
    let mut out: Vec<Pos> = match obj {
        Object::Onion => layout.onion_dispensers().to_vec(),
        Object::Dish => layout.dish_dispensers().to_vec(),
        Object::Soup => Vec::new(),
    };
    out.extend(
        state
            .counters
            .iter()
            .filter(|(_, o)| **o == obj)
            .map(|(p, _)| *p),
    );
    out
}

/// The legs of `task` for `agent` holding `held`, and what it holds after.
/// `None` when the agent cannot do the task. An agent holding something when
/// the task needs empty hands first puts it down on a free counter.
fn task_legs(
    planner: &MotionPlanner,
    state: &WorldState,
    agent: usize,
    held: Option<Object>,
    task: &Task,
) -> Option<(Vec<Leg>, Option<Object>)> {
    let mut legs = Vec::new();
    if let TaskKind::ClearHands { player } = task.kind {
        if player != agent || held.is_none() {
            return None;
        }
        return Some((vec![Leg::to(free_counters(planner, state))], None));
    }
    match (task.kind.requires(), held) {
        (Some(need), Some(have)) if need == have => {}
        (Some(_), _) => return None,
        (None, None) => {}
        (None, Some(_)) => legs.push(Leg::to(free_counters(planner, state))),
    }
    let servings = || planner.layout().servings().to_vec();
    let end_held = match task.kind {
        TaskKind::DeliverSoup(SoupSource::Held(holder)) => {
            if holder != agent {
                return None;
            }
            legs.push(Leg::to(servings()));
            None
        }
        TaskKind::DeliverSoup(SoupSource::Counter(c)) => {
            legs.push(Leg::to(vec![c]));
            legs.push(Leg::to(servings()));
            None
        }
        TaskKind::LoadSoup { pot } => {
            let ready_at = match state.pot(pot) {
                Some(PotState::Cooking { remaining }) => remaining as u32,
                _ => 0,
            };
            legs.push(Leg {
                targets: vec![pot],
                ready_at,
            });
            Some(Object::Soup)
        }
        TaskKind::FetchDish { pot } => {
            legs.push(Leg::to(sources(planner, state, Object::Dish)));
            legs.push(Leg::to(vec![pot]));
            Some(Object::Dish)
        }
        TaskKind::PotOnion { pot } => {
            legs.push(Leg::to(vec![pot]));
            None
        }
        TaskKind::FetchOnion { pot } => {
            legs.push(Leg::to(sources(planner, state, Object::Onion)));
            legs.push(Leg::to(vec![pot]));
            None
        }
        TaskKind::ClearHands { .. } => unreachable!("handled above"),
    };
    Some((legs, end_held))
}

/// Plan `task` for `agent` starting from `from`: the cheapest choice of
/// interaction goals over all legs. `None` when the agent cannot do the task
/// (wrong object in hand, not its soup, or unreachable). No leg ends on a
/// cell in `avoid`.
pub fn plan_task(
    planner: &MotionPlanner,
    state: &WorldState,
    agent: usize,
    from: &Situation,
    task: &Task,
    avoid: &[Pos],
) -> Option<TaskPlan> {
    let (legs, end_held) = task_legs(planner, state, agent, from.held, task)?;
    let layers = run_legs(planner, &[(from.pos, from.facing, 0)], &legs, avoid)?;
    let last = layers.last()?;
    let mut i = (0..last.len()).min_by_key(|&i| last[i].cost)?;
    let cost = last[i].cost;
    let mut goals = Vec::with_capacity(layers.len());
    for layer in layers.iter().rev() {
        goals.push(layer[i].goal);
        i = layer[i].parent;
    }
    goals.reverse();
    let end = Situation::at(*goals.last().unwrap(), end_held);
    Some(TaskPlan {
        legs: goals,
        cost,
        end,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AllocationMode {
    /// Only the acting agent, only its single best task.
    Greedy,
    /// Both agents over the first `horizon` tasks, minimizing makespan.
    Joint { horizon: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum AllocationError {
    #[error("no assignment of the open tasks is feasible")]
    NoFeasibleAssignment,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Allocation {
    /// (task, agent) pairs in list order.
    pub assignment: Vec<(Task, usize)>,
    /// Each agent's tasks in execution order.
    pub lists: [Vec<Task>; 2],
    /// Greedy: the chosen task's cost. Joint: the makespan.
    pub cost: u32,
}

impl Allocation {
    pub fn first_task(&self, agent: usize) -> Option<Task> {
        self.lists[agent].first().copied()
    }
}

/// Least total time for `agent` to do `tasks` in order, minimizing over
/// the goals of every leg of every task; `None` if some task is infeasible.
pub fn sequence_cost(
    planner: &MotionPlanner,
    state: &WorldState,
    agent: usize,
    tasks: &[Task],
    avoid: &[Pos],
) -> Option<u32> {
    let me = state.players[agent];
    let mut frontier = vec![(me.pos, me.facing, 0)];
    let mut held = me.held;
    for t in tasks {
        let (legs, end_held) = task_legs(planner, state, agent, held, t)?;
        let layers = run_legs(planner, &frontier, &legs, avoid)?;
        frontier = layers
            .last()?
            .iter()
            .map(|n| (n.goal.cell, n.goal.facing, n.cost))
            .collect();
        held = end_held;
    }
    frontier.iter().map(|f| f.2).min()
}

/// Assign open tasks. `avoid` lists cells the acting agent's legs must not
/// end on; the other agent's legs are unrestricted.
pub fn allocate_tasks(
    planner: &MotionPlanner,
    state: &WorldState,
    agent: usize,
    tasks: &[Task],
    mode: AllocationMode,
    avoid: &[Pos],
) -> Result<Allocation, AllocationError> {
    match mode {
        AllocationMode::Greedy => greedy(planner, state, agent, tasks, avoid),
        AllocationMode::Joint { horizon } => {
            joint(planner, state, agent, tasks, horizon.max(1), avoid)
        }
    }
}

fn greedy(
    planner: &MotionPlanner,
    state: &WorldState,
    agent: usize,
    tasks: &[Task],
    avoid: &[Pos],
) -> Result<Allocation, AllocationError> {
    let here = Situation::of(state, agent);
    let mut best: Option<(u8, u32, Task)> = None;
    for t in tasks {
        if let Some(plan) = plan_task(planner, state, agent, &here, t, avoid) {
            if best.is_none_or(|(p, c, _)| (t.priority, plan.cost) < (p, c)) {
                best = Some((t.priority, plan.cost, *t));
            }
        }
    }
    let (_, cost, task) = best.ok_or(AllocationError::NoFeasibleAssignment)?;
    let mut lists = [Vec::new(), Vec::new()];
    lists[agent].push(task);
    Ok(Allocation {
        assignment: vec![(task, agent)],
        lists,
        cost,
    })
}

fn joint(
    planner: &MotionPlanner,
    state: &WorldState,
    agent: usize,
    tasks: &[Task],
    horizon: usize,
    avoid: &[Pos],
) -> Result<Allocation, AllocationError> {
    let avoid_of = |a: usize| if a == agent { avoid } else { &[][..] };
    // Tasks neither agent can start are outside the team's reach right now.
    let here = [Situation::of(state, 0), Situation::of(state, 1)];
    let window: Vec<Task> = tasks
        .iter()
        .filter(|t| {
            (0..2).any(|a| plan_task(planner, state, a, &here[a], t, avoid_of(a)).is_some())
        })
        .take(horizon)
        .copied()
        .collect();
    if window.is_empty() {
        return Err(AllocationError::NoFeasibleAssignment);
    }
    let n = window.len();
    let mut best: Option<(u32, u32)> = None;
    // Masks in numeric order are assignments in lexicographic order, with
    // the first task as the most significant digit.
    for mask in 0u32..(1 << n) {
        let mut lists: [Vec<Task>; 2] = [Vec::new(), Vec::new()];
        for (i, t) in window.iter().enumerate() {
            lists[((mask >> (n - 1 - i)) & 1) as usize].push(*t);
        }
        let Some(c0) = sequence_cost(planner, state, 0, &lists[0], avoid_of(0)) else {
            continue;
        };
        let Some(c1) = sequence_cost(planner, state, 1, &lists[1], avoid_of(1)) else {
            continue;
        };
        let makespan = c0.max(c1);
        if best.is_none_or(|(b, _)| makespan < b) {
            best = Some((makespan, mask));
        }
    }
    let (cost, mask) = best.ok_or(AllocationError::NoFeasibleAssignment)?;
    let mut lists: [Vec<Task>; 2] = [Vec::new(), Vec::new()];
    let mut assignment = Vec::with_capacity(n);
    for (i, t) in window.iter().enumerate() {
        let who = ((mask >> (n - 1 - i)) & 1) as usize;
        lists[who].push(*t);
        assignment.push((*t, who));
    }
    Ok(Allocation {
        assignment,
        lists,
        cost,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Layout;
    use crate::planning::tasks::enumerate_tasks;

    fn layout() -> Layout {
        Layout::parse("t", "XXPXXXPXX\nO1      S\nX      2X\nXXXXDXXXX\n").unwrap()
    }

    #[test]
    fn single_task_greedy_and_joint_agree_when_assigned_to_actor() {
        let layout = layout();
        let planner = MotionPlanner::new(&layout);
        let mut s = WorldState::initial(&layout);
        s.players[0].held = Some(Object::Soup);
        let tasks = enumerate_tasks(&layout, &s);
        let g = allocate_tasks(&planner, &s, 0, &tasks, AllocationMode::Greedy, &[]).unwrap();
        let j = allocate_tasks(
            &planner,
            &s,
            0,
            &tasks,
            AllocationMode::Joint { horizon: 1 },
            &[],
        )
        .unwrap();
        assert_eq!(g.first_task(0), j.first_task(0));
        assert_eq!(
            g.first_task(0).unwrap().kind,
            TaskKind::DeliverSoup(SoupSource::Held(0))
        );
    }

    #[test]
    fn greedy_breaks_priority_ties_by_cost() {
        let layout = layout();
        let planner = MotionPlanner::new(&layout);
        let mut s = WorldState::initial(&layout);
        // Player 0 holds an onion; both pots have room. Pot (0,2) is next to it.
        s.players[0].held = Some(Object::Onion);
        s.players[1].held = Some(Object::Onion);
        let near = Task::new(TaskKind::PotOnion {
            pot: Pos::new(0, 2),
        });
        let far = Task::new(TaskKind::PotOnion {
            pot: Pos::new(0, 6),
        });
        let here = Situation::of(&s, 0);
        let c_near = plan_task(&planner, &s, 0, &here, &near, &[]).unwrap().cost;
        let c_far = plan_task(&planner, &s, 0, &here, &far, &[]).unwrap().cost;
        assert!(c_near < c_far);
        let a = allocate_tasks(&planner, &s, 0, &[far, near], AllocationMode::Greedy, &[]).unwrap();
        assert_eq!(a.first_task(0), Some(near));
        assert_eq!(a.cost, c_near);
    }

    #[test]
    fn joint_splits_work_to_minimize_makespan() {
        let layout = layout();
        let planner = MotionPlanner::new(&layout);
        let mut s = WorldState::initial(&layout);
        s.players[0].held = Some(Object::Onion);
        s.players[1].held = Some(Object::Onion);
        let tasks = enumerate_tasks(&layout, &s);
        let a = allocate_tasks(
            &planner,
            &s,
            0,
            &tasks,
            AllocationMode::Joint { horizon: 2 },
            &[],
        )
        .unwrap();
        assert_eq!(a.lists[0].len(), 1);
        assert_eq!(a.lists[1].len(), 1);
    }

    #[test]
    fn drop_leg_precedes_fetch_when_hands_full() {
        let layout = layout();
        let planner = MotionPlanner::new(&layout);
        let mut s = WorldState::initial(&layout);
        s.players[0].held = Some(Object::Dish);
        let t = Task::new(TaskKind::FetchOnion {
            pot: Pos::new(0, 2),
        });
        let plan = plan_task(&planner, &s, 0, &Situation::of(&s, 0), &t, &[]).unwrap();
        assert_eq!(plan.legs.len(), 3);
        assert_eq!(
            planner.layout().tile(plan.legs[0].target()),
            crate::grid::Tile::Counter
        );
    }
}
