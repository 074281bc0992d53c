use std::collections::{HashMap, HashSet, VecDeque};
use std::sync::{Arc, Mutex, OnceLock};

use thiserror::Error;

use crate::grid::{Action, Direction, Layout, PlayerState, Pos, Tile, WorldState};

/// Where to stand and which way to face in order to interact with a tile.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MotionGoal {
    pub cell: Pos,
    pub facing: Direction,
}

impl MotionGoal {
    /// The tile an Interact from this goal acts on.
    pub fn target(&self) -> Pos {
        self.cell
            .step(self.facing)
            .expect("motion goals always face an in-bounds tile")
    }

    pub fn reached_by(&self, player: &PlayerState) -> bool {
        player.pos == self.cell && player.facing == self.facing
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PlanResult {
    /// Moves (and waits) leading onto the goal; excludes the final Interact.
    pub path: Vec<Action>,
    pub cost: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum PlanError {
    #[error("goal is unreachable within the planning horizon")]
    Unreachable,
    #[error("goal cell is not a floor cell facing a non-floor tile")]
    InvalidGoal,
}

/// How the partner is treated while planning.
#[derive(Clone, Copy, Debug)]
pub enum PartnerModel<'a> {
    /// The partner's cell is ordinary floor.
    Ignore,
    /// The partner follows `route` (its position at t = 0, 1, ...) and then
    /// stays on the last cell. A single-element route is a static partner.
    Route(&'a [Pos]),
}

const UNREACHABLE: u16 = u16::MAX;

/// Shortest-path machinery for one layout. Nodes are (floor cell, facing)
/// pairs; every action costs one tick.
#[derive(Debug)]
pub struct MotionPlanner {
    layout: Layout,
    /// Cell index -> floor index.
    floor_index: Vec<Option<u16>>,
    floor_cells: Vec<Pos>,
    /// node -> successor node for each direction (move or turn in place).
    succ: Vec<[u16; 4]>,
    /// All-pairs distances, `dist[from * n + to]`.
    dist: Vec<u16>,
}

fn node_id(floor: u16, dir: Direction) -> u16 {
    floor * 4 + dir.index() as u16
}

impl MotionPlanner {
    pub fn new(layout: &Layout) -> MotionPlanner {
        let mut floor_index = vec![None; layout.cell_count()];
        let floor_cells: Vec<Pos> = layout.floor_cells().collect();
        for (i, pos) in floor_cells.iter().enumerate() {
            floor_index[layout.index(*pos)] = Some(i as u16);
        }
        let n = floor_cells.len() * 4;
        let mut succ = Vec::with_capacity(n);
        for pos in &floor_cells {
            let from = floor_index[layout.index(*pos)].unwrap();
            for _ in Direction::ALL {
                let mut row = [0u16; 4];
                for dir in Direction::ALL {
                    let dest = layout
                        .neighbor(*pos, dir)
                        .filter(|p| layout.is_floor(*p))
                        .map_or(from, |p| floor_index[layout.index(p)].unwrap());
                    row[dir.index()] = node_id(dest, dir);
                }
                succ.push(row);
            }
        }

        let mut dist = vec![UNREACHABLE; n * n];
        let mut queue = VecDeque::with_capacity(n);
        for src in 0..n {
            let base = src * n;
            dist[base + src] = 0;
            queue.clear();
            queue.push_back(src as u16);
            while let Some(u) = queue.pop_front() {
                let d = dist[base + u as usize];
                for v in succ[u as usize] {
                    if dist[base + v as usize] == UNREACHABLE {
                        dist[base + v as usize] = d + 1;
                        queue.push_back(v);
                    }
                }
            }
        }

        MotionPlanner {
            layout: layout.clone(),
            floor_index,
            floor_cells,
            succ,
            dist,
        }
    }

    /// A process-wide planner for `layout`, built on first use.
    pub fn shared(layout: &Layout) -> Arc<MotionPlanner> {
        type Cache = Mutex<HashMap<(String, String), Arc<MotionPlanner>>>;
        static CACHE: OnceLock<Cache> = OnceLock::new();
        let key = (layout.name().to_string(), layout.to_text());
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        if let Some(p) = cache.lock().unwrap().get(&key) {
            return Arc::clone(p);
        }
        let planner = Arc::new(MotionPlanner::new(layout));
        cache.lock().unwrap().entry(key).or_insert(planner).clone()
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    fn node_count(&self) -> usize {
        self.floor_cells.len() * 4
    }

    fn node(&self, pos: Pos, facing: Direction) -> Option<u16> {
        if !self.layout.in_bounds(pos) {
            return None;
        }
        self.floor_index[self.layout.index(pos)].map(|f| node_id(f, facing))
    }

    fn node_pos(&self, node: u16) -> Pos {
        self.floor_cells[(node / 4) as usize]
    }

    fn goal_node(&self, goal: &MotionGoal) -> Option<u16> {
        let target = goal.cell.step(goal.facing)?;
        match self.layout.tile_at(target) {
            Some(t) if t != Tile::Floor => self.node(goal.cell, goal.facing),
            _ => None,
        }
    }

    /// Partner-unaware distance from a (cell, facing) pose to a goal.
    pub fn distance(&self, pos: Pos, facing: Direction, goal: &MotionGoal) -> Option<u32> {
        let from = self.node(pos, facing)?;
        let to = self.goal_node(goal)?;
        let d = self.dist[from as usize * self.node_count() + to as usize];
        (d != UNREACHABLE).then_some(d as u32)
    }

    /// All goals from which an Interact acts on `target`, in row-major,
    /// then direction order.
    pub fn goals_for(&self, target: Pos) -> Vec<MotionGoal> {
        let mut goals = Vec::new();
        for dir in Direction::ALL {
            if let Some(cell) = self.layout.neighbor(target, dir) {
                if self.layout.is_floor(cell) {
                    goals.push(MotionGoal {
                        cell,
                        facing: opposite(dir),
                    });
                }
            }
        }
        goals.sort();
        goals
    }

    /// Cheapest goal for interacting with `target` from the given pose.
    pub fn best_goal(&self, pos: Pos, facing: Direction, target: Pos) -> Option<(MotionGoal, u32)> {
        let mut best: Option<(MotionGoal, u32)> = None;
        for goal in self.goals_for(target) {
            if let Some(d) = self.distance(pos, facing, &goal) {
                if best.is_none_or(|(_, b)| d < b) {
                    best = Some((goal, d));
                }
            }
        }
        best
    }

    /// Shortest action sequence taking `agent` onto `goal`.
    pub fn plan_path(
        &self,
        state: &WorldState,
        agent: usize,
        goal: &MotionGoal,
        partner: PartnerModel<'_>,
    ) -> Result<PlanResult, PlanError> {
        let me = state.players[agent];
        let start = self.node(me.pos, me.facing).ok_or(PlanError::InvalidGoal)?;
        let goal_node = self.goal_node(goal).ok_or(PlanError::InvalidGoal)?;
        match partner {
            PartnerModel::Ignore => self.static_path(start, goal_node),
            PartnerModel::Route(route) => self
                .timed_search(start, goal_node, route, 0)
                .map(|path| PlanResult {
                    cost: path.len() as u32,
                    path,
                })
                .ok_or(PlanError::Unreachable),
        }
    }

    fn static_path(&self, start: u16, goal: u16) -> Result<PlanResult, PlanError> {
        let n = self.node_count();
        let row = |node: u16| &self.dist[node as usize * n..(node as usize + 1) * n];
        let d0 = row(start)[goal as usize];
        if d0 == UNREACHABLE {
            return Err(PlanError::Unreachable);
        }
        let mut path = Vec::with_capacity(d0 as usize);
        let mut cur = start;
        while cur != goal {
            let remaining = row(cur)[goal as usize];
            let (dir, next) = Direction::ALL
                .into_iter()
                .map(|d| (d, self.succ[cur as usize][d.index()]))
                .find(|(_, next)| row(*next)[goal as usize] + 1 == remaining)
                .expect("distance table is consistent");
            path.push(Action::from_direction(dir));
            cur = next;
        }
        Ok(PlanResult {
            cost: d0 as u32,
            path,
        })
    }

    fn horizon(&self) -> u32 {
        2 * self.layout.width() as u32 * self.layout.height() as u32
    }

    /// Breadth-first search over (node, time) with the partner following
    /// `route` from time `t0`. Returns the action sequence.
    fn timed_search(&self, start: u16, goal: u16, route: &[Pos], t0: u32) -> Option<Vec<Action>> {
        let partner_at = |t: u32| -> Option<Pos> {
            if route.is_empty() {
                None
            } else {
                Some(route[(t as usize).min(route.len() - 1)])
            }
        };
        if start == goal {
            return Some(Vec::new());
        }
        // Past the end of the route the partner is static, so time no longer
        // matters and states can be merged.
        let settle = route.len().saturating_sub(1) as u32;
        let horizon = self.horizon();
        let key = |node: u16, t: u32| (node, t.min(settle.max(t0)));

        let mut parents: Vec<(u16, u32, usize, Action)> = Vec::new();
        let mut seen: HashSet<(u16, u32)> = HashSet::new();
        let mut frontier: Vec<(u16, usize)> = vec![(start, usize::MAX)];
        seen.insert(key(start, t0));
        let mut t = t0;
        while !frontier.is_empty() && t - t0 < horizon {
            let mut next_frontier = Vec::new();
            let blocked_now = partner_at(t);
            let blocked_next = partner_at(t + 1);
            for &(node, parent) in &frontier {
                let pos = self.node_pos(node);
                for action in [
                    Action::Up,
                    Action::Down,
                    Action::Left,
                    Action::Right,
                    Action::Stay,
                ] {
                    let next = match action.direction() {
                        Some(dir) => {
                            let moved = self.succ[node as usize][dir.index()];
                            let dest = self.node_pos(moved);
                            if dest != pos && Some(dest) == blocked_now {
                                // Engine cancels moves into the partner's cell.
                                self.node(pos, dir).unwrap()
                            } else {
                                moved
                            }
                        }
                        None => node,
                    };
                    if Some(self.node_pos(next)) == blocked_next {
                        continue;
                    }
                    if !seen.insert(key(next, t + 1)) {
                        continue;
                    }
                    parents.push((node, t, parent, action));
                    let idx = parents.len() - 1;
                    if next == goal {
                        let mut path = Vec::new();
                        let mut i = idx;
                        loop {
                            path.push(parents[i].3);
                            if parents[i].2 == usize::MAX {
                                break;
                            }
                            i = parents[i].2;
                        }
                        path.reverse();
                        return Some(path);
                    }
                    next_frontier.push((next, idx));
                }
            }
            frontier = next_frontier;
            t += 1;
        }
        None
    }

    /// Resulting pose after `action` (movement only). With a partner cell
    /// given, moves into it are cancelled.
    pub fn apply(
        &self,
        pos: Pos,
        facing: Direction,
        action: Action,
        blocked: Option<Pos>,
    ) -> (Pos, Direction) {
        let Some(dir) = action.direction() else {
            return (pos, facing);
        };
        let node = self.node(pos, facing).expect("pose on floor");
        let dest = self.node_pos(self.succ[node as usize][dir.index()]);
        if Some(dest) == blocked {
            (pos, dir)
        } else {
            (dest, dir)
        }
    }

    /// Cost of each action toward `goal`: one tick for the action itself plus
    /// the remaining path length from the resulting pose. `None` marks an
    /// action after which the goal is unreachable.
    pub fn action_costs(
        &self,
        state: &WorldState,
        agent: usize,
        goal: &MotionGoal,
        partner: PartnerModel<'_>,
    ) -> [Option<u32>; 6] {
        let me = state.players[agent];
        let mut costs = [None; 6];
        let Some(goal_node) = self.goal_node(goal) else {
            return costs;
        };
        let mut memo: Vec<(u16, Option<u32>)> = Vec::with_capacity(5);
        for (i, action) in Action::ALL.into_iter().enumerate() {
            let remaining = match partner {
                PartnerModel::Ignore => {
                    let (pos, facing) = self.apply(me.pos, me.facing, action, None);
                    self.distance(pos, facing, goal)
                }
                PartnerModel::Route(route) => {
                    let now = route.first().copied();
                    let (pos, facing) = self.apply(me.pos, me.facing, action, now);
                    let after = route.get(1).or(route.last()).copied();
                    if Some(pos) == after {
                        None
                    } else {
                        let node = self.node(pos, facing).unwrap();
                        if let Some((_, c)) = memo.iter().find(|(n, _)| *n == node) {
                            *c
                        } else {
                            let c = self.timed_distance(node, goal_node, route, 1);
                            memo.push((node, c));
                            c
                        }
                    }
                }
            };
            costs[i] = remaining.map(|r| r + 1);
        }
        costs
    }

    /// Partner-aware distance from `node` at time `t0`. Uses the static
    /// shortest path when it never meets the partner's route.
    fn timed_distance(&self, node: u16, goal: u16, route: &[Pos], t0: u32) -> Option<u32> {
        if let Ok(plan) = self.static_path(node, goal) {
            if self.route_is_clear(node, &plan.path, route, t0) {
                return Some(plan.cost);
            }
        }
        self.timed_search(node, goal, route, t0)
            .map(|p| p.len() as u32)
    }

    fn route_is_clear(&self, start: u16, path: &[Action], route: &[Pos], t0: u32) -> bool {
        let at = |t: u32| route.get(t as usize).or(route.last()).copied();
        let mut node = start;
        for (t, action) in (t0..).zip(path) {
            let dir = action.direction().expect("static paths only move");
            let next = self.succ[node as usize][dir.index()];
            let dest = self.node_pos(next);
            if Some(dest) == at(t) || Some(dest) == at(t + 1) {
                return false;
            }
            node = next;
        }
        true
    }

    /// A partner-unaware shortest path that moves in direction `prefer`
    /// whenever doing so stays on some shortest path.
    pub fn path_preferring(
        &self,
        pos: Pos,
        facing: Direction,
        goal: &MotionGoal,
        prefer: Option<Direction>,
    ) -> Option<Vec<Action>> {
        let start = self.node(pos, facing)?;
        let goal = self.goal_node(goal)?;
        let n = self.node_count();
        let d = |node: u16| self.dist[node as usize * n + goal as usize];
        if d(start) == UNREACHABLE {
            return None;
        }
        let mut path = Vec::with_capacity(d(start) as usize);
        let mut cur = start;
        while cur != goal {
            let remaining = d(cur);
            let order = prefer.into_iter().chain(Direction::ALL);
            let (dir, next) = order
                .map(|dir| (dir, self.succ[cur as usize][dir.index()]))
                .find(|(_, next)| d(*next) != UNREACHABLE && d(*next) + 1 == remaining)
                .expect("distance table is consistent");
            path.push(Action::from_direction(dir));
            cur = next;
        }
        Some(path)
    }

    /// Partner-unaware cell sequence of a path, starting with the current
    /// cell. Used to predict where a partner will walk.
    pub fn route_of(&self, start: Pos, facing: Direction, path: &[Action]) -> Vec<Pos> {
        let mut route = vec![start];
        let (mut pos, mut dir) = (start, facing);
        for a in path {
            (pos, dir) = self.apply(pos, dir, *a, None);
            route.push(pos);
        }
        route
    }
}

fn opposite(dir: Direction) -> Direction {
    match dir {
        Direction::North => Direction::South,
        Direction::South => Direction::North,
        Direction::East => Direction::West,
        Direction::West => Direction::East,
    }
}
