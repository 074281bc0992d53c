use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{object_arg, Policy, PolicyError, ToMPolicy};
use crate::grid::{Action, History, Layout, Object, Pos, WorldState};
use crate::planning::{MotionGoal, MotionPlanner, PartnerModel};
use crate::tom::ToMParams;

/// Hand-written partner behaviors for edge-case tests.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ScriptedKind {
    Stationary,
    /// Plays like the layout's human-like ToM, then stays from tick `t` on.
    StationaryAfter(u32),
    UniformRandom,
    /// Plays like the layout's human-like ToM, then acts at random from
    /// tick `t` on.
    RandomAfter(u32),
    /// Walks its shortest path to serve the soup it holds and never yields.
    StubbornDeliverer,
    /// Goes to stand in front of a dispenser of this object and stays.
    DispenserBlocker(Object),
}

impl FromStr for ScriptedKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (name, arg) = match s.split_once(':') {
            Some((n, a)) => (n, Some(a)),
            None => (s, None),
        };
        let ticks = |arg: Option<&str>, default: u32| -> Result<u32, String> {
            match arg {
                None => Ok(default),
                Some(a) => a.parse().map_err(|_| format!("bad tick count {a:?}")),
            }
        };
        match name {
            "stationary" => Ok(ScriptedKind::Stationary),
            "stationary_after" => Ok(ScriptedKind::StationaryAfter(ticks(arg, 0)?)),
            "random" | "uniform_random" => Ok(ScriptedKind::UniformRandom),
            "random_after" => Ok(ScriptedKind::RandomAfter(ticks(arg, 0)?)),
            "stubborn_deliverer" => Ok(ScriptedKind::StubbornDeliverer),
            "dispenser_blocker" => match arg.and_then(object_arg) {
                Some(o @ (Object::Onion | Object::Dish)) => Ok(ScriptedKind::DispenserBlocker(o)),
                _ => Err("dispenser_blocker needs onion or dish".into()),
            },
            _ => Err(format!("unknown scripted kind {name:?}")),
        }
    }
}

impl fmt::Display for ScriptedKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScriptedKind::Stationary => write!(f, "stationary"),
            ScriptedKind::StationaryAfter(t) => write!(f, "stationary_after:{t}"),
            ScriptedKind::UniformRandom => write!(f, "random"),
            ScriptedKind::RandomAfter(t) => write!(f, "random_after:{t}"),
            ScriptedKind::StubbornDeliverer => write!(f, "stubborn_deliverer"),
            ScriptedKind::DispenserBlocker(o) => write!(f, "dispenser_blocker:{}", o.name()),
        }
    }
}

/// The human-like preset for this layout, or a mid-range validation preset
/// for layouts without one.
fn human_like(layout: &Layout) -> ToMParams {
    ToMParams::mle_like(layout.name())
        .or_else(|_| ToMParams::validation("V3"))
        .expect("bundled presets parse")
}

pub(super) fn build(kind: ScriptedKind, layout: &Layout, seed: u64) -> Box<dyn Policy> {
    match kind {
        ScriptedKind::Stationary => Box::new(Fixed(Action::Stay)),
        ScriptedKind::UniformRandom => Box::new(Random(ChaCha8Rng::seed_from_u64(seed))),
        ScriptedKind::StationaryAfter(t) => Box::new(Switch {
            at: t,
            before: ToMPolicy::new(human_like(layout), layout, seed),
            after: Box::new(Fixed(Action::Stay)),
        }),
        ScriptedKind::RandomAfter(t) => Box::new(Switch {
            at: t,
            before: ToMPolicy::new(human_like(layout), layout, seed),
            // A separate stream so the switch point does not shift the
            // random actions.
            after: Box::new(Random(ChaCha8Rng::seed_from_u64(crate::seed::splitmix64(
                seed,
            )))),
        }),
        ScriptedKind::StubbornDeliverer => Box::new(Walker {
            planner: MotionPlanner::shared(layout),
            target: WalkTarget::Serving,
        }),
        ScriptedKind::DispenserBlocker(o) => Box::new(Walker {
            planner: MotionPlanner::shared(layout),
            target: WalkTarget::Dispenser(o),
        }),
    }
}

struct Fixed(Action);

impl Policy for Fixed {
    fn act(
        &mut self,
        _: &History,
        _: &Layout,
        _: &WorldState,
        _: usize,
    ) -> Result<Action, PolicyError> {
        Ok(self.0)
    }
}

struct Random(ChaCha8Rng);

impl Policy for Random {
    fn act(
        &mut self,
        _: &History,
        _: &Layout,
        _: &WorldState,
        _: usize,
    ) -> Result<Action, PolicyError> {
        Ok(Action::ALL[self.0.random_range(0..Action::ALL.len())])
    }
}

struct Switch {
    at: u32,
    before: ToMPolicy,
    after: Box<dyn Policy>,
}

impl Policy for Switch {
    fn act(
        &mut self,
        history: &History,
        layout: &Layout,
        state: &WorldState,
        agent: usize,
    ) -> Result<Action, PolicyError> {
        if (history.len() as u32) < self.at {
            self.before.act(history, layout, state, agent)
        } else {
            self.after.act(history, layout, state, agent)
        }
    }
}

enum WalkTarget {
    Serving,
    Dispenser(Object),
}

/// Follows the partner-unaware shortest path to a fixed kind of tile.
struct Walker {
    planner: Arc<MotionPlanner>,
    target: WalkTarget,
}

impl Walker {
    fn goal(&self, state: &WorldState, agent: usize) -> Option<MotionGoal> {
        let layout = self.planner.layout();
        let me = state.players[agent];
        let targets: &[Pos] = match self.target {
            WalkTarget::Serving => {
                if me.held != Some(Object::Soup) {
                    return None;
                }
                layout.servings()
            }
            WalkTarget::Dispenser(Object::Onion) => layout.onion_dispensers(),
            WalkTarget::Dispenser(_) => layout.dish_dispensers(),
        };
        targets
            .iter()
            .filter_map(|t| self.planner.best_goal(me.pos, me.facing, *t))
            .min_by_key(|(g, d)| (*d, *g))
            .map(|(g, _)| g)
    }
}

impl Policy for Walker {
    fn act(
        &mut self,
        _: &History,
        _: &Layout,
        state: &WorldState,
        agent: usize,
    ) -> Result<Action, PolicyError> {
        let Some(goal) = self.goal(state, agent) else {
            return Ok(Action::Stay);
        };
        if goal.reached_by(&state.players[agent]) {
            return Ok(match self.target {
                WalkTarget::Serving => Action::Interact,
                WalkTarget::Dispenser(_) => Action::Stay,
            });
        }
        Ok(self
            .planner
            .plan_path(state, agent, &goal, PartnerModel::Ignore)
            .ok()
            .and_then(|p| p.path.first().copied())
            .unwrap_or(Action::Stay))
    }
}
