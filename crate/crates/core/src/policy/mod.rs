//! A uniform interface over ToM agents, scripted partners, trajectory replay
//! and external subprocess policies.

mod external;
mod scripted;

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::grid::{Action, History, Layout, Object, WorldState};
use crate::planning::MotionPlanner;
use crate::rollout::{Trajectory, TrajectoryError};
use crate::tom::{tom_act, ParamError, ToMParams, ToMState};

pub use external::{ExternalPolicy, FromAgent, ToAgent, DEFAULT_TIMEOUT_MS};
pub use scripted::ScriptedKind;

#[derive(Debug, Error)]
pub enum PolicyError {
    #[error("bad policy spec {spec:?}: {message}")]
    Spec { spec: String, message: String },
    #[error(transparent)]
    Params(#[from] ParamError),
    #[error("external policy did not answer within {0} ms")]
    ExternalTimeout(u64),
    #[error("external policy protocol error: {0}")]
    ExternalProtocol(String),
    #[error("trajectory recorded on layout {found:?}, used on {expected:?}")]
    ReplayLayoutMismatch { expected: String, found: String },
    #[error(transparent)]
    Trajectory(#[from] TrajectoryError),
    #[error("{0}")]
    Io(#[from] std::io::Error),
}

/// A policy instance bound to one episode. `history` holds the episode so
/// far; its length is the episode-relative tick.
pub trait Policy: Send {
    fn act(
        &mut self,
        history: &History,
        layout: &Layout,
        state: &WorldState,
        agent: usize,
    ) -> Result<Action, PolicyError>;

    /// Called once when the episode ends.
    fn end(&mut self, _total_reward: u32) {}
}

/// Source of a trajectory for replay.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ReplaySource {
    /// A bundled trajectory by file stem.
    Bundled(String),
    Path(PathBuf),
}

/// How to build a policy. Parsed from `kind:argument` strings:
/// `tom:<preset>`, `tom:<file.params>`, `scripted:<kind>[:<t>]`,
/// `replay:<name or path>`, `external:<command>`.
#[derive(Clone, Debug, PartialEq)]
pub enum PolicySpec {
    /// A named preset, resolved against the layout at build time.
    Tom(String),
    TomParams(ToMParams),
    Scripted(ScriptedKind),
    Replay(ReplaySource),
    External(String),
}

impl PolicySpec {
    pub fn parse(text: &str) -> Result<PolicySpec, PolicyError> {
        let err = |m: &str| PolicyError::Spec {
            spec: text.to_string(),
            message: m.to_string(),
        };
        let (kind, arg) = text
            .split_once(':')
            .ok_or_else(|| err("expected kind:argument"))?;
        match kind {
            "tom" => {
                if arg.ends_with(".params") {
                    let body = std::fs::read_to_string(arg)?;
                    Ok(PolicySpec::TomParams(ToMParams::parse(&body)?))
                } else if arg.is_empty() {
                    Err(err("missing preset"))
                } else {
                    Ok(PolicySpec::Tom(arg.to_string()))
                }
            }
            "scripted" => Ok(PolicySpec::Scripted(
                arg.parse().map_err(|m: String| err(&m))?,
            )),
            "replay" => {
                if arg.is_empty() {
                    return Err(err("missing trajectory"));
                }
                if crate::assets::trajectory_files()
                    .iter()
                    .any(|(n, _)| *n == arg)
                {
                    Ok(PolicySpec::Replay(ReplaySource::Bundled(arg.to_string())))
                } else {
                    Ok(PolicySpec::Replay(ReplaySource::Path(PathBuf::from(arg))))
                }
            }
            "external" => {
                let cmd = arg.trim();
                if cmd.is_empty() {
                    Err(err("missing command"))
                } else {
                    Ok(PolicySpec::External(cmd.to_string()))
                }
            }
            _ => Err(err("unknown policy kind")),
        }
    }

    /// True for policies that need a process of their own per rollout.
    pub fn is_external(&self) -> bool {
        matches!(self, PolicySpec::External(_))
    }

    /// Check the spec against a layout without running anything.
    pub fn check(&self, layout: &Layout) -> Result<(), PolicyError> {
        match self {
            PolicySpec::External(_) => Ok(()),
            _ => self.build(layout, 0).map(|_| ()),
        }
    }

    /// Instantiate for one episode.
    pub fn build(&self, layout: &Layout, seed: u64) -> Result<Box<dyn Policy>, PolicyError> {
        Ok(match self {
            PolicySpec::Tom(name) => Box::new(ToMPolicy::new(
                ToMParams::preset(name, Some(layout.name()))?,
                layout,
                seed,
            )),
            PolicySpec::TomParams(p) => Box::new(ToMPolicy::new(*p, layout, seed)),
            PolicySpec::Scripted(kind) => scripted::build(*kind, layout, seed),
            PolicySpec::Replay(src) => {
                let traj = match src {
                    ReplaySource::Bundled(name) => {
                        let text = crate::assets::trajectory_files()
                            .iter()
                            .find(|(n, _)| n == name)
                            .map(|(_, t)| *t)
                            .ok_or_else(|| PolicyError::Spec {
                                spec: self.to_string(),
                                message: "no such bundled trajectory".into(),
                            })?;
                        Trajectory::from_json(text)?
                    }
                    ReplaySource::Path(p) => Trajectory::load(p)?,
                };
                if traj.layout_name != layout.name() {
                    return Err(PolicyError::ReplayLayoutMismatch {
                        expected: layout.name().to_string(),
                        found: traj.layout_name.clone(),
                    });
                }
                Box::new(ReplayPolicy {
                    actions: Arc::new(traj.actions),
                })
            }
            PolicySpec::External(cmd) => {
                Box::new(ExternalPolicy::new(cmd.clone(), seed, DEFAULT_TIMEOUT_MS))
            }
        })
    }
}

impl FromStr for PolicySpec {
    type Err = PolicyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        PolicySpec::parse(s)
    }
}

impl fmt::Display for PolicySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PolicySpec::Tom(name) => write!(f, "tom:{name}"),
            PolicySpec::TomParams(p) => {
                write!(f, "tom:custom({})", p.to_text().trim().replace('\n', ", "))
            }
            PolicySpec::Scripted(k) => write!(f, "scripted:{k}"),
            PolicySpec::Replay(ReplaySource::Bundled(n)) => write!(f, "replay:{n}"),
            PolicySpec::Replay(ReplaySource::Path(p)) => write!(f, "replay:{}", p.display()),
            PolicySpec::External(cmd) => write!(f, "external:{cmd}"),
        }
    }
}

/// A policy spec paired with the seed of its random stream.
#[derive(Clone, Debug, PartialEq)]
pub struct PolicyHandle {
    pub spec: PolicySpec,
    pub seed: u64,
}

impl PolicyHandle {
    pub fn build(&self, layout: &Layout) -> Result<Box<dyn Policy>, PolicyError> {
        self.spec.build(layout, self.seed)
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum PopulationError {
    #[error("population has no members")]
    Empty,
    #[error("weights must be positive and finite, one per member")]
    BadWeights,
}

/// A weighted set of partner policies, one sampled per episode.
#[derive(Clone, Debug, PartialEq)]
pub struct Population {
    members: Vec<PolicySpec>,
    weights: Vec<f64>,
}

impl Population {
    pub fn new(members: Vec<PolicySpec>, weights: Vec<f64>) -> Result<Population, PopulationError> {
        if members.is_empty() {
            return Err(PopulationError::Empty);
        }
        if weights.len() != members.len() || weights.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
            return Err(PopulationError::BadWeights);
        }
        let total: f64 = weights.iter().sum();
        Ok(Population {
            members,
            weights: weights.iter().map(|w| w / total).collect(),
        })
    }

    pub fn uniform(members: Vec<PolicySpec>) -> Result<Population, PopulationError> {
        let n = members.len();
        Population::new(members, vec![1.0; n])
    }

    pub fn members(&self) -> &[PolicySpec] {
        &self.members
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// Index of a member drawn by weight.
    pub fn sample_index<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        for (i, w) in self.weights.iter().enumerate() {
            acc += w;
            if u < acc {
                return i;
            }
        }
        self.weights.len() - 1
    }

    pub fn sample_member<R: Rng + ?Sized>(&self, rng: &mut R) -> &PolicySpec {
        &self.members[self.sample_index(rng)]
    }
}

/// The Theory-of-Mind agent as a policy.
pub struct ToMPolicy {
    params: ToMParams,
    state: ToMState,
    planner: Arc<MotionPlanner>,
    rng: ChaCha8Rng,
}

impl ToMPolicy {
    pub fn new(params: ToMParams, layout: &Layout, seed: u64) -> ToMPolicy {
        ToMPolicy {
            params,
            state: ToMState::default(),
            planner: MotionPlanner::shared(layout),
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }
}

impl Policy for ToMPolicy {
    fn act(
        &mut self,
        history: &History,
        _layout: &Layout,
        state: &WorldState,
        agent: usize,
    ) -> Result<Action, PolicyError> {
        let (action, next) = tom_act(
            &self.params,
            &self.state,
            history,
            &self.planner,
            state,
            agent,
            &mut self.rng,
        );
        self.state = next;
        Ok(action)
    }
}

/// Plays back one slot of a recorded trajectory, then stays.
pub struct ReplayPolicy {
    actions: Arc<Vec<[Action; 2]>>,
}

impl Policy for ReplayPolicy {
    fn act(
        &mut self,
        history: &History,
        _layout: &Layout,
        _state: &WorldState,
        agent: usize,
    ) -> Result<Action, PolicyError> {
        Ok(self
            .actions
            .get(history.len())
            .map_or(Action::Stay, |j| j[agent]))
    }
}

pub(crate) fn object_arg(s: &str) -> Option<Object> {
    Object::from_name(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spec_round_trip() {
        for s in [
            "tom:max_capability",
            "tom:V3",
            "scripted:stationary",
            "scripted:stationary_after:40",
            "scripted:random",
            "scripted:random_after:10",
            "scripted:stubborn_deliverer",
            "scripted:dispenser_blocker:onion",
            "external:python3 agent.py",
        ] {
            assert_eq!(PolicySpec::parse(s).unwrap().to_string(), s);
        }
    }

    #[test]
    fn bad_specs() {
        for s in [
            "tom",
            "bogus:1",
            "scripted:dance",
            "scripted:stationary_after:x",
            "external: ",
        ] {
            assert!(PolicySpec::parse(s).is_err(), "{s}");
        }
    }

    #[test]
    fn population_normalizes() {
        let a = PolicySpec::parse("scripted:stationary").unwrap();
        let p = Population::new(vec![a.clone(), a], vec![3.0, 1.0]).unwrap();
        assert_eq!(p.weights(), &[0.75, 0.25]);
        assert_eq!(Population::uniform(vec![]), Err(PopulationError::Empty));
    }
}
