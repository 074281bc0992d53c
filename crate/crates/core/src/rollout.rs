//! Running episodes and recording them as trajectories.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::{
    deserialize_state, serialize_state, step_unchecked, Action, History, JointAction, Layout,
    LayoutError, StateTextError, StepOutcome, WorldState,
};
use crate::policy::{Policy, PolicyError, PolicySpec};
use crate::seed;

/// A finished (or interrupted) episode.
#[derive(Clone, Debug)]
pub struct Episode {
    pub history: History,
    pub final_state: WorldState,
    pub rewards: Vec<u32>,
}

impl Episode {
    pub fn total_reward(&self) -> u32 {
        self.rewards.iter().sum()
    }

    pub fn actions(&self) -> Vec<JointAction> {
        self.history.entries().iter().map(|(_, a)| *a).collect()
    }
}

#[derive(Debug, Error)]
#[error("policy in slot {agent} failed at tick {tick}: {error}")]
pub struct EpisodeFailure {
    pub agent: usize,
    pub tick: u32,
    pub error: PolicyError,
    pub partial: Box<Episode>,
}

/// Roll `policies` forward from `start` for at most `horizon` ticks.
/// `observe` sees every transition and may stop the episode early by
/// returning `true`.
pub fn run_episode<F>(
    layout: &Layout,
    start: WorldState,
    policies: &mut [Box<dyn Policy>; 2],
    horizon: u32,
    mut observe: F,
) -> Result<Episode, EpisodeFailure>
where
    F: FnMut(&WorldState, JointAction, &StepOutcome) -> bool,
{
    let mut history = History::new();
    let mut state = start;
    let mut rewards = Vec::with_capacity(horizon as usize);
    for tick in 0..horizon {
        let mut joint = [Action::Stay; 2];
        for agent in 0..2 {
            match policies[agent].act(&history, layout, &state, agent) {
                Ok(a) => joint[agent] = a,
                Err(error) => {
                    let total = rewards.iter().sum();
                    for p in policies.iter_mut() {
                        p.end(total);
                    }
                    return Err(EpisodeFailure {
                        agent,
                        tick,
                        error,
                        partial: Box::new(Episode {
                            history,
                            final_state: state,
                            rewards,
                        }),
                    });
                }
            }
        }
        let outcome = step_unchecked(layout, &state, joint);
        rewards.push(outcome.reward);
        let stop = observe(&state, joint, &outcome);
        history.push(state, joint);
        state = outcome.next_state;
        if stop {
            break;
        }
    }
    let episode = Episode {
        history,
        final_state: state,
        rewards,
    };
    for p in policies.iter_mut() {
        p.end(episode.total_reward());
    }
    Ok(episode)
}

/// Seed of the policy in `slot` for an episode seeded with `episode_seed`.
pub fn slot_seed(episode_seed: u64, slot: usize) -> u64 {
    seed::derive(episode_seed, &[slot as u64])
}

#[derive(Debug, Error)]
pub enum RolloutError {
    #[error("could not build policy for slot {agent}: {error}")]
    Build { agent: usize, error: PolicyError },
    #[error(transparent)]
    Failed(#[from] EpisodeFailure),
}

/// Play one episode from the layout's initial state and record it.
pub fn record_rollout(
    layout: &Layout,
    specs: [&PolicySpec; 2],
    horizon: u32,
    seed: u64,
) -> Result<Trajectory, RolloutError> {
    let mut policies: Vec<Box<dyn Policy>> = Vec::with_capacity(2);
    for (agent, spec) in specs.iter().enumerate() {
        policies.push(
            spec.build(layout, slot_seed(seed, agent))
                .map_err(|error| RolloutError::Build { agent, error })?,
        );
    }
    let mut policies: [Box<dyn Policy>; 2] = policies.try_into().ok().expect("two policies");
    let start = WorldState::initial(layout);
    let episode = run_episode(layout, start.clone(), &mut policies, horizon, |_, _, _| {
        false
    })?;
    Ok(Trajectory::from_episode(
        layout,
        &start,
        &episode,
        format!("{} + {}", specs[0], specs[1]),
        seed,
    ))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrajectoryMeta {
    pub source: String,
    pub seed: u64,
}

#[derive(Debug, Error)]
pub enum TrajectoryError {
    #[error("malformed trajectory: {0}")]
    Format(String),
    #[error("trajectory layout: {0}")]
    Layout(#[from] LayoutError),
    #[error("trajectory initial state: {0}")]
    State(#[from] StateTextError),
    #[error("{0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum VerifyError {
    #[error("state diverges from the recording at tick {tick}")]
    StateMismatch { tick: usize },
    #[error("reward diverges from the recording at tick {tick}: recorded {recorded}, replayed {replayed}")]
    RewardMismatch {
        tick: usize,
        recorded: u32,
        replayed: u32,
    },
    #[error("recording has {actions} actions but {rewards} rewards and {checksums} checksums")]
    LengthMismatch {
        actions: usize,
        rewards: usize,
        checksums: usize,
    },
}

/// A recorded episode. States after each tick are stored as checksums of
/// their canonical text, so replays can be verified tick by tick.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Trajectory {
    pub layout_name: String,
    pub grid: String,
    pub initial_state: WorldState,
    pub actions: Vec<JointAction>,
    pub rewards: Vec<u32>,
    pub checksums: Vec<u64>,
    pub meta: TrajectoryMeta,
}

#[derive(Serialize, Deserialize)]
struct TrajectoryFile {
    layout: String,
    grid: String,
    initial_state: String,
    actions: Vec<[String; 2]>,
    rewards: Vec<u32>,
    checksums: Vec<String>,
    metadata: TrajectoryMeta,
}

fn checksum(state: &WorldState) -> u64 {
    seed::fnv1a(serialize_state(state).as_bytes())
}

impl Trajectory {
    pub fn from_episode(
        layout: &Layout,
        start: &WorldState,
        episode: &Episode,
        source: String,
        seed: u64,
    ) -> Trajectory {
        let entries = episode.history.entries();
        let mut checksums: Vec<u64> = entries.iter().skip(1).map(|(s, _)| checksum(s)).collect();
        if !entries.is_empty() {
            checksums.push(checksum(&episode.final_state));
        }
        Trajectory {
            layout_name: layout.name().to_string(),
            grid: layout.to_text(),
            initial_state: start.clone(),
            actions: episode.actions(),
            rewards: episode.rewards.clone(),
            checksums,
            meta: TrajectoryMeta { source, seed },
        }
    }

    pub fn layout(&self) -> Result<Layout, LayoutError> {
        Layout::parse(&self.layout_name, &self.grid)
    }

    pub fn total_reward(&self) -> u32 {
        self.rewards.iter().sum()
    }

    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }

    /// All states from the initial one to the last, by re-stepping.
    pub fn states(&self, layout: &Layout) -> Vec<WorldState> {
        let mut out = Vec::with_capacity(self.actions.len() + 1);
        out.push(self.initial_state.clone());
        for a in &self.actions {
            let next = step_unchecked(layout, out.last().unwrap(), *a).next_state;
            out.push(next);
        }
        out
    }

    /// Re-step the recorded actions and compare rewards and state checksums.
    pub fn verify(&self, layout: &Layout) -> Result<(), VerifyError> {
        if self.rewards.len() != self.actions.len() || self.checksums.len() != self.actions.len() {
            return Err(VerifyError::LengthMismatch {
                actions: self.actions.len(),
                rewards: self.rewards.len(),
                checksums: self.checksums.len(),
            });
        }
        let mut state = self.initial_state.clone();
        for (tick, a) in self.actions.iter().enumerate() {
            let out = step_unchecked(layout, &state, *a);
            if checksum(&out.next_state) != self.checksums[tick] {
                return Err(VerifyError::StateMismatch { tick });
            }
            if out.reward != self.rewards[tick] {
                return Err(VerifyError::RewardMismatch {
                    tick,
                    recorded: self.rewards[tick],
                    replayed: out.reward,
                });
            }
            state = out.next_state;
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        let file = TrajectoryFile {
            layout: self.layout_name.clone(),
            grid: self.grid.clone(),
            initial_state: serialize_state(&self.initial_state),
            actions: self
                .actions
                .iter()
                .map(|j| [j[0].wire_name().to_string(), j[1].wire_name().to_string()])
                .collect(),
            rewards: self.rewards.clone(),
            checksums: self.checksums.iter().map(|c| format!("{c:016x}")).collect(),
            metadata: self.meta.clone(),
        };
        let mut s = serde_json::to_string(&file).expect("trajectory serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Trajectory, TrajectoryError> {
        let file: TrajectoryFile =
            serde_json::from_str(text).map_err(|e| TrajectoryError::Format(e.to_string()))?;
        let layout = Layout::parse(&file.layout, &file.grid)?;
        let initial_state = deserialize_state(&file.initial_state, &layout)?;
        let mut actions = Vec::with_capacity(file.actions.len());
        for (i, [a, b]) in file.actions.iter().enumerate() {
            let parse = |s: &String| {
                s.parse::<Action>().map_err(|_| {
                    TrajectoryError::Format(format!("action {i}: unknown action {s:?}"))
                })
            };
            actions.push([parse(a)?, parse(b)?]);
        }
        let checksums = file
            .checksums
            .iter()
            .map(|c| {
                u64::from_str_radix(c, 16)
                    .map_err(|_| TrajectoryError::Format(format!("bad checksum {c:?}")))
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Trajectory {
            layout_name: file.layout,
            grid: file.grid,
            initial_state,
            actions,
            rewards: file.rewards,
            checksums,
            meta: file.metadata,
        })
    }

    pub fn load(path: &Path) -> Result<Trajectory, TrajectoryError> {
        Trajectory::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn save(&self, path: &Path) -> Result<(), TrajectoryError> {
        std::fs::write(path, self.to_json())?;
        Ok(())
    }
}
