use std::path::Path;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::{
    deserialize_state, serialize_state, InvariantViolation, Layout, StateTextError, WorldState,
};
use crate::rollout::Trajectory;

pub const DEFAULT_STRIDE: usize = 10;
pub const POOL_EXTENSION: &str = "pool";
const POOL_FORMAT: u32 = 1;

#[derive(Debug, Error)]
pub enum PoolError {
    #[error("trajectory {index} was recorded on {found:?}, expected {expected:?}")]
    LayoutMismatch {
        index: usize,
        expected: String,
        found: String,
    },
    #[error("no start states could be extracted")]
    EmptyPool,
    #[error("stride must be positive")]
    ZeroStride,
    #[error("state {index} of trajectory {trajectory} is invalid: {error}")]
    InvalidState {
        trajectory: usize,
        index: usize,
        error: InvariantViolation,
    },
    #[error("weights must be positive and finite, one per state")]
    BadWeights,
    #[error("malformed pool file: {0}")]
    Format(String),
    #[error("pool state {index}: {error}")]
    State { index: usize, error: StateTextError },
    #[error("{0}")]
    Io(#[from] std::io::Error),
}

/// Start states extracted from recorded play, sampled uniformly unless
/// weights are given.
#[derive(Clone, Debug, PartialEq)]
pub struct StartStatePool {
    layout_name: String,
    states: Vec<WorldState>,
    weights: Option<Vec<f64>>,
}

#[derive(Serialize, Deserialize)]
struct PoolFile {
    format: u32,
    layout: String,
    grid: String,
    states: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    weights: Option<Vec<f64>>,
}

/// Every `stride`-th state of each trajectory, starting with its initial
/// state, with the tick reset to 0. Pot timers are kept.
pub fn build_start_pool(
    trajectories: &[Trajectory],
    layout: &Layout,
    stride: usize,
) -> Result<StartStatePool, PoolError> {
    if stride == 0 {
        return Err(PoolError::ZeroStride);
    }
    let mut states = Vec::new();
    for (ti, traj) in trajectories.iter().enumerate() {
        if traj.layout_name != layout.name() || traj.grid != layout.to_text() {
            return Err(PoolError::LayoutMismatch {
                index: ti,
                expected: layout.name().to_string(),
                found: traj.layout_name.clone(),
            });
        }
        for (i, mut s) in traj.states(layout).into_iter().enumerate().step_by(stride) {
            s.tick = 0;
            s.validate(layout)
                .map_err(|error| PoolError::InvalidState {
                    trajectory: ti,
                    index: i,
                    error,
                })?;
            states.push(s);
        }
    }
    StartStatePool::new(layout, states, None)
}

/// Draw one start state.
pub fn sample_start<R: Rng + ?Sized>(pool: &StartStatePool, rng: &mut R) -> WorldState {
    let i = match &pool.weights {
        None => rng.random_range(0..pool.states.len()),
        Some(w) => WeightedIndex::new(w).expect("weights checked").sample(rng),
    };
    pool.states[i].clone()
}

impl StartStatePool {
    pub fn new(
        layout: &Layout,
        states: Vec<WorldState>,
        weights: Option<Vec<f64>>,
    ) -> Result<StartStatePool, PoolError> {
        if states.is_empty() {
            return Err(PoolError::EmptyPool);
        }
        if let Some(w) = &weights {
            if w.len() != states.len() || w.iter().any(|x| !(x.is_finite() && *x > 0.0)) {
                return Err(PoolError::BadWeights);
            }
        }
        for (index, s) in states.iter().enumerate() {
            s.validate(layout)
                .map_err(|error| PoolError::InvalidState {
                    trajectory: 0,
                    index,
                    error,
                })?;
        }
        Ok(StartStatePool {
            layout_name: layout.name().to_string(),
            states,
            weights,
        })
    }

    pub fn layout_name(&self) -> &str {
        &self.layout_name
    }

    pub fn states(&self) -> &[WorldState] {
        &self.states
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn to_json(&self, layout: &Layout) -> String {
        let file = PoolFile {
            format: POOL_FORMAT,
            layout: self.layout_name.clone(),
            grid: layout.to_text(),
            states: self.states.iter().map(serialize_state).collect(),
            weights: self.weights.clone(),
        };
        let mut s = serde_json::to_string_pretty(&file).expect("pool serializes");
        s.push('\n');
        s
    }

    /// Parse a pool file; states are validated against the embedded grid.
    pub fn from_json(text: &str) -> Result<(StartStatePool, Layout), PoolError> {
        let file: PoolFile =
            serde_json::from_str(text).map_err(|e| PoolError::Format(e.to_string()))?;
        if file.format != POOL_FORMAT {
            return Err(PoolError::Format(format!(
                "unsupported format {}",
                file.format
            )));
        }
        let layout = Layout::parse(&file.layout, &file.grid)
            .map_err(|e| PoolError::Format(e.to_string()))?;
        let states = file
            .states
            .iter()
            .enumerate()
            .map(|(index, t)| {
                deserialize_state(t, &layout).map_err(|error| PoolError::State { index, error })
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok((StartStatePool::new(&layout, states, file.weights)?, layout))
    }

    pub fn load(path: &Path) -> Result<(StartStatePool, Layout), PoolError> {
        StartStatePool::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn save(&self, layout: &Layout, path: &Path) -> Result<(), PoolError> {
        std::fs::write(path, self.to_json(layout))?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::policy::PolicySpec;
    use crate::rollout::record_rollout;

    fn traj(layout: &Layout, ticks: u32) -> Trajectory {
        let s = PolicySpec::parse("scripted:random").unwrap();
        record_rollout(layout, [&s, &s], ticks, 3).unwrap()
    }

    #[test]
    fn stride_arithmetic() {
        let layout = crate::assets::layout("room").unwrap();
        let pool = build_start_pool(&[traj(&layout, 400)], &layout, 10).unwrap();
        assert_eq!(pool.len(), 41);
        assert!(pool.states().iter().all(|s| s.tick == 0));
    }

    #[test]
    fn layout_mismatch_and_empty() {
        let room = crate::assets::layout("room").unwrap();
        let other = crate::assets::layout("corridor").unwrap();
        assert!(matches!(
            build_start_pool(&[traj(&room, 5)], &other, 10),
            Err(PoolError::LayoutMismatch { index: 0, .. })
        ));
        assert!(matches!(
            build_start_pool(&[], &room, 10),
            Err(PoolError::EmptyPool)
        ));
        assert!(matches!(
            build_start_pool(&[], &room, 0),
            Err(PoolError::ZeroStride)
        ));
    }

    #[test]
    fn singleton_pool() {
        let layout = crate::assets::layout("room").unwrap();
        let s = WorldState::initial(&layout);
        let pool = StartStatePool::new(&layout, vec![s.clone()], None).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(sample_start(&pool, &mut rng), s);
    }

    #[test]
    fn file_round_trip() {
        let layout = crate::assets::layout("room").unwrap();
        let pool = build_start_pool(&[traj(&layout, 100)], &layout, 10).unwrap();
        let text = pool.to_json(&layout);
        let (back, l) = StartStatePool::from_json(&text).unwrap();
        assert_eq!(back, pool);
        assert_eq!(back.to_json(&l), text);
    }
}
