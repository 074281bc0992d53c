//! The deterministic two-player kitchen: layouts, states, the simultaneous
//! move transition function and its sparse reward.

mod history;
mod layout;
mod state;
mod step;
mod text;

pub use history::History;
pub use layout::{Direction, Layout, LayoutError, Pos, Tile};
pub use state::{
    held_name, Action, Event, InvariantViolation, JointAction, Object, PlayerState, PotState,
    UnknownAction, WorldState, COOK_TIME, POT_CAPACITY, SOUP_REWARD,
};
pub use step::{step, step_unchecked, StepError, StepOutcome};
pub use text::{deserialize_state, serialize_state, StateTextError};

/// Episode length used when a caller does not specify one.
pub const DEFAULT_HORIZON: u32 = 400;
