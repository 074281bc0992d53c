use super::layout::Layout;
use super::state::{JointAction, WorldState};
use super::step::{step, StepError};

/// The interaction so far: every visited state paired with the joint action
/// taken from it. The current state is not part of the history.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct History {
    entries: Vec<(WorldState, JointAction)>,
}

impl History {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, state: WorldState, actions: JointAction) {
        self.entries.push((state, actions));
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[(WorldState, JointAction)] {
        &self.entries
    }

    pub fn last(&self) -> Option<&(WorldState, JointAction)> {
        self.entries.last()
    }

    /// The most recent `n` entries (fewer when the history is shorter).
    pub fn tail(&self, n: usize) -> &[(WorldState, JointAction)] {
        &self.entries[self.entries.len().saturating_sub(n)..]
    }

    pub fn initial_state(&self) -> Option<&WorldState> {
        self.entries.first().map(|(s, _)| s)
    }

    /// Fold `step` over the recorded actions from the first state. Returns
    /// `None` for an empty history.
    pub fn replay(&self, layout: &Layout) -> Result<Option<WorldState>, StepError> {
        let Some(mut state) = self.initial_state().cloned() else {
            return Ok(None);
        };
        for (_, actions) in &self.entries {
            state = step(layout, &state, *actions)?.next_state;
        }
        Ok(Some(state))
    }

    /// True when every recorded state follows from its predecessor.
    pub fn is_consistent(&self, layout: &Layout) -> bool {
        self.entries
            .windows(2)
            .all(|w| step(layout, &w[0].0, w[0].1).is_ok_and(|o| o.next_state == w[1].0))
    }
}
