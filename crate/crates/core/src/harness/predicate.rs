use std::fmt;

use serde::{Deserialize, Serialize};

use crate::grid::{Event, Layout, Object, Pos, StepOutcome, Tile, WorldState, POT_CAPACITY};

/// What the tested agent must achieve, and by when. Every variant is judged
/// on the tested agent's own contribution, so a partner doing the work alone
/// does not count.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SuccessPredicate {
    /// The tested agent serves a soup.
    DeliveredWithin { ticks: u32 },
    /// The tested agent is holding `object`.
    HoldsObjectWithin { object: Object, ticks: u32 },
    /// The tested agent has left `cell`, where it starts.
    CellVacatedWithin {
        #[serde(with = "pos_text")]
        cell: Pos,
        ticks: u32,
    },
    /// `pot` holds at least `onions` onions (a cooking or ready pot holds
    /// three) and the tested agent has put at least one of them in.
    PotContainsWithin {
        #[serde(with = "pos_text")]
        pot: Pos,
        onions: u8,
        ticks: u32,
    },
    /// The tested agent picks up the object lying on counter `cell`.
    CounterObjectRemovedWithin {
        #[serde(with = "pos_text")]
        cell: Pos,
        ticks: u32,
    },
    /// The tested agent's hands are empty.
    DroppedHeldWithin { ticks: u32 },
    /// Deliveries by the tested agent earn at least `points`.
    RewardAtLeastWithin { points: u32, ticks: u32 },
}

mod pos_text {
    use serde::{Deserialize, Deserializer, Serializer};

    use crate::grid::Pos;

    pub fn serialize<S: Serializer>(pos: &Pos, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(pos)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Pos, D::Error> {
        let text = String::deserialize(d)?;
        text.parse().map_err(serde::de::Error::custom)
    }
}

impl SuccessPredicate {
    pub fn ticks(&self) -> u32 {
        match *self {
            SuccessPredicate::DeliveredWithin { ticks }
            | SuccessPredicate::HoldsObjectWithin { ticks, .. }
            | SuccessPredicate::CellVacatedWithin { ticks, .. }
            | SuccessPredicate::PotContainsWithin { ticks, .. }
            | SuccessPredicate::CounterObjectRemovedWithin { ticks, .. }
            | SuccessPredicate::DroppedHeldWithin { ticks }
            | SuccessPredicate::RewardAtLeastWithin { ticks, .. } => ticks,
        }
    }

    /// The same predicate with a different tick budget.
    pub fn with_ticks(mut self, budget: u32) -> SuccessPredicate {
        match &mut self {
            SuccessPredicate::DeliveredWithin { ticks }
            | SuccessPredicate::HoldsObjectWithin { ticks, .. }
            | SuccessPredicate::CellVacatedWithin { ticks, .. }
            | SuccessPredicate::PotContainsWithin { ticks, .. }
            | SuccessPredicate::CounterObjectRemovedWithin { ticks, .. }
            | SuccessPredicate::DroppedHeldWithin { ticks }
            | SuccessPredicate::RewardAtLeastWithin { ticks, .. } => *ticks = budget,
        }
        self
    }

    /// Check the predicate against the layout alone.
    pub fn check_layout(&self, layout: &Layout) -> Result<(), String> {
        if self.ticks() == 0 {
            return Err("predicate needs a positive tick budget".into());
        }
        match *self {
            SuccessPredicate::CellVacatedWithin { cell, .. } if !layout.is_floor(cell) => {
                Err(format!("{cell} is not a floor cell"))
            }
            SuccessPredicate::PotContainsWithin { pot, onions, .. } => {
                if layout.tile_at(pot) != Some(Tile::Pot) {
                    Err(format!("{pot} is not a pot"))
                } else if onions == 0 || onions > POT_CAPACITY {
                    Err(format!("onion count must be 1..={POT_CAPACITY}"))
                } else {
                    Ok(())
                }
            }
            SuccessPredicate::CounterObjectRemovedWithin { cell, .. }
                if layout.tile_at(cell) != Some(Tile::Counter) =>
            {
                Err(format!("{cell} is not a counter"))
            }
            SuccessPredicate::HoldsObjectWithin {
                object: Object::Soup,
                ..
            } => Ok(()),
            SuccessPredicate::RewardAtLeastWithin { points: 0, .. } => {
                Err("reward threshold must be positive".into())
            }
            _ => Ok(()),
        }
    }

    /// Check that the predicate is not already satisfied at `start`, so that
    /// only an acting tested agent can satisfy it.
    pub fn check_start(&self, start: &WorldState, tested: usize) -> Result<(), String> {
        let me = &start.players[tested];
        match *self {
            SuccessPredicate::HoldsObjectWithin { object, .. } if me.held == Some(object) => {
                Err(format!("tested agent already holds {}", object.name()))
            }
            SuccessPredicate::CellVacatedWithin { cell, .. } if me.pos != cell => {
                Err(format!("tested agent does not start on {cell}"))
            }
            SuccessPredicate::PotContainsWithin { pot, onions, .. }
                if pot_onions(start, pot) >= onions =>
            {
                Err(format!("pot {pot} already holds {onions} onions"))
            }
            SuccessPredicate::CounterObjectRemovedWithin { cell, .. }
                if start.counter_object(cell).is_none() =>
            {
                Err(format!("counter {cell} is empty"))
            }
            SuccessPredicate::DroppedHeldWithin { .. } if me.held.is_none() => {
                Err("tested agent holds nothing".into())
            }
            _ => Ok(()),
        }
    }

    pub fn tracker(&self, tested: usize) -> PredicateTracker {
        PredicateTracker {
            predicate: *self,
            tested,
            potted: false,
            reward: 0,
        }
    }
}

fn pot_onions(state: &WorldState, pot: Pos) -> u8 {
    state.pot(pot).map_or(0, |p| p.onions())
}

impl fmt::Display for SuccessPredicate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            SuccessPredicate::DeliveredWithin { ticks } => write!(f, "delivered within {ticks}"),
            SuccessPredicate::HoldsObjectWithin { object, ticks } => {
                write!(f, "holds {} within {ticks}", object.name())
            }
            SuccessPredicate::CellVacatedWithin { cell, ticks } => {
                write!(f, "vacates {cell} within {ticks}")
            }
            SuccessPredicate::PotContainsWithin { pot, onions, ticks } => {
                write!(f, "pot {pot} has {onions} onions within {ticks}")
            }
            SuccessPredicate::CounterObjectRemovedWithin { cell, ticks } => {
                write!(f, "clears counter {cell} within {ticks}")
            }
            SuccessPredicate::DroppedHeldWithin { ticks } => {
                write!(f, "empties hands within {ticks}")
            }
            SuccessPredicate::RewardAtLeastWithin { points, ticks } => {
                write!(f, "earns {points} within {ticks}")
            }
        }
    }
}

/// Incremental evaluation of a predicate over the transitions of a rollout.
#[derive(Clone, Debug)]
pub struct PredicateTracker {
    predicate: SuccessPredicate,
    tested: usize,
    potted: bool,
    reward: u32,
}

impl PredicateTracker {
    /// Feed the transition into the state of `outcome`. Returns true once
    /// the predicate holds.
    pub fn observe(&mut self, outcome: &StepOutcome) -> bool {
        let me = self.tested;
        let next = &outcome.next_state;
        let player = &next.players[me];
        match self.predicate {
            SuccessPredicate::DeliveredWithin { .. } => outcome
                .events
                .contains(&Event::SoupDelivered { player: me }),
            SuccessPredicate::HoldsObjectWithin { object, .. } => player.held == Some(object),
            SuccessPredicate::CellVacatedWithin { cell, .. } => player.pos != cell,
            SuccessPredicate::PotContainsWithin { pot, onions, .. } => {
                self.potted |= outcome
                    .events
                    .contains(&Event::OnionPotted { player: me, pot });
                self.potted && pot_onions(next, pot) >= onions
            }
            SuccessPredicate::CounterObjectRemovedWithin { cell, .. } => outcome
                .events
                .iter()
                .any(|e| matches!(*e, Event::ObjectPickedUp { player, cell: c, .. } if player == me && c == cell)),
            SuccessPredicate::DroppedHeldWithin { .. } => player.held.is_none(),
            SuccessPredicate::RewardAtLeastWithin { points, .. } => {
                let delivered = outcome
                    .events
                    .iter()
                    .filter(|e| **e == Event::SoupDelivered { player: me })
                    .count() as u32;
                self.reward += delivered * crate::grid::SOUP_REWARD;
                self.reward >= points
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn toml_form() {
        let p = SuccessPredicate::PotContainsWithin {
            pot: Pos::new(2, 4),
            onions: 3,
            ticks: 20,
        };
        let text = toml::to_string(&p).unwrap();
        assert!(text.contains("kind = \"pot_contains_within\""), "{text}");
        assert!(text.contains("pot = \"2,4\""), "{text}");
        assert_eq!(toml::from_str::<SuccessPredicate>(&text).unwrap(), p);
    }

    #[test]
    fn budget_override() {
        let p = SuccessPredicate::DroppedHeldWithin { ticks: 20 }.with_ticks(5);
        assert_eq!(p.ticks(), 5);
    }
}
