use std::collections::btree_map::Entry;

use thiserror::Error;

use super::layout::{Layout, Pos, Tile};
use super::state::{
    Action, Event, InvariantViolation, JointAction, Object, PotState, WorldState, COOK_TIME,
    POT_CAPACITY, SOUP_REWARD,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StepError {
    #[error("invalid state: {0}")]
    InvalidState(#[from] InvariantViolation),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StepOutcome {
    pub next_state: WorldState,
    pub reward: u32,
    pub events: Vec<Event>,
}

impl StepOutcome {
    pub fn deliveries(&self) -> usize {
        self.events
            .iter()
            .filter(|e| matches!(e, Event::SoupDelivered { .. }))
            .count()
    }

    pub fn collided(&self, player: usize) -> bool {
        self.events
            .iter()
            .any(|e| matches!(e, Event::Collision { .. }) && e.involves(player))
    }
}

/// Advance the kitchen by one tick.
///
/// Both players act simultaneously. Moves are resolved first, then interacts
/// (player 0 before player 1), then cook timers of pots that were already
/// cooking at the start of the tick count down.
pub fn step(
    layout: &Layout,
    state: &WorldState,
    actions: JointAction,
) -> Result<StepOutcome, StepError> {
    state.validate(layout)?;
    Ok(step_unchecked(layout, state, actions))
}

/// [`step`] without the precondition check. The caller guarantees `state`
/// is valid for `layout`.
pub fn step_unchecked(layout: &Layout, state: &WorldState, actions: JointAction) -> StepOutcome {
    let mut next = state.clone();
    let mut events = Vec::new();
    let mut reward = 0;

    resolve_moves(layout, &mut next, actions, &mut events);

    let cooking_before: Vec<Pos> = state
        .pots
        .iter()
        .filter(|(_, p)| p.is_cooking())
        .map(|(pos, _)| *pos)
        .collect();

    for (player, action) in actions.iter().enumerate() {
        if *action == Action::Interact {
            reward += interact(layout, &mut next, player, &mut events);
        }
    }

    for pos in cooking_before {
        if let Some(pot) = next.pots.get_mut(&pos) {
            if let PotState::Cooking { remaining } = *pot {
                *pot = if remaining <= 1 {
                    PotState::Ready
                } else {
                    PotState::Cooking {
                        remaining: remaining - 1,
                    }
                };
            }
        }
    }

    next.tick += 1;
    StepOutcome {
        next_state: next,
        reward,
        events,
    }
}

fn resolve_moves(
    layout: &Layout,
    next: &mut WorldState,
    actions: JointAction,
    events: &mut Vec<Event>,
) {
    let current = [next.players[0].pos, next.players[1].pos];
    let mut proposal: [Option<Pos>; 2] = [None, None];
    let mut bumped = false;

    for i in 0..2 {
        let Some(dir) = actions[i].direction() else {
            continue;
        };
        next.players[i].facing = dir;
        let Some(target) = layout.neighbor(current[i], dir) else {
            continue;
        };
        if !layout.is_floor(target) {
            continue;
        }
        if target == current[1 - i] {
            bumped = true;
            continue;
        }
        proposal[i] = Some(target);
    }

    if let (Some(a), Some(b)) = (proposal[0], proposal[1]) {
        if a == b {
            proposal = [None, None];
            bumped = true;
        }
    }
    // Swaps are already cancelled above: each mover targets the other's
    // current cell.

    for (player, target) in next.players.iter_mut().zip(proposal) {
        if let Some(target) = target {
            player.pos = target;
        }
    }
    if bumped {
        events.push(Event::Collision { players: [0, 1] });
    }
}

fn interact(layout: &Layout, next: &mut WorldState, player: usize, events: &mut Vec<Event>) -> u32 {
    let p = next.players[player];
    let Some(cell) = p.faced_cell() else {
        return 0;
    };
    let Some(tile) = layout.tile_at(cell) else {
        return 0;
    };
    let held = p.held;
    match (tile, held) {
        (Tile::OnionDispenser, None) => {
            next.players[player].held = Some(Object::Onion);
            events.push(Event::ObjectPickedUp {
                player,
                cell,
                object: Object::Onion,
            });
        }
        (Tile::DishDispenser, None) => {
            next.players[player].held = Some(Object::Dish);
            events.push(Event::ObjectPickedUp {
                player,
                cell,
                object: Object::Dish,
            });
        }
        (Tile::Pot, Some(Object::Onion)) => {
            let pot = next.pots.entry(cell).or_insert(PotState::EMPTY);
            if let PotState::Idle { onions } = *pot {
                let onions = onions + 1;
                next.players[player].held = None;
                events.push(Event::OnionPotted { player, pot: cell });
                if onions >= POT_CAPACITY {
                    *pot = PotState::Cooking {
                        remaining: COOK_TIME,
                    };
                    events.push(Event::CookStarted { pot: cell });
                } else {
                    *pot = PotState::Idle { onions };
                }
            }
        }
        (Tile::Pot, Some(Object::Dish)) => {
            if next.pot(cell) == Some(PotState::Ready) {
                next.pots.insert(cell, PotState::EMPTY);
                next.players[player].held = Some(Object::Soup);
                events.push(Event::SoupPickedUp { player, pot: cell });
            }
        }
        (Tile::Serving, Some(Object::Soup)) => {
            next.players[player].held = None;
            events.push(Event::SoupDelivered { player });
            return SOUP_REWARD;
        }
        (Tile::Counter, Some(object)) => {
            if let Entry::Vacant(slot) = next.counters.entry(cell) {
                slot.insert(object);
                next.players[player].held = None;
                events.push(Event::ObjectPlaced {
                    player,
                    cell,
                    object,
                });
            }
        }
        (Tile::Counter, None) => {
            if let Some(object) = next.counters.remove(&cell) {
                next.players[player].held = Some(object);
                events.push(Event::ObjectPickedUp {
                    player,
                    cell,
                    object,
                });
            }
        }
        _ => {}
    }
    0
}
