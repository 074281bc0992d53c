use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::layout::{Direction, Layout, Pos, Tile};

/// Ticks a full pot needs before the soup is ready.
pub const COOK_TIME: u8 = 20;
/// Onions that fill a pot.
pub const POT_CAPACITY: u8 = 3;
/// Points for serving one soup.
pub const SOUP_REWARD: u32 = 20;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Object {
    Onion,
    Dish,
    Soup,
}

impl Object {
    pub fn name(self) -> &'static str {
        match self {
            Object::Onion => "onion",
            Object::Dish => "dish",
            Object::Soup => "soup",
        }
    }

    pub fn from_name(s: &str) -> Option<Object> {
        match s {
            "onion" => Some(Object::Onion),
            "dish" => Some(Object::Dish),
            "soup" => Some(Object::Soup),
            _ => None,
        }
    }
}

/// Name of a held slot, `"nothing"` for empty hands.
pub fn held_name(held: Option<Object>) -> &'static str {
    held.map_or("nothing", Object::name)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PotState {
    /// Accepting onions; `onions < POT_CAPACITY`.
    Idle {
        onions: u8,
    },
    /// Full and cooking, `remaining` ticks left (1..=COOK_TIME).
    Cooking {
        remaining: u8,
    },
    Ready,
}

impl PotState {
    pub const EMPTY: PotState = PotState::Idle { onions: 0 };

    /// Onions physically in the pot.
    pub fn onions(self) -> u8 {
        match self {
            PotState::Idle { onions } => onions,
            PotState::Cooking { .. } | PotState::Ready => POT_CAPACITY,
        }
    }

    pub fn is_ready(self) -> bool {
        self == PotState::Ready
    }

    pub fn is_cooking(self) -> bool {
        matches!(self, PotState::Cooking { .. })
    }

    /// Free onion slots; zero once cooking has started.
    pub fn space(self) -> u8 {
        match self {
            PotState::Idle { onions } => POT_CAPACITY - onions,
            _ => 0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PlayerState {
    pub pos: Pos,
    pub facing: Direction,
    pub held: Option<Object>,
}

impl PlayerState {
    /// The cell this player would interact with.
    pub fn faced_cell(&self) -> Option<Pos> {
        self.pos.step(self.facing)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Action {
    Up,
    Down,
    Left,
    Right,
    Stay,
    Interact,
}

impl Action {
    pub const ALL: [Action; 6] = [
        Action::Up,
        Action::Down,
        Action::Left,
        Action::Right,
        Action::Stay,
        Action::Interact,
    ];

    pub const MOVES: [Action; 4] = [Action::Up, Action::Down, Action::Left, Action::Right];

    pub fn direction(self) -> Option<Direction> {
        match self {
            Action::Up => Some(Direction::North),
            Action::Down => Some(Direction::South),
            Action::Left => Some(Direction::West),
            Action::Right => Some(Direction::East),
            Action::Stay | Action::Interact => None,
        }
    }

    pub fn from_direction(dir: Direction) -> Action {
        match dir {
            Direction::North => Action::Up,
            Direction::South => Action::Down,
            Direction::West => Action::Left,
            Direction::East => Action::Right,
        }
    }

    pub fn index(self) -> usize {
        Action::ALL.iter().position(|a| *a == self).unwrap()
    }

    /// Wire name used by trajectory files and the policy protocol.
    pub fn wire_name(self) -> &'static str {
        match self {
            Action::Up => "UP",
            Action::Down => "DOWN",
            Action::Left => "LEFT",
            Action::Right => "RIGHT",
            Action::Stay => "STAY",
            Action::Interact => "INTERACT",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown action {0:?}")]
pub struct UnknownAction(pub String);

impl FromStr for Action {
    type Err = UnknownAction;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Action::ALL
            .into_iter()
            .find(|a| a.wire_name().eq_ignore_ascii_case(s))
            .ok_or_else(|| UnknownAction(s.to_string()))
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.wire_name())
    }
}

pub type JointAction = [Action; 2];

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum InvariantViolation {
    #[error("player {player} at {pos} is not on a floor cell")]
    PlayerOffFloor { player: usize, pos: Pos },
    #[error("both players occupy {0}")]
    PlayersOverlap(Pos),
    #[error("counter object at {0}, which is not a counter")]
    ObjectOffCounter(Pos),
    #[error("pot entry at {0}, which is not a pot")]
    NotAPot(Pos),
    #[error("pot at {0} has no state entry")]
    MissingPot(Pos),
    #[error("pot at {pos} is invalid: {reason}")]
    BadPot { pos: Pos, reason: &'static str },
}

/// Dynamic part of the kitchen.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct WorldState {
    pub players: [PlayerState; 2],
    /// One entry per pot in the layout.
    pub pots: BTreeMap<Pos, PotState>,
    pub counters: BTreeMap<Pos, Object>,
    pub tick: u32,
}

impl WorldState {
    /// The deterministic start state: players on their spawns facing north,
    /// empty hands, empty pots and counters.
    pub fn initial(layout: &Layout) -> WorldState {
        let spawns = layout.spawn_points();
        let player = |pos| PlayerState {
            pos,
            facing: Direction::North,
            held: None,
        };
        WorldState {
            players: [player(spawns[0]), player(spawns[1])],
            pots: layout
                .pots()
                .iter()
                .map(|p| (*p, PotState::EMPTY))
                .collect(),
            counters: BTreeMap::new(),
            tick: 0,
        }
    }

    pub fn pot(&self, pos: Pos) -> Option<PotState> {
        self.pots.get(&pos).copied()
    }

    /// Object lying on `pos` if it is a counter.
    pub fn counter_object(&self, pos: Pos) -> Option<Object> {
        self.counters.get(&pos).copied()
    }

    /// Index of the player standing on `pos`.
    pub fn player_at(&self, pos: Pos) -> Option<usize> {
        self.players.iter().position(|p| p.pos == pos)
    }

    pub fn validate(&self, layout: &Layout) -> Result<(), InvariantViolation> {
        for (i, p) in self.players.iter().enumerate() {
            if !layout.is_floor(p.pos) {
                return Err(InvariantViolation::PlayerOffFloor {
                    player: i,
                    pos: p.pos,
                });
            }
        }
        if self.players[0].pos == self.players[1].pos {
            return Err(InvariantViolation::PlayersOverlap(self.players[0].pos));
        }
        for pos in self.counters.keys() {
            if layout.tile_at(*pos) != Some(Tile::Counter) {
                return Err(InvariantViolation::ObjectOffCounter(*pos));
            }
        }
        for (pos, pot) in &self.pots {
            if layout.tile_at(*pos) != Some(Tile::Pot) {
                return Err(InvariantViolation::NotAPot(*pos));
            }
            let bad = match *pot {
                PotState::Idle { onions } if onions >= POT_CAPACITY => {
                    Some("idle pot cannot hold a full load")
                }
                PotState::Cooking { remaining } if remaining == 0 || remaining > COOK_TIME => {
                    Some("cook timer out of range")
                }
                _ => None,
            };
            if let Some(reason) = bad {
                return Err(InvariantViolation::BadPot { pos: *pos, reason });
            }
        }
        for pot in layout.pots() {
            if !self.pots.contains_key(pot) {
                return Err(InvariantViolation::MissingPot(*pot));
            }
        }
        Ok(())
    }

    /// Counts of (onions, dishes, soups) across hands, counters and pots.
    /// A cooking or ready pot counts its three onions.
    pub fn object_counts(&self) -> [u32; 3] {
        let mut counts = [0u32; 3];
        let mut add = |o: Object| match o {
            Object::Onion => counts[0] += 1,
            Object::Dish => counts[1] += 1,
            Object::Soup => counts[2] += 1,
        };
        for p in &self.players {
            if let Some(o) = p.held {
                add(o);
            }
        }
        for o in self.counters.values() {
            add(*o);
        }
        for pot in self.pots.values() {
            counts[0] += pot.onions() as u32;
        }
        counts
    }
}

/// Something observable that happened during one tick.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum Event {
    OnionPotted {
        player: usize,
        pot: Pos,
    },
    CookStarted {
        pot: Pos,
    },
    SoupPickedUp {
        player: usize,
        pot: Pos,
    },
    SoupDelivered {
        player: usize,
    },
    ObjectPlaced {
        player: usize,
        cell: Pos,
        object: Object,
    },
    /// Pickup from a counter or a dispenser.
    ObjectPickedUp {
        player: usize,
        cell: Pos,
        object: Object,
    },
    Collision {
        players: [usize; 2],
    },
}

impl Event {
    pub fn involves(&self, player: usize) -> bool {
        match *self {
            Event::OnionPotted { player: p, .. }
            | Event::SoupPickedUp { player: p, .. }
            | Event::SoupDelivered { player: p }
            | Event::ObjectPlaced { player: p, .. }
            | Event::ObjectPickedUp { player: p, .. } => p == player,
            Event::Collision { players } => players.contains(&player),
            Event::CookStarted { .. } => false,
        }
    }
}
