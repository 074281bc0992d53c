//! Canonical text form of [`WorldState`].
//!
//! ```text
//! tick 12
//! player 0 2,3 N onion
//! player 1 1,1 E nothing
//! pot 0,3 idle 2
//! pot 0,6 cooking 13
//! counter 3,0 dish
//! ```
//!
//! Pots and counters are listed in row-major order, so equal states always
//! serialize to identical bytes.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use thiserror::Error;

use super::layout::{Direction, Layout, Pos};
use super::state::{held_name, InvariantViolation, Object, PlayerState, PotState, WorldState};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StateTextError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("invariant violation: {0}")]
    Invariant(#[from] InvariantViolation),
}

pub fn serialize_state(state: &WorldState) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "tick {}", state.tick);
    for (i, p) in state.players.iter().enumerate() {
        let _ = writeln!(
            out,
            "player {i} {} {} {}",
            p.pos,
            p.facing.letter(),
            held_name(p.held)
        );
    }
    for (pos, pot) in &state.pots {
        let _ = match pot {
            PotState::Idle { onions } => writeln!(out, "pot {pos} idle {onions}"),
            PotState::Cooking { remaining } => writeln!(out, "pot {pos} cooking {remaining}"),
            PotState::Ready => writeln!(out, "pot {pos} ready"),
        };
    }
    for (pos, obj) in &state.counters {
        let _ = writeln!(out, "counter {pos} {}", obj.name());
    }
    out
}

/// Parse canonical state text and validate it against `layout`. Pots the
/// text does not mention start empty.
pub fn deserialize_state(text: &str, layout: &Layout) -> Result<WorldState, StateTextError> {
    let mut tick = None;
    let mut players: [Option<PlayerState>; 2] = [None, None];
    let mut pots = BTreeMap::new();
    let mut counters = BTreeMap::new();

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let err = |message: String| StateTextError::Parse { line, message };
        let fields: Vec<&str> = raw.split_whitespace().collect();
        let Some((&head, rest)) = fields.split_first() else {
            continue;
        };
        match (head, rest) {
            ("tick", [n]) => {
                tick = Some(
                    n.parse::<u32>()
                        .map_err(|_| err(format!("bad tick {n:?}")))?,
                );
            }
            ("player", [i, pos, dir, held]) => {
                let i: usize = i
                    .parse()
                    .ok()
                    .filter(|i| *i < 2)
                    .ok_or_else(|| err(format!("bad player index {i:?}")))?;
                if players[i].is_some() {
                    return Err(err(format!("player {i} listed twice")));
                }
                let facing = single_char(dir)
                    .and_then(Direction::from_letter)
                    .ok_or_else(|| err(format!("bad direction {dir:?}")))?;
                players[i] = Some(PlayerState {
                    pos: parse_pos(pos).map_err(err)?,
                    facing,
                    held: parse_held(held).map_err(err)?,
                });
            }
            ("pot", [pos, rest @ ..]) => {
                let pos = parse_pos(pos).map_err(err)?;
                let pot = match rest {
                    ["idle", n] => PotState::Idle {
                        onions: n
                            .parse()
                            .map_err(|_| err(format!("bad onion count {n:?}")))?,
                    },
                    ["cooking", n] => PotState::Cooking {
                        remaining: n
                            .parse()
                            .map_err(|_| err(format!("bad cook timer {n:?}")))?,
                    },
                    ["ready"] => PotState::Ready,
                    _ => return Err(err(format!("bad pot entry {raw:?}"))),
                };
                if pots.insert(pos, pot).is_some() {
                    return Err(err(format!("pot {pos} listed twice")));
                }
            }
            ("counter", [pos, obj]) => {
                let pos = parse_pos(pos).map_err(err)?;
                let obj =
                    Object::from_name(obj).ok_or_else(|| err(format!("bad object {obj:?}")))?;
                if counters.insert(pos, obj).is_some() {
                    return Err(err(format!("counter {pos} listed twice")));
                }
            }
            _ => return Err(err(format!("unrecognised entry {raw:?}"))),
        }
    }

    let missing = |what: &str| StateTextError::Parse {
        line: 0,
        message: format!("missing {what}"),
    };
    let tick = tick.ok_or_else(|| missing("tick"))?;
    let players = [
        players[0].ok_or_else(|| missing("player 0"))?,
        players[1].ok_or_else(|| missing("player 1"))?,
    ];
    for pot in layout.pots() {
        pots.entry(*pot).or_insert(PotState::EMPTY);
    }
    let state = WorldState {
        players,
        pots,
        counters,
        tick,
    };
    state.validate(layout)?;
    Ok(state)
}

fn single_char(s: &str) -> Option<char> {
    let mut chars = s.chars();
    let c = chars.next()?;
    chars.next().is_none().then_some(c)
}

fn parse_pos(s: &str) -> Result<Pos, String> {
    s.parse()
}

fn parse_held(s: &str) -> Result<Option<Object>, String> {
    if s == "nothing" {
        return Ok(None);
    }
    Object::from_name(s)
        .map(Some)
        .ok_or_else(|| format!("bad held object {s:?}"))
}
