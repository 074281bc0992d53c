use std::cmp::Reverse;

use crate::grid::{Layout, Object, Pos, WorldState};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SoupSource {
    Held(usize),
    Counter(Pos),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TaskKind {
    DeliverSoup(SoupSource),
    /// Take the soup out of `pot` with a dish already in hand.
    LoadSoup {
        pot: Pos,
    },
    /// Bring a dish to `pot`.
    FetchDish {
        pot: Pos,
    },
    /// Put a held onion into `pot`.
    PotOnion {
        pot: Pos,
    },
    /// Bring an onion to `pot`.
    FetchOnion {
        pot: Pos,
    },
    /// Put down an object that no open task needs.
    ClearHands {
        player: usize,
    },
}

impl TaskKind {
    pub fn priority(&self) -> u8 {
        match self {
            TaskKind::DeliverSoup(_) => 1,
            TaskKind::LoadSoup { .. } => 2,
            TaskKind::FetchDish { .. } => 3,
            TaskKind::PotOnion { .. } => 4,
            TaskKind::FetchOnion { .. } => 5,
            TaskKind::ClearHands { .. } => 6,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            TaskKind::DeliverSoup(_) => "deliver_soup",
            TaskKind::LoadSoup { .. } => "load_soup",
            TaskKind::FetchDish { .. } => "fetch_dish",
            TaskKind::PotOnion { .. } => "pot_onion",
            TaskKind::FetchOnion { .. } => "fetch_onion",
            TaskKind::ClearHands { .. } => "clear_hands",
        }
    }

    /// Object the executing agent must hold when starting the task; `None`
    /// means empty hands.
    pub fn requires(&self) -> Option<Object> {
        match self {
            TaskKind::DeliverSoup(SoupSource::Held(_)) => Some(Object::Soup),
            TaskKind::LoadSoup { .. } => Some(Object::Dish),
            TaskKind::PotOnion { .. } => Some(Object::Onion),
            _ => None,
        }
    }
}

/// A unit of team work. Lower priority values are more urgent.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Task {
    pub kind: TaskKind,
    pub priority: u8,
}

impl Task {
    pub fn new(kind: TaskKind) -> Task {
        Task {
            priority: kind.priority(),
            kind,
        }
    }
}

/// Open tasks in priority order.
///
/// 1. deliver every soup in existence (held, then on counters);
/// 2. load soup from pots matched to a held dish (ready pots first, then
///    cooking pots by remaining time);
/// 3. fetch a dish for every cooking or ready pot without one;
/// 4. pot every held onion, filling the fullest pots first;
/// 5. fetch an onion for every remaining free pot slot;
/// 6. clear the hands of a player holding an object nothing needs.
///
/// Within a level, entries follow pot-cell row-major order.
pub fn enumerate_tasks(_layout: &Layout, state: &WorldState) -> Vec<Task> {
    let mut tasks = Vec::new();
    let mut useless = [false; 2];

    for (i, p) in state.players.iter().enumerate() {
        if p.held == Some(Object::Soup) {
            tasks.push(TaskKind::DeliverSoup(SoupSource::Held(i)));
        }
    }
    for (pos, obj) in &state.counters {
        if *obj == Object::Soup {
            tasks.push(TaskKind::DeliverSoup(SoupSource::Counter(*pos)));
        }
    }

    // Pots waiting for a dish: ready first, then soonest done.
    let mut need_dish: Vec<(Pos, u8)> = state
        .pots
        .iter()
        .filter_map(|(pos, pot)| match pot {
            crate::grid::PotState::Ready => Some((*pos, 0)),
            crate::grid::PotState::Cooking { remaining } => Some((*pos, *remaining)),
            _ => None,
        })
        .collect();
    need_dish.sort_by_key(|(pos, rem)| (*rem, *pos));
    let dish_holders: Vec<usize> = (0..2)
        .filter(|i| state.players[*i].held == Some(Object::Dish))
        .collect();
    let mut load: Vec<Pos> = Vec::new();
    let mut fetch_dish: Vec<Pos> = Vec::new();
    for (k, (pot, _)) in need_dish.iter().enumerate() {
        if k < dish_holders.len() {
            load.push(*pot);
        } else {
            fetch_dish.push(*pot);
        }
    }
    for holder in dish_holders.iter().skip(need_dish.len()) {
        useless[*holder] = true;
    }
    load.sort();
    fetch_dish.sort();
    tasks.extend(load.into_iter().map(|pot| TaskKind::LoadSoup { pot }));
    tasks.extend(
        fetch_dish
            .into_iter()
            .map(|pot| TaskKind::FetchDish { pot }),
    );

    // Free onion slots, fullest pot first.
    let mut slots: Vec<(Pos, u8, u8)> = state
        .pots
        .iter()
        .filter(|(_, pot)| pot.space() > 0)
        .map(|(pos, pot)| (*pos, pot.onions(), pot.space()))
        .collect();
    slots.sort_by_key(|(pos, onions, _)| (Reverse(*onions), *pos));
    let mut fill_order: Vec<Pos> = slots
        .iter()
        .flat_map(|(pos, _, space)| std::iter::repeat_n(*pos, *space as usize))
        .collect();
    let mut pot_onion = Vec::new();
    for (i, p) in state.players.iter().enumerate() {
        if p.held == Some(Object::Onion) {
            if fill_order.is_empty() {
                useless[i] = true;
            } else {
                pot_onion.push(fill_order.remove(0));
            }
        }
    }
    pot_onion.sort();
    tasks.extend(pot_onion.into_iter().map(|pot| TaskKind::PotOnion { pot }));
    tasks.extend(
        fill_order
            .into_iter()
            .map(|pot| TaskKind::FetchOnion { pot }),
    );

    for (i, flag) in useless.iter().enumerate() {
        if *flag {
            tasks.push(TaskKind::ClearHands { player: i });
        }
    }

    tasks.into_iter().map(Task::new).collect()
}

/// True when `obj` held by some player would serve at least one open task.
pub fn is_useful(tasks: &[Task], obj: Object) -> bool {
    tasks.iter().any(|t| match t.kind {
        TaskKind::DeliverSoup(_) => obj == Object::Soup,
        TaskKind::LoadSoup { .. } | TaskKind::FetchDish { .. } => obj == Object::Dish,
        TaskKind::PotOnion { .. } | TaskKind::FetchOnion { .. } => obj == Object::Onion,
        TaskKind::ClearHands { .. } => false,
    })
}
