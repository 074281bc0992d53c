use std::collections::VecDeque;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// A grid coordinate. Ordering is row-major, which is the tie-break order used
/// throughout the planner and task enumeration.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Pos {
    pub row: u16,
    pub col: u16,
}

impl Pos {
    pub const fn new(row: u16, col: u16) -> Self {
        Pos { row, col }
    }

    /// The neighbouring cell in `dir`, or `None` when it would leave the
    /// non-negative quadrant.
    pub fn step(self, dir: Direction) -> Option<Pos> {
        let (dr, dc) = dir.delta();
        let row = self.row as i32 + dr;
        let col = self.col as i32 + dc;
        if row < 0 || col < 0 {
            return None;
        }
        Some(Pos::new(row as u16, col as u16))
    }

    pub fn manhattan(self, other: Pos) -> u32 {
        (self.row as i32 - other.row as i32).unsigned_abs()
            + (self.col as i32 - other.col as i32).unsigned_abs()
    }
}

impl std::str::FromStr for Pos {
    type Err = String;

    /// Parses `row,col`.
    fn from_str(s: &str) -> Result<Pos, String> {
        let (r, c) = s
            .split_once(',')
            .ok_or_else(|| format!("bad position {s:?}"))?;
        match (r.trim().parse(), c.trim().parse()) {
            (Ok(row), Ok(col)) => Ok(Pos::new(row, col)),
            _ => Err(format!("bad position {s:?}")),
        }
    }
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{}", self.row, self.col)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Direction {
    North,
    South,
    East,
    West,
}

impl Direction {
    pub const ALL: [Direction; 4] = [
        Direction::North,
        Direction::South,
        Direction::East,
        Direction::West,
    ];

    /// (row delta, column delta).
    pub fn delta(self) -> (i32, i32) {
        match self {
            Direction::North => (-1, 0),
            Direction::South => (1, 0),
            Direction::East => (0, 1),
            Direction::West => (0, -1),
        }
    }

    pub fn index(self) -> usize {
        match self {
            Direction::North => 0,
            Direction::South => 1,
            Direction::East => 2,
            Direction::West => 3,
        }
    }

    pub fn letter(self) -> char {
        match self {
            Direction::North => 'N',
            Direction::South => 'S',
            Direction::East => 'E',
            Direction::West => 'W',
        }
    }

    pub fn from_letter(c: char) -> Option<Direction> {
        match c {
            'N' => Some(Direction::North),
            'S' => Some(Direction::South),
            'E' => Some(Direction::East),
            'W' => Some(Direction::West),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Tile {
    Floor,
    Counter,
    OnionDispenser,
    DishDispenser,
    Pot,
    Serving,
}

impl Tile {
    fn from_char(c: char) -> Option<Tile> {
        Some(match c {
            'X' => Tile::Counter,
            'O' => Tile::OnionDispenser,
            'D' => Tile::DishDispenser,
            'P' => Tile::Pot,
            'S' => Tile::Serving,
            ' ' | '1' | '2' => Tile::Floor,
            _ => return None,
        })
    }

    pub fn to_char(self) -> char {
        match self {
            Tile::Floor => ' ',
            Tile::Counter => 'X',
            Tile::OnionDispenser => 'O',
            Tile::DishDispenser => 'D',
            Tile::Pot => 'P',
            Tile::Serving => 'S',
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Tile::Floor => "floor",
            Tile::Counter => "counter",
            Tile::OnionDispenser => "onion_dispenser",
            Tile::DishDispenser => "dish_dispenser",
            Tile::Pot => "pot",
            Tile::Serving => "serving",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LayoutError {
    #[error("layout is empty")]
    Empty,
    #[error("row {row} has width {found}, expected {expected}")]
    NonRectangular {
        row: usize,
        expected: usize,
        found: usize,
    },
    #[error("unknown tile {ch:?} at row {row}, col {col}")]
    UnknownTile { ch: char, row: usize, col: usize },
    #[error("layout has no {0} tile")]
    MissingFeature(&'static str),
    #[error("floor cell on the boundary at {0}")]
    UnenclosedBoundary(Pos),
    #[error("expected exactly one '1' and one '2' spawn, found {0} spawn markers")]
    SpawnCountNot2(usize),
    #[error("spawn points are not connected through floor cells")]
    SpawnsNotConnected,
}

/// Static kitchen geometry.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Layout {
    name: String,
    width: u16,
    height: u16,
    tiles: Vec<Tile>,
    spawns: [Pos; 2],
    pots: Vec<Pos>,
    counters: Vec<Pos>,
    onion_dispensers: Vec<Pos>,
    dish_dispensers: Vec<Pos>,
    servings: Vec<Pos>,
}

impl Layout {
    /// Parse an ASCII kitchen. Trailing blank lines are ignored; every other
    /// line must have the same width.
    pub fn parse(name: &str, text: &str) -> Result<Layout, LayoutError> {
        let mut lines: Vec<&str> = text.lines().collect();
        while lines.last().is_some_and(|l| l.trim().is_empty()) {
            lines.pop();
        }
        if lines.is_empty() {
            return Err(LayoutError::Empty);
        }
        let width = lines[0].chars().count();
        if width == 0 {
            return Err(LayoutError::Empty);
        }
        let height = lines.len();
        let mut tiles = Vec::with_capacity(width * height);
        let mut spawn1 = Vec::new();
        let mut spawn2 = Vec::new();
        for (row, line) in lines.iter().enumerate() {
            let found = line.chars().count();
            if found != width {
                return Err(LayoutError::NonRectangular {
                    row,
                    expected: width,
                    found,
                });
            }
            for (col, ch) in line.chars().enumerate() {
                let tile = Tile::from_char(ch).ok_or(LayoutError::UnknownTile { ch, row, col })?;
                let pos = Pos::new(row as u16, col as u16);
                match ch {
                    '1' => spawn1.push(pos),
                    '2' => spawn2.push(pos),
                    _ => {}
                }
                tiles.push(tile);
            }
        }

        let mut layout = Layout {
            name: name.to_string(),
            width: width as u16,
            height: height as u16,
            tiles,
            spawns: [Pos::new(0, 0); 2],
            pots: Vec::new(),
            counters: Vec::new(),
            onion_dispensers: Vec::new(),
            dish_dispensers: Vec::new(),
            servings: Vec::new(),
        };
        for i in 0..layout.tiles.len() {
            let pos = layout.pos_of(i);
            match layout.tiles[i] {
                Tile::Pot => layout.pots.push(pos),
                Tile::Counter => layout.counters.push(pos),
                Tile::OnionDispenser => layout.onion_dispensers.push(pos),
                Tile::DishDispenser => layout.dish_dispensers.push(pos),
                Tile::Serving => layout.servings.push(pos),
                Tile::Floor => {}
            }
        }

        for (kind, list) in [
            (Tile::OnionDispenser, &layout.onion_dispensers),
            (Tile::DishDispenser, &layout.dish_dispensers),
            (Tile::Pot, &layout.pots),
            (Tile::Serving, &layout.servings),
        ] {
            if list.is_empty() {
                return Err(LayoutError::MissingFeature(kind.name()));
            }
        }
        for pos in layout.cells() {
            let on_border = pos.row == 0
                || pos.col == 0
                || pos.row + 1 == layout.height
                || pos.col + 1 == layout.width;
            if on_border && layout.tile(pos) == Tile::Floor {
                return Err(LayoutError::UnenclosedBoundary(pos));
            }
        }
        if spawn1.len() != 1 || spawn2.len() != 1 {
            return Err(LayoutError::SpawnCountNot2(spawn1.len() + spawn2.len()));
        }
        layout.spawns = [spawn1[0], spawn2[0]];
        if !layout.floor_connected(layout.spawns[0], layout.spawns[1]) {
            return Err(LayoutError::SpawnsNotConnected);
        }
        Ok(layout)
    }

    fn floor_connected(&self, from: Pos, to: Pos) -> bool {
        let mut seen = vec![false; self.tiles.len()];
        let mut queue = VecDeque::from([from]);
        seen[self.index(from)] = true;
        while let Some(p) = queue.pop_front() {
            if p == to {
                return true;
            }
            for dir in Direction::ALL {
                if let Some(n) = self.neighbor(p, dir) {
                    if self.is_floor(n) && !seen[self.index(n)] {
                        seen[self.index(n)] = true;
                        queue.push_back(n);
                    }
                }
            }
        }
        false
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn width(&self) -> u16 {
        self.width
    }

    pub fn height(&self) -> u16 {
        self.height
    }

    pub fn spawn_points(&self) -> [Pos; 2] {
        self.spawns
    }

    pub fn in_bounds(&self, pos: Pos) -> bool {
        pos.row < self.height && pos.col < self.width
    }

    /// Row-major index of `pos`. Panics when out of bounds.
    pub fn index(&self, pos: Pos) -> usize {
        debug_assert!(self.in_bounds(pos));
        pos.row as usize * self.width as usize + pos.col as usize
    }

    pub fn pos_of(&self, index: usize) -> Pos {
        Pos::new(
            (index / self.width as usize) as u16,
            (index % self.width as usize) as u16,
        )
    }

    pub fn cell_count(&self) -> usize {
        self.tiles.len()
    }

    pub fn tile(&self, pos: Pos) -> Tile {
        self.tiles[self.index(pos)]
    }

    /// Tile at `pos`, treating out-of-bounds as absent.
    pub fn tile_at(&self, pos: Pos) -> Option<Tile> {
        self.in_bounds(pos).then(|| self.tile(pos))
    }

    pub fn is_floor(&self, pos: Pos) -> bool {
        self.tile_at(pos) == Some(Tile::Floor)
    }

    pub fn neighbor(&self, pos: Pos, dir: Direction) -> Option<Pos> {
        pos.step(dir).filter(|p| self.in_bounds(*p))
    }

    /// All cells in row-major order.
    pub fn cells(&self) -> impl Iterator<Item = Pos> + '_ {
        (0..self.tiles.len()).map(|i| self.pos_of(i))
    }

    pub fn floor_cells(&self) -> impl Iterator<Item = Pos> + '_ {
        self.cells().filter(|p| self.is_floor(*p))
    }

    pub fn pots(&self) -> &[Pos] {
        &self.pots
    }

    pub fn counters(&self) -> &[Pos] {
        &self.counters
    }

    pub fn onion_dispensers(&self) -> &[Pos] {
        &self.onion_dispensers
    }

    pub fn dish_dispensers(&self) -> &[Pos] {
        &self.dish_dispensers
    }

    pub fn servings(&self) -> &[Pos] {
        &self.servings
    }

    /// Render back to the ASCII grid form accepted by [`Layout::parse`].
    pub fn to_text(&self) -> String {
        let mut out = String::with_capacity(self.tiles.len() + self.height as usize);
        for row in 0..self.height {
            for col in 0..self.width {
                let pos = Pos::new(row, col);
                let ch = if pos == self.spawns[0] {
                    '1'
                } else if pos == self.spawns[1] {
                    '2'
                } else {
                    self.tile(pos).to_char()
                };
                out.push(ch);
            }
            out.push('\n');
        }
        out
    }
}
