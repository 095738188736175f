//! Grid geometry: rooms, directions, adjacency and arrow trajectories.

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};

/// A room on the grid, 1-based. `(1,1)` is the bottom-left start room.
///
/// Rooms order by `(y, x)`, the tie-break used for every sorted list in the
/// environment. Serialized as a two-element array `[x, y]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(from = "(u32, u32)", into = "(u32, u32)")]
pub struct Cell {
    pub x: u32,
    pub y: u32,
}

impl Cell {
    pub const START: Cell = Cell { x: 1, y: 1 };

    pub const fn new(x: u32, y: u32) -> Self {
        Self { x, y }
    }

    pub fn in_grid(self, n: u32) -> bool {
        (1..=n).contains(&self.x) && (1..=n).contains(&self.y)
    }

    pub fn is_adjacent(self, other: Cell) -> bool {
        self.x.abs_diff(other.x) + self.y.abs_diff(other.y) == 1
    }

    /// 4-neighbourhood clipped to an `n`×`n` grid, in (y, x) order.
    pub fn neighbors(self, n: u32) -> Vec<Cell> {
        let mut out = Vec::with_capacity(4);
        if self.y > 1 {
            out.push(Cell::new(self.x, self.y - 1));
        }
        if self.x > 1 {
            out.push(Cell::new(self.x - 1, self.y));
        }
        if self.x < n {
            out.push(Cell::new(self.x + 1, self.y));
        }
        if self.y < n {
            out.push(Cell::new(self.x, self.y + 1));
        }
        out
    }

    pub fn step(self, direction: Direction, n: u32) -> Option<Cell> {
        let (dx, dy) = direction.delta();
        let x = self.x.checked_add_signed(dx)?;
        let y = self.y.checked_add_signed(dy)?;
        let next = Cell::new(x, y);
        next.in_grid(n).then_some(next)
    }

    /// The start room and its two neighbours; never holds a hazard.
    pub fn is_start_zone(self) -> bool {
        self == Cell::START || self.is_adjacent(Cell::START)
    }
}

/// Every room of an `n`×`n` grid in (y, x) order.
pub fn all_cells(n: u32) -> impl Iterator<Item = Cell> {
    (1..=n).flat_map(move |y| (1..=n).map(move |x| Cell::new(x, y)))
}

impl Ord for Cell {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.y, self.x).cmp(&(other.y, other.x))
    }
}

impl PartialOrd for Cell {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl From<(u32, u32)> for Cell {
    fn from((x, y): (u32, u32)) -> Self {
        Cell::new(x, y)
    }
}

impl From<Cell> for (u32, u32) {
    fn from(c: Cell) -> Self {
        (c.x, c.y)
    }
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.x, self.y)
    }
}

/// Axis direction for shooting. `Up` increases `y`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Up,
    Down,
    Left,
    Right,
}

impl Direction {
    pub const ALL: [Direction; 4] = [Direction::Up, Direction::Down, Direction::Left, Direction::Right];

    pub fn delta(self) -> (i32, i32) {
        match self {
            Direction::Up => (0, 1),
            Direction::Down => (0, -1),
            Direction::Left => (-1, 0),
            Direction::Right => (1, 0),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Direction::Up => "up",
            Direction::Down => "down",
            Direction::Left => "left",
            Direction::Right => "right",
        }
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Rooms an arrow passes through, from the shooter outward to the wall,
/// excluding the shooter's own room.
pub fn shoot_trajectory(agent: Cell, direction: Direction, n: u32) -> Vec<Cell> {
    std::iter::successors(agent.step(direction, n), |c| c.step(direction, n)).collect()
}
