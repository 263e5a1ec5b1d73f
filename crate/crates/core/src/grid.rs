//! Pitch partition into an `N x M` grid of cells.
//!
//! Cells are half-open: a point lying exactly on an interior frontier belongs
//! to the higher-index cell, and points off the pitch are clamped into the
//! border cells, so [`cell_index`] is total.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{PitchSpec, Position};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub n_cols: usize,
    pub n_rows: usize,
    pub pitch: PitchSpec,
}

impl GridSpec {
    pub fn new(n_cols: usize, n_rows: usize, pitch: PitchSpec) -> Result<Self> {
        if n_cols == 0 || n_rows == 0 {
            return Err(Error::InvalidInput(format!(
                "grid must be at least 1x1, got {n_cols}x{n_rows}"
            )));
        }
        Ok(Self { n_cols, n_rows, pitch })
    }

    pub fn cell_width(&self) -> f64 {
        self.pitch.length_m / self.n_cols as f64
    }

    pub fn cell_height(&self) -> f64 {
        self.pitch.width_m / self.n_rows as f64
    }

    pub fn cells(&self) -> impl Iterator<Item = CellId> + '_ {
        (0..self.n_cols).flat_map(move |col| (0..self.n_rows).map(move |row| CellId { col, row }))
    }

    pub fn cell_center(&self, c: CellId) -> Position {
        Position::new(
            -self.pitch.half_length() + (c.col as f64 + 0.5) * self.cell_width(),
            -self.pitch.half_width() + (c.row as f64 + 0.5) * self.cell_height(),
        )
    }

    fn col_of(&self, x: f64) -> usize {
        let k = ((x + self.pitch.half_length()) / self.cell_width()).floor();
        clamp_index(k, self.n_cols)
    }

    fn row_of(&self, y: f64) -> usize {
        let k = ((y + self.pitch.half_width()) / self.cell_height()).floor();
        clamp_index(k, self.n_rows)
    }

    /// x coordinate of the frontier between column `k - 1` and column `k`.
    fn x_frontier(&self, k: usize) -> f64 {
        -self.pitch.half_length() + k as f64 * self.cell_width()
    }

    fn y_frontier(&self, k: usize) -> f64 {
        -self.pitch.half_width() + k as f64 * self.cell_height()
    }
}

fn clamp_index(k: f64, n: usize) -> usize {
    if k.is_nan() || k < 0.0 {
        0
    } else if k >= (n - 1) as f64 {
        n - 1
    } else {
        k as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct CellId {
    pub col: usize,
    pub row: usize,
}

impl CellId {
    pub const fn new(col: usize, row: usize) -> Self {
        Self { col, row }
    }

    pub fn is_neighbor(&self, other: &CellId) -> bool {
        self.col.abs_diff(other.col) + self.row.abs_diff(other.row) == 1
    }

    pub fn node_id(&self) -> String {
        format!("c{}_{}", self.col, self.row)
    }
}

impl fmt::Display for CellId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.col, self.row)
    }
}

pub fn cell_index(p: Position, g: &GridSpec) -> CellId {
    CellId {
        col: g.col_of(p.x),
        row: g.row_of(p.y),
    }
}

/// How ball movement between two consecutive frames is turned into transitions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CrossingMode {
    /// Every frontier crossed by the straight segment, in order.
    #[default]
    Traversal,
    /// A single start-cell to end-cell transition when the two differ.
    Endpoints,
}

impl CrossingMode {
    pub fn as_str(self) -> &'static str {
        match self {
            CrossingMode::Traversal => "traversal",
            CrossingMode::Endpoints => "endpoints",
        }
    }
}

impl FromStr for CrossingMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "traversal" => Ok(CrossingMode::Traversal),
            "endpoints" => Ok(CrossingMode::Endpoints),
            other => Err(Error::Config(format!("unknown crossing mode '{other}'"))),
        }
    }
}

/// Ordered frontier crossings along the straight segment `p0 -> p1`.
///
/// Each entry is a move between 4-neighbour cells; consecutive entries chain
/// (`to` of one is `from` of the next), the first `from` is the cell of `p0`
/// and the last `to` the cell of `p1`. When the segment passes exactly
/// through a grid corner the x-frontier is crossed first.
pub fn segment_crossings(p0: Position, p1: Position, g: &GridSpec) -> Vec<(CellId, CellId)> {
    let start = cell_index(p0, g);
    let end = cell_index(p1, g);
    if start == end {
        return Vec::new();
    }
    let dx = p1.x - p0.x;
    let dy = p1.y - p0.y;
    let mut col_steps = start.col.abs_diff(end.col);
    let mut row_steps = start.row.abs_diff(end.row);
    let mut out = Vec::with_capacity(col_steps + row_steps);
    let mut cur = start;

    // Parameter along the segment at which the next frontier is reached.
    let next_tx = |c: &CellId| {
        let xf = if end.col > c.col {
            g.x_frontier(c.col + 1)
        } else {
            g.x_frontier(c.col)
        };
        (xf - p0.x) / dx
    };
    let next_ty = |c: &CellId| {
        let yf = if end.row > c.row {
            g.y_frontier(c.row + 1)
        } else {
            g.y_frontier(c.row)
        };
        (yf - p0.y) / dy
    };

    while col_steps + row_steps > 0 {
        let step_x = if col_steps == 0 {
            false
        } else if row_steps == 0 {
            true
        } else {
            next_tx(&cur) <= next_ty(&cur)
        };
        let mut next = cur;
        if step_x {
            next.col = if end.col > cur.col { cur.col + 1 } else { cur.col - 1 };
            col_steps -= 1;
        } else {
            next.row = if end.row > cur.row { cur.row + 1 } else { cur.row - 1 };
            row_steps -= 1;
        }
        out.push((cur, next));
        cur = next;
    }
    out
}

/// Transitions for one frame-to-frame ball movement under `mode`.
pub fn transitions(p0: Position, p1: Position, g: &GridSpec, mode: CrossingMode) -> Vec<(CellId, CellId)> {
    match mode {
        CrossingMode::Traversal => segment_crossings(p0, p1, g),
        CrossingMode::Endpoints => {
            let (a, b) = (cell_index(p0, g), cell_index(p1, g));
            if a == b {
                Vec::new()
            } else {
                vec![(a, b)]
            }
        }
    }
}
