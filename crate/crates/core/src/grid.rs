//! The invisible navigation grid: two-letter cell codes, cell rectangles and
//! the reference-area arrival rule.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::Point2;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GridError {
    #[error("cell code `{0}` outside the grid")]
    CodeOutOfRange(String),
    #[error("cell ({row}, {col}) outside the grid")]
    CellOutOfRange { row: usize, col: usize },
    #[error("malformed cell code `{0}`")]
    MalformedCode(String),
    #[error("invalid grid: {0}")]
    InvalidSpec(String),
}

/// Grid layout over the canonical board.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub rows: usize,
    pub cols: usize,
    pub board_w: f64,
    pub board_h: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self { rows: 8, cols: 8, board_w: 500.0, board_h: 300.0 }
    }
}

impl GridSpec {
    pub fn validate(&self) -> Result<(), GridError> {
        if !(1..=26).contains(&self.rows) || !(1..=26).contains(&self.cols) {
            return Err(GridError::InvalidSpec(format!(
                "rows and cols must be in 1..=26, got {}x{}",
                self.rows, self.cols
            )));
        }
        if !(self.board_w > 0.0 && self.board_h > 0.0) {
            return Err(GridError::InvalidSpec("board size must be positive".into()));
        }
        Ok(())
    }

    pub fn cell_w(&self) -> f64 {
        self.board_w / self.cols as f64
    }

    pub fn cell_h(&self) -> f64 {
        self.board_h / self.rows as f64
    }

    fn col_edge(&self, k: usize) -> f64 {
        k as f64 * self.board_w / self.cols as f64
    }

    fn row_edge(&self, k: usize) -> f64 {
        k as f64 * self.board_h / self.rows as f64
    }

    pub fn cell(&self, row: usize, col: usize) -> Result<Cell, GridError> {
        if row >= self.rows || col >= self.cols {
            return Err(GridError::CellOutOfRange { row, col });
        }
        Ok(Cell {
            row,
            col,
            rect: Rect {
                x0: self.col_edge(col),
                y0: self.row_edge(row),
                x1: self.col_edge(col + 1),
                y1: self.row_edge(row + 1),
            },
        })
    }

    /// The cell containing `p`. Cells are half-open `[x0, x1) × [y0, y1)`
    /// except along the right and bottom board edges, which are closed.
    pub fn cell_at(&self, p: Point2) -> Option<Cell> {
        if !(p.x >= 0.0 && p.y >= 0.0 && p.x <= self.board_w && p.y <= self.board_h) {
            return None;
        }
        let col = band_index(p.x, self.cols, |k| self.col_edge(k));
        let row = band_index(p.y, self.rows, |k| self.row_edge(k));
        self.cell(row, col).ok()
    }

    pub fn cells(&self) -> impl Iterator<Item = Cell> + '_ {
        (0..self.rows).flat_map(move |r| (0..self.cols).map(move |c| self.cell(r, c).expect("in range")))
    }
}

fn band_index(v: f64, n: usize, edge: impl Fn(usize) -> f64) -> usize {
    let mut k = ((v / edge(1)).floor() as usize).min(n - 1);
    // Correct for rounding in the division against the exact edge values.
    while k > 0 && v < edge(k) {
        k -= 1;
    }
    while k + 1 < n && v >= edge(k + 1) {
        k += 1;
    }
    k
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
}

impl Rect {
    pub fn width(&self) -> f64 {
        self.x1 - self.x0
    }

    pub fn height(&self) -> f64 {
        self.y1 - self.y0
    }

    pub fn center(&self) -> Point2 {
        Point2::new((self.x0 + self.x1) / 2.0, (self.y0 + self.y1) / 2.0)
    }
}

/// A grid cell and its board rectangle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub row: usize,
    pub col: usize,
    pub rect: Rect,
}

impl Cell {
    pub fn center(&self) -> Point2 {
        self.rect.center()
    }

    /// Whether `y` lies in this cell's row band (edges included).
    pub fn row_band_contains(&self, y: f64) -> bool {
        y >= self.rect.y0 && y <= self.rect.y1
    }
}

/// Two-letter grid address: row letter then column letter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct CellCode {
    pub row_letter: char,
    pub col_letter: char,
}

impl CellCode {
    pub fn new(row_letter: char, col_letter: char) -> Result<Self, GridError> {
        let (r, c) = (row_letter.to_ascii_lowercase(), col_letter.to_ascii_lowercase());
        if !r.is_ascii_lowercase() || !c.is_ascii_lowercase() {
            return Err(GridError::MalformedCode(format!("{row_letter}{col_letter}")));
        }
        Ok(Self { row_letter: r, col_letter: c })
    }

    pub fn row(&self) -> usize {
        (self.row_letter as u8 - b'a') as usize
    }

    pub fn col(&self) -> usize {
        (self.col_letter as u8 - b'a') as usize
    }

    pub fn check(&self, spec: &GridSpec) -> Result<(), GridError> {
        if self.row() >= spec.rows || self.col() >= spec.cols {
            return Err(GridError::CodeOutOfRange(self.to_string()));
        }
        Ok(())
    }
}

impl fmt::Display for CellCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.row_letter, self.col_letter)
    }
}

impl FromStr for CellCode {
    type Err = GridError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim();
        let mut chars = t.chars();
        match (chars.next(), chars.next(), chars.next()) {
            (Some(r), Some(c), None) => CellCode::new(r, c),
            _ => Err(GridError::MalformedCode(t.to_string())),
        }
    }
}

impl TryFrom<String> for CellCode {
    type Error = GridError;

    fn try_from(value: String) -> Result<Self, Self::Error> {
        value.parse()
    }
}

impl From<CellCode> for String {
    fn from(code: CellCode) -> String {
        code.to_string()
    }
}

pub fn code_to_cell(code: CellCode, spec: &GridSpec) -> Result<Cell, GridError> {
    code.check(spec)?;
    spec.cell(code.row(), code.col())
}

pub fn cell_to_code(cell: &Cell, spec: &GridSpec) -> Result<CellCode, GridError> {
    if cell.row >= spec.rows || cell.col >= spec.cols {
        return Err(GridError::CellOutOfRange { row: cell.row, col: cell.col });
    }
    Ok(CellCode { row_letter: (b'a' + cell.row as u8) as char, col_letter: (b'a' + cell.col as u8) as char })
}

/// Central sub-rectangle of a cell, as fractions of the cell size.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReferenceArea {
    pub a_frac: f64,
    pub b_frac: f64,
}

impl Default for ReferenceArea {
    fn default() -> Self {
        Self { a_frac: 0.5, b_frac: 0.5 }
    }
}

impl ReferenceArea {
    pub fn validate(&self) -> Result<(), GridError> {
        let ok = |f: f64| f > 0.0 && f <= 1.0;
        if ok(self.a_frac) && ok(self.b_frac) {
            Ok(())
        } else {
            Err(GridError::InvalidSpec(format!(
                "reference fractions must be in (0, 1], got {} and {}",
                self.a_frac, self.b_frac
            )))
        }
    }

    /// `(a, b)` in board pixels for `cell`.
    pub fn size_in(&self, cell: &Cell) -> (f64, f64) {
        (self.a_frac * cell.rect.width(), self.b_frac * cell.rect.height())
    }
}

/// True once the tip is inside the cell's centered `a × b` rectangle:
/// `2|x - x0| <= a` and `2|y - y0| <= b`.
pub fn arrival_check(tip: Point2, cell: &Cell, reference: &ReferenceArea) -> bool {
    let c = cell.center();
    let (a, b) = reference.size_in(cell);
    2.0 * (tip.x - c.x).abs() <= a && 2.0 * (tip.y - c.y).abs() <= b
}
