use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Result, SimError};

/// One of the four lattice directions.
///
/// `x` grows to the right and `y` grows downwards, so `Up` is row `y - 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Left,
    Up,
    Right,
    Down,
}

impl Direction {
    pub const ALL: [Direction; 4] = [
        Direction::Left,
        Direction::Up,
        Direction::Right,
        Direction::Down,
    ];

    pub const fn index(self) -> usize {
        self as usize
    }

    pub const fn offset(self) -> (isize, isize) {
        match self {
            Direction::Left => (-1, 0),
            Direction::Up => (0, -1),
            Direction::Right => (1, 0),
            Direction::Down => (0, 1),
        }
    }

    pub const fn opposite(self) -> Direction {
        match self {
            Direction::Left => Direction::Right,
            Direction::Up => Direction::Down,
            Direction::Right => Direction::Left,
            Direction::Down => Direction::Up,
        }
    }

    /// Direction after reflecting the lattice about its vertical axis.
    pub const fn mirrored_x(self) -> Direction {
        match self {
            Direction::Left => Direction::Right,
            Direction::Right => Direction::Left,
            d => d,
        }
    }

    /// Faces normal to the x axis (left/right).
    pub const fn is_horizontal(self) -> bool {
        matches!(self, Direction::Left | Direction::Right)
    }
}

/// Dense row-major 2D array of `f64`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Field {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl Field {
    pub fn new(width: usize, height: usize, fill: f64) -> Self {
        Self {
            width,
            height,
            data: vec![fill; width * height],
        }
    }

    pub fn from_vec(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != width * height {
            return Err(SimError::Shape(format!(
                "{} values for a {width}x{height} field",
                data.len()
            )));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let height = rows.len();
        let width = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != width) {
            return Err(SimError::Shape("ragged rows".into()));
        }
        Self::from_vec(width, height, rows.concat())
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn same_shape(&self, other: &Field) -> bool {
        self.width == other.width && self.height == other.height
    }

    #[inline]
    pub fn index(&self, x: usize, y: usize) -> usize {
        y * self.width + x
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, value: f64) {
        self.data[y * self.width + x] = value;
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks(self.width.max(1))
    }

    /// Neighbor coordinate in direction `d`, if inside the lattice.
    pub fn neighbor(&self, x: usize, y: usize, d: Direction) -> Option<(usize, usize)> {
        let (dx, dy) = d.offset();
        let nx = x.checked_add_signed(dx)?;
        let ny = y.checked_add_signed(dy)?;
        (nx < self.width && ny < self.height).then_some((nx, ny))
    }

    /// Array shift: content moves one cell towards `d`, vacated cells are 0.
    ///
    /// `shift(Left)[x, y] == self[x + 1, y]`, i.e. the result holds the value
    /// of the neighbor in the opposite direction.
    pub fn shift(&self, d: Direction) -> Field {
        let mut out = Field::new(self.width, self.height, 0.0);
        let source = d.opposite();
        for y in 0..self.height {
            for x in 0..self.width {
                if let Some((sx, sy)) = self.neighbor(x, y, source) {
                    out.data[y * self.width + x] = self.get(sx, sy);
                }
            }
        }
        out
    }

    /// Field whose value at a cell is this field's value at the `d`-neighbor.
    pub fn neighbor_values(&self, d: Direction) -> Field {
        self.shift(d.opposite())
    }

    /// Reflect about the vertical axis.
    pub fn mirror_x(&self) -> Field {
        let mut out = self.clone();
        for (dst, src) in out.data.chunks_mut(self.width).zip(self.data.chunks(self.width)) {
            for (d, s) in dst.iter_mut().zip(src.iter().rev()) {
                *d = *s;
            }
        }
        out
    }

    pub fn max_abs_diff(&self, other: &Field) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn sum(&self) -> f64 {
        self.data.iter().sum()
    }

    /// Writes the field as row-major CSV with 6 decimals.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for row in self.rows() {
            let line: Vec<String> = row.iter().map(|v| format!("{v:.6}")).collect();
            writeln!(out, "{}", line.join(","))?;
        }
        Ok(())
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| SimError::file(path, e))?;
        self.write_csv(std::io::BufWriter::new(file))
            .map_err(|e| SimError::file(path, e))
    }

    pub fn load_csv(path: &Path) -> Result<Field> {
        let text = std::fs::read_to_string(path).map_err(|e| SimError::file(path, e))?;
        let mut rows = Vec::new();
        for (n, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let row = line
                .split(',')
                .map(|v| v.trim().parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| {
                    SimError::Format(format!("{}:{}: {e}", path.display(), n + 1))
                })?;
            rows.push(row);
        }
        Field::from_rows(&rows)
    }
}
