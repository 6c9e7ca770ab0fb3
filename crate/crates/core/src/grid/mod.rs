//! Static spatial description of a building floor: the control-volume
//! lattice, its classification, and the oriented coefficient fields the
//! finite-difference engine consumes.

mod fields;
mod layout;

pub use fields::{MaterialParams, OrientedFields};
pub use layout::{Device, DeviceLayout, DeviceType, Zone, ZoneMap};

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Result, SimError};
use crate::field::Direction;

/// Material class of one lattice cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CellClass {
    ExteriorAir,
    InteriorAir,
    InteriorWall,
    ExteriorWall,
}

impl CellClass {
    /// Integer code used in the JSON floorplan matrix.
    pub const fn code(self) -> u8 {
        match self {
            CellClass::ExteriorAir => 0,
            CellClass::InteriorAir => 1,
            CellClass::InteriorWall => 2,
            CellClass::ExteriorWall => 3,
        }
    }

    pub fn from_code(code: u8) -> Result<Self> {
        Ok(match code {
            0 => CellClass::ExteriorAir,
            1 => CellClass::InteriorAir,
            2 => CellClass::InteriorWall,
            3 => CellClass::ExteriorWall,
            other => {
                return Err(SimError::Config(format!("unknown cell code {other}")));
            }
        })
    }

    pub const fn is_exterior(self) -> bool {
        matches!(self, CellClass::ExteriorAir)
    }

    pub const fn is_wall(self) -> bool {
        matches!(self, CellClass::InteriorWall | CellClass::ExteriorWall)
    }
}

/// One floor's control-volume lattice.
#[derive(Debug, Clone, PartialEq)]
pub struct FloorplanGrid {
    width: usize,
    height: usize,
    cells: Vec<CellClass>,
    cv_size: f64,
    floor_height: f64,
}

impl FloorplanGrid {
    /// Builds a grid and checks its invariants: exterior border, positive
    /// dimensions, and no isolated interior-air cells.
    pub fn new(
        width: usize,
        height: usize,
        cells: Vec<CellClass>,
        cv_size: f64,
        floor_height: f64,
    ) -> Result<Self> {
        let grid = Self::new_unchecked(width, height, cells, cv_size, floor_height)?;
        grid.validate()?;
        Ok(grid)
    }

    /// Shape-checked construction without the topological invariants; used
    /// by the ingest pipeline on intermediate rasters.
    pub fn new_unchecked(
        width: usize,
        height: usize,
        cells: Vec<CellClass>,
        cv_size: f64,
        floor_height: f64,
    ) -> Result<Self> {
        if cells.len() != width * height {
            return Err(SimError::Shape(format!(
                "{} cells for a {width}x{height} grid",
                cells.len()
            )));
        }
        if !(cv_size > 0.0 && cv_size.is_finite()) {
            return Err(SimError::Config(format!("cv_size must be > 0, got {cv_size}")));
        }
        if !(floor_height > 0.0 && floor_height.is_finite()) {
            return Err(SimError::Config(format!(
                "floor_height must be > 0, got {floor_height}"
            )));
        }
        Ok(Self {
            width,
            height,
            cells,
            cv_size,
            floor_height,
        })
    }

    pub fn from_codes(rows: &[Vec<u8>], cv_size: f64, floor_height: f64) -> Result<Self> {
        let height = rows.len();
        let width = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != width) {
            return Err(SimError::Shape("ragged floorplan rows".into()));
        }
        let cells = rows
            .iter()
            .flatten()
            .map(|&c| CellClass::from_code(c))
            .collect::<Result<Vec<_>>>()?;
        Self::new(width, height, cells, cv_size, floor_height)
    }

    pub fn to_codes(&self) -> Vec<Vec<u8>> {
        self.cells
            .chunks(self.width)
            .map(|r| r.iter().map(|c| c.code()).collect())
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        for y in 0..self.height {
            for x in 0..self.width {
                let on_border = x == 0 || y == 0 || x + 1 == self.width || y + 1 == self.height;
                let class = self.get(x, y);
                if on_border && !class.is_exterior() {
                    return Err(SimError::Config(format!(
                        "border cell ({x}, {y}) must be exterior air"
                    )));
                }
                if class == CellClass::InteriorAir
                    && !Direction::ALL.iter().any(|&d| {
                        self.neighbor(x, y, d)
                            .is_some_and(|(nx, ny)| !self.get(nx, ny).is_exterior())
                    })
                {
                    return Err(SimError::Config(format!(
                        "interior air cell ({x}, {y}) has no non-exterior neighbor"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn cv_size(&self) -> f64 {
        self.cv_size
    }

    pub fn floor_height(&self) -> f64 {
        self.floor_height
    }

    pub fn cells(&self) -> &[CellClass] {
        &self.cells
    }

    #[inline]
    pub fn index(&self, x: usize, y: usize) -> usize {
        y * self.width + x
    }

    #[inline]
    pub fn coords(&self, index: usize) -> (usize, usize) {
        (index % self.width, index / self.width)
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> CellClass {
        self.cells[y * self.width + x]
    }

    pub fn set(&mut self, x: usize, y: usize, class: CellClass) {
        self.cells[y * self.width + x] = class;
    }

    pub fn neighbor(&self, x: usize, y: usize, d: Direction) -> Option<(usize, usize)> {
        let (dx, dy) = d.offset();
        let nx = x.checked_add_signed(dx)?;
        let ny = y.checked_add_signed(dy)?;
        (nx < self.width && ny < self.height).then_some((nx, ny))
    }

    /// Reflects the grid about its vertical axis.
    pub fn mirror_x(&self) -> FloorplanGrid {
        let mut cells = self.cells.clone();
        for row in cells.chunks_mut(self.width) {
            row.reverse();
        }
        Self {
            cells,
            ..self.clone()
        }
    }

    pub fn count(&self, class: CellClass) -> usize {
        self.cells.iter().filter(|&&c| c == class).count()
    }

    /// Labels 4-connected components of cells satisfying `member`.
    /// Returns per-cell labels (`usize::MAX` for non-members) and the count.
    pub fn components<F>(&self, member: F) -> (Vec<usize>, usize)
    where
        F: Fn(CellClass) -> bool,
    {
        let mut labels = vec![usize::MAX; self.cells.len()];
        let mut count = 0;
        let mut queue = VecDeque::new();
        for start in 0..self.cells.len() {
            if labels[start] != usize::MAX || !member(self.cells[start]) {
                continue;
            }
            labels[start] = count;
            queue.push_back(start);
            while let Some(i) = queue.pop_front() {
                let (x, y) = self.coords(i);
                for d in Direction::ALL {
                    if let Some((nx, ny)) = self.neighbor(x, y, d) {
                        let j = self.index(nx, ny);
                        if labels[j] == usize::MAX && member(self.cells[j]) {
                            labels[j] = count;
                            queue.push_back(j);
                        }
                    }
                }
            }
            count += 1;
        }
        (labels, count)
    }
}

/// Set of lattice faces that touch exterior air.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct Exposure(u8);

impl Exposure {
    pub fn with(self, d: Direction) -> Self {
        Exposure(self.0 | (1 << d.index()))
    }

    pub fn contains(self, d: Direction) -> bool {
        self.0 & (1 << d.index()) != 0
    }

    pub fn count(self) -> u32 {
        self.0.count_ones()
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    /// Exposed on the left or right face: the x extent of the CV is halved.
    pub fn halves_x(self) -> bool {
        self.contains(Direction::Left) || self.contains(Direction::Right)
    }

    /// Exposed on the top or bottom face: the y extent of the CV is halved.
    pub fn halves_y(self) -> bool {
        self.contains(Direction::Up) || self.contains(Direction::Down)
    }

    pub fn directions(self) -> impl Iterator<Item = Direction> {
        Direction::ALL.into_iter().filter(move |&d| self.contains(d))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Corner {
    TopLeft,
    TopRight,
    BottomLeft,
    BottomRight,
}

/// Control-volume label used by the solver.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CvClass {
    /// Outside air; held at the outside temperature, never solved.
    Exterior,
    /// All four faces touch non-exterior cells.
    Interior,
    /// Exactly one exterior face.
    Edge(Direction),
    /// Two exterior faces on perpendicular sides.
    Corner(Corner),
    /// Any other exposure (opposite sides, three or four faces), found on
    /// one-cell-wide slivers.
    Exposed(Exposure),
}

impl CvClass {
    pub fn is_exterior(self) -> bool {
        matches!(self, CvClass::Exterior)
    }

    pub fn is_boundary(self) -> bool {
        matches!(
            self,
            CvClass::Edge(_) | CvClass::Corner(_) | CvClass::Exposed(_)
        )
    }

    pub fn exposure(self) -> Exposure {
        match self {
            CvClass::Exterior | CvClass::Interior => Exposure::default(),
            CvClass::Edge(d) => Exposure::default().with(d),
            CvClass::Corner(c) => {
                let (v, h) = match c {
                    Corner::TopLeft => (Direction::Up, Direction::Left),
                    Corner::TopRight => (Direction::Up, Direction::Right),
                    Corner::BottomLeft => (Direction::Down, Direction::Left),
                    Corner::BottomRight => (Direction::Down, Direction::Right),
                };
                Exposure::default().with(v).with(h)
            }
            CvClass::Exposed(e) => e,
        }
    }

    fn from_exposure(e: Exposure) -> CvClass {
        use Direction::*;
        if e.is_empty() {
            return CvClass::Interior;
        }
        if e.count() == 1 {
            let d = e.directions().next().expect("one direction");
            return CvClass::Edge(d);
        }
        if e.count() == 2 {
            let corner = match (e.contains(Up), e.contains(Down), e.contains(Left), e.contains(Right)) {
                (true, false, true, false) => Some(Corner::TopLeft),
                (true, false, false, true) => Some(Corner::TopRight),
                (false, true, true, false) => Some(Corner::BottomLeft),
                (false, true, false, true) => Some(Corner::BottomRight),
                _ => None,
            };
            if let Some(c) = corner {
                return CvClass::Corner(c);
            }
        }
        CvClass::Exposed(e)
    }
}

/// Per-cell control-volume labels for one floor.
#[derive(Debug, Clone, PartialEq)]
pub struct CvClassification {
    width: usize,
    height: usize,
    labels: Vec<CvClass>,
}

impl CvClassification {
    pub fn get(&self, x: usize, y: usize) -> CvClass {
        self.labels[y * self.width + x]
    }

    pub fn labels(&self) -> &[CvClass] {
        &self.labels
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn count_exterior(&self) -> usize {
        self.labels.iter().filter(|l| l.is_exterior()).count()
    }

    pub fn count_interior(&self) -> usize {
        self.labels
            .iter()
            .filter(|l| matches!(l, CvClass::Interior))
            .count()
    }

    pub fn count_boundary(&self) -> usize {
        self.labels.iter().filter(|l| l.is_boundary()).count()
    }
}

/// Labels every cell as exterior, interior, or boundary (edge/corner).
pub fn classify_cvs(grid: &FloorplanGrid) -> CvClassification {
    let mut labels = Vec::with_capacity(grid.len());
    for y in 0..grid.height() {
        for x in 0..grid.width() {
            if grid.get(x, y).is_exterior() {
                labels.push(CvClass::Exterior);
                continue;
            }
            let mut exposure = Exposure::default();
            for d in Direction::ALL {
                let outside = grid
                    .neighbor(x, y, d)
                    .map_or(true, |(nx, ny)| grid.get(nx, ny).is_exterior());
                if outside {
                    exposure = exposure.with(d);
                }
            }
            labels.push(CvClass::from_exposure(exposure));
        }
    }
    CvClassification {
        width: grid.width(),
        height: grid.height(),
        labels,
    }
}
