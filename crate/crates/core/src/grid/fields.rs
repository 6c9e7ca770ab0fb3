use serde::{Deserialize, Serialize};

use super::{classify_cvs, CellClass, CvClassification, FloorplanGrid};
use crate::error::{Result, SimError};
use crate::field::{Direction, Field};

/// Thermal material parameters, bound to cells by their class.
///
/// Walls take the tunable exterior/interior-wall values; interior air uses
/// fixed air properties.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaterialParams {
    /// Exterior-face convection coefficient, W/m²/K.
    pub convection_coefficient: f64,
    pub exterior_cv_conductivity: f64,
    pub exterior_cv_density: f64,
    pub exterior_cv_heat_capacity: f64,
    pub interior_wall_cv_conductivity: f64,
    pub interior_wall_cv_density: f64,
    pub interior_wall_cv_heat_capacity: f64,
    pub air_conductivity: f64,
    pub air_density: f64,
    pub air_heat_capacity: f64,
    /// Probability that an air cell swaps with a zone neighbor each step.
    pub swap_prob: f64,
    /// Chebyshev radius of the swap neighborhood, in cells.
    pub swap_radius: f64,
}

impl MaterialParams {
    pub const AIR_CONDUCTIVITY: f64 = 0.026;
    pub const AIR_DENSITY: f64 = 1.2;
    pub const AIR_HEAT_CAPACITY: f64 = 1006.0;

    /// The calibrated values reported for the two-story reference building.
    pub fn reference_calibrated() -> Self {
        Self {
            convection_coefficient: 357.0,
            exterior_cv_conductivity: 0.83,
            exterior_cv_density: 2359.0,
            exterior_cv_heat_capacity: 2499.0,
            interior_wall_cv_conductivity: 5.0,
            interior_wall_cv_density: 1500.0,
            interior_wall_cv_heat_capacity: 1499.0,
            air_conductivity: Self::AIR_CONDUCTIVITY,
            air_density: Self::AIR_DENSITY,
            air_heat_capacity: Self::AIR_HEAT_CAPACITY,
            swap_prob: 0.003,
            swap_radius: 50.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let named = [
            ("convection_coefficient", self.convection_coefficient),
            ("exterior_cv_conductivity", self.exterior_cv_conductivity),
            ("exterior_cv_density", self.exterior_cv_density),
            ("exterior_cv_heat_capacity", self.exterior_cv_heat_capacity),
            ("interior_wall_cv_conductivity", self.interior_wall_cv_conductivity),
            ("interior_wall_cv_density", self.interior_wall_cv_density),
            ("interior_wall_cv_heat_capacity", self.interior_wall_cv_heat_capacity),
            ("air_conductivity", self.air_conductivity),
            ("air_density", self.air_density),
            ("air_heat_capacity", self.air_heat_capacity),
            ("swap_prob", self.swap_prob),
            ("swap_radius", self.swap_radius),
        ];
        for (name, value) in named {
            if !(value >= 0.0 && value.is_finite()) {
                return Err(SimError::Config(format!(
                    "material parameter {name} must be finite and >= 0, got {value}"
                )));
            }
        }
        if self.swap_prob > 1.0 {
            return Err(SimError::Config(format!(
                "swap_prob must be <= 1, got {}",
                self.swap_prob
            )));
        }
        Ok(())
    }

    /// (conductivity, density, heat capacity) for a cell class.
    pub fn properties(&self, class: CellClass) -> (f64, f64, f64) {
        match class {
            CellClass::ExteriorAir => (0.0, 0.0, 0.0),
            CellClass::InteriorAir => (self.air_conductivity, self.air_density, self.air_heat_capacity),
            CellClass::InteriorWall => (
                self.interior_wall_cv_conductivity,
                self.interior_wall_cv_density,
                self.interior_wall_cv_heat_capacity,
            ),
            CellClass::ExteriorWall => (
                self.exterior_cv_conductivity,
                self.exterior_cv_density,
                self.exterior_cv_heat_capacity,
            ),
        }
    }

    pub fn swap_radius_cells(&self) -> usize {
        self.swap_radius.round().max(0.0) as usize
    }
}

/// Oriented coefficient fields for one floor plus the per-face
/// conductances derived from them.
///
/// `conductivity[d]` and `convection[d]` are indexed by [`Direction::index`].
/// `extent_x` / `extent_y` are the CV sizes along x and y: the x extent is
/// halved for cells exposed on the left or right, the y extent for cells
/// exposed above or below.
#[derive(Debug, Clone)]
pub struct OrientedFields {
    pub conductivity: [Field; 4],
    pub convection: [Field; 4],
    pub extent_x: Field,
    pub extent_y: Field,
    pub heat_capacity: Field,
    pub density: Field,
    pub floor_height: f64,
    pub convection_coefficient: f64,
    exterior: Vec<bool>,
    face_conductance: [Vec<f64>; 4],
    exposed_area: Vec<f64>,
    thermal_mass: Vec<f64>,
}

fn harmonic(a: f64, b: f64) -> f64 {
    if a > 0.0 && b > 0.0 {
        2.0 * a * b / (a + b)
    } else {
        0.0
    }
}

impl OrientedFields {
    pub fn build(
        grid: &FloorplanGrid,
        classification: &CvClassification,
        params: &MaterialParams,
    ) -> Result<Self> {
        params.validate()?;
        if classification.width() != grid.width() || classification.height() != grid.height() {
            return Err(SimError::Shape("classification does not match grid".into()));
        }
        let (w, h) = (grid.width(), grid.height());
        let dx = grid.cv_size();
        let z = grid.floor_height();
        let hc = params.convection_coefficient;

        let mut conductivity: [Field; 4] = std::array::from_fn(|_| Field::new(w, h, 0.0));
        let mut convection: [Field; 4] = std::array::from_fn(|_| Field::new(w, h, 0.0));
        let mut extent_x = Field::new(w, h, dx);
        let mut extent_y = Field::new(w, h, dx);
        let mut heat_capacity = Field::new(w, h, 0.0);
        let mut density = Field::new(w, h, 0.0);
        let mut exterior = vec![false; w * h];
        let mut exposed_area = vec![0.0; w * h];

        for y in 0..h {
            for x in 0..w {
                let i = grid.index(x, y);
                let class = grid.get(x, y);
                if class.is_exterior() {
                    exterior[i] = true;
                    continue;
                }
                if x == 0 || y == 0 || x + 1 == w || y + 1 == h {
                    return Err(SimError::Config(format!(
                        "non-exterior cell ({x}, {y}) on the lattice border"
                    )));
                }
                let (k, rho, c) = params.properties(class);
                density.set(x, y, rho);
                heat_capacity.set(x, y, c);
                let exposure = classification.get(x, y).exposure();
                if exposure.halves_x() {
                    extent_x.set(x, y, dx / 2.0);
                }
                if exposure.halves_y() {
                    extent_y.set(x, y, dx / 2.0);
                }
                for d in Direction::ALL {
                    let neighbor_exterior = grid
                        .neighbor(x, y, d)
                        .map_or(true, |(nx, ny)| grid.get(nx, ny).is_exterior());
                    if neighbor_exterior {
                        convection[d.index()].set(x, y, hc);
                    } else {
                        conductivity[d.index()].set(x, y, k);
                    }
                }
            }
        }

        // One-sided coefficients k·A/L per cell and direction, then the
        // shared face conductance as the series (harmonic) combination of
        // the two sides so that fluxes across every face are antisymmetric.
        let mut one_sided: [Vec<f64>; 4] = std::array::from_fn(|_| vec![0.0; w * h]);
        for i in 0..w * h {
            if exterior[i] {
                continue;
            }
            let (ex, ey) = (extent_x.as_slice()[i], extent_y.as_slice()[i]);
            for d in Direction::ALL {
                let (area, length) = if d.is_horizontal() {
                    (ey * z, ex)
                } else {
                    (ex * z, ey)
                };
                one_sided[d.index()][i] = conductivity[d.index()].as_slice()[i] * area / length;
                if classification.labels()[i].exposure().contains(d) {
                    exposed_area[i] += area;
                }
            }
        }
        let mut face_conductance: [Vec<f64>; 4] = std::array::from_fn(|_| vec![0.0; w * h]);
        for y in 0..h {
            for x in 0..w {
                let i = grid.index(x, y);
                if exterior[i] {
                    continue;
                }
                for d in Direction::ALL {
                    if let Some((nx, ny)) = grid.neighbor(x, y, d) {
                        let j = grid.index(nx, ny);
                        face_conductance[d.index()][i] =
                            harmonic(one_sided[d.index()][i], one_sided[d.opposite().index()][j]);
                    }
                }
            }
        }

        let thermal_mass = (0..w * h)
            .map(|i| {
                heat_capacity.as_slice()[i]
                    * density.as_slice()[i]
                    * extent_x.as_slice()[i]
                    * extent_y.as_slice()[i]
                    * z
            })
            .collect();

        Ok(Self {
            conductivity,
            convection,
            extent_x,
            extent_y,
            heat_capacity,
            density,
            floor_height: z,
            convection_coefficient: hc,
            exterior,
            face_conductance,
            exposed_area,
            thermal_mass,
        })
    }

    /// Classifies the grid and builds its fields in one go.
    pub fn for_grid(grid: &FloorplanGrid, params: &MaterialParams) -> Result<Self> {
        Self::build(grid, &classify_cvs(grid), params)
    }

    pub fn width(&self) -> usize {
        self.extent_x.width()
    }

    pub fn height(&self) -> usize {
        self.extent_x.height()
    }

    pub fn is_exterior(&self, i: usize) -> bool {
        self.exterior[i]
    }

    pub fn exterior_mask(&self) -> &[bool] {
        &self.exterior
    }

    /// Conductance (W/K) of the face between cell `i` and its `d` neighbor.
    pub fn face_conductance(&self, d: Direction) -> &[f64] {
        &self.face_conductance[d.index()]
    }

    /// Area (m²) of the cell's faces that touch exterior air.
    pub fn exposed_area(&self) -> &[f64] {
        &self.exposed_area
    }

    /// Heat capacity of each CV, c·ρ·V in J/K.
    pub fn thermal_mass(&self) -> &[f64] {
        &self.thermal_mass
    }

    /// CV volume u·v·z in m³ (zero for exterior cells).
    pub fn volume(&self, i: usize) -> f64 {
        if self.exterior[i] {
            0.0
        } else {
            self.extent_x.as_slice()[i] * self.extent_y.as_slice()[i] * self.floor_height
        }
    }
}
