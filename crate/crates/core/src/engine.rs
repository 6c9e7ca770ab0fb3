//! Finite-difference thermal engine.
//!
//! Each timestep solves the implicit energy balance of every control
//! volume by Jacobi sweeps: a cell's new temperature is the conductance-
//! weighted combination of its neighbors' current iterate, the outside
//! temperature across exposed faces, its own previous-step temperature
//! (weighted by thermal mass over the timestep) and any injected energy.
//! Sweeps repeat until the largest per-cell change drops below epsilon.

use std::collections::BTreeMap;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Result, SimError};
use crate::field::{Direction, Field};
use crate::grid::{CellClass, DeviceLayout, FloorplanGrid, OrientedFields, ZoneMap};
use crate::parallel;

/// Temperature state of one floor.
#[derive(Debug, Clone)]
pub struct ThermalState {
    /// Current temperature of every cell, °C.
    pub temps: Field,
    /// Temperature at the start of the last committed step.
    pub previous: Field,
    /// Simulated seconds since the state was created.
    pub elapsed: f64,
    rng: ChaCha8Rng,
}

impl ThermalState {
    pub fn new(temps: Field, seed: u64) -> Self {
        Self {
            previous: temps.clone(),
            temps,
            elapsed: 0.0,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn uniform(width: usize, height: usize, temp: f64, seed: u64) -> Self {
        Self::new(Field::new(width, height, temp), seed)
    }

    pub fn rng_mut(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }

    /// Sets every exterior cell to the outside temperature.
    pub fn set_exterior(&mut self, fields: &OrientedFields, outside_temp: f64) {
        for (t, &ext) in self.temps.as_mut_slice().iter_mut().zip(fields.exterior_mask()) {
            if ext {
                *t = outside_temp;
            }
        }
    }
}

/// Per-step boundary conditions.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryConditions {
    /// Outside air temperature T∞, °C.
    pub outside_temp: f64,
    /// Replaces the material convection coefficient for this step.
    pub convection_override: Option<f64>,
    /// Timestep in seconds.
    pub timestep: f64,
    /// Cells held at a fixed temperature: `(flat index, °C)`.
    pub fixed: Vec<(usize, f64)>,
}

impl BoundaryConditions {
    pub const DEFAULT_TIMESTEP: f64 = 300.0;

    pub fn new(outside_temp: f64, timestep: f64) -> Self {
        Self {
            outside_temp,
            convection_override: None,
            timestep,
            fixed: Vec::new(),
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.timestep > 0.0 && self.timestep.is_finite()) {
            return Err(SimError::Config(format!(
                "timestep must be > 0, got {}",
                self.timestep
            )));
        }
        if !self.outside_temp.is_finite() {
            return Err(SimError::Config("outside temperature is not finite".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverSettings {
    /// Convergence threshold on the max per-sweep change, °C.
    pub epsilon: f64,
    pub max_sweeps: usize,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self {
            epsilon: 0.01,
            max_sweeps: 10_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepStats {
    pub sweeps: usize,
    /// Max change of the final sweep, °C.
    pub max_delta: f64,
}

/// Per-step constants of the update: everything but the neighbor terms.
struct Assembly {
    /// Terms of the residual form; a balanced cell updates by exactly zero.
    source: Vec<f64>,
    surface: Vec<f64>,
    capacity: Vec<f64>,
    previous: Vec<f64>,
    t_inf: f64,
    diag: Vec<f64>,
    /// Value of held cells.
    rhs: Vec<f64>,
    /// Cells whose value is `rhs` verbatim (exterior and fixed cells).
    held: Vec<bool>,
}

fn assemble(
    prev: &Field,
    fields: &OrientedFields,
    bc: &BoundaryConditions,
    energy: &Field,
) -> Result<Assembly> {
    bc.validate()?;
    if !prev.same_shape(&fields.extent_x) || !energy.same_shape(prev) {
        return Err(SimError::Shape(format!(
            "state {}x{}, fields {}x{}, energy {}x{}",
            prev.width(),
            prev.height(),
            fields.width(),
            fields.height(),
            energy.width(),
            energy.height()
        )));
    }
    let n = prev.len();
    let dt = bc.timestep;
    let h = bc.convection_override.unwrap_or(fields.convection_coefficient);
    let t_inf = bc.outside_temp;
    let mut rhs = vec![0.0; n];
    let mut diag = vec![0.0; n];
    let mut held = vec![false; n];
    let mut source = vec![0.0; n];
    let mut surface_g = vec![0.0; n];
    let mut capacity_g = vec![0.0; n];
    let mass = fields.thermal_mass();
    let area = fields.exposed_area();
    let faces: [&[f64]; 4] = std::array::from_fn(|k| fields.face_conductance(Direction::ALL[k]));
    for i in 0..n {
        if fields.is_exterior(i) {
            rhs[i] = t_inf;
            held[i] = true;
            continue;
        }
        let capacity = mass[i] / dt;
        let surface = h * area[i];
        let conductance: f64 = faces.iter().map(|f| f[i]).sum();
        source[i] = energy.as_slice()[i] / dt;
        surface_g[i] = surface;
        capacity_g[i] = capacity;
        diag[i] = conductance + surface + capacity;
    }
    for &(i, value) in &bc.fixed {
        if i >= n {
            return Err(SimError::Shape(format!("fixed cell {i} out of range")));
        }
        rhs[i] = value;
        held[i] = true;
    }
    Ok(Assembly {
        source,
        surface: surface_g,
        capacity: capacity_g,
        previous: prev.as_slice().to_vec(),
        t_inf,
        diag,
        rhs,
        held,
    })
}

/// One Jacobi sweep from `current` into `out`; returns the max change over
/// solved cells, or `+inf` if any value is not finite.
fn sweep_into(current: &Field, out: &mut Field, fields: &OrientedFields, asm: &Assembly) -> f64 {
    let w = current.width();
    let cur = current.as_slice();
    let left = fields.face_conductance(Direction::Left);
    let right = fields.face_conductance(Direction::Right);
    let up = fields.face_conductance(Direction::Up);
    let down = fields.face_conductance(Direction::Down);
    parallel::rows_max(out.as_mut_slice(), w, |y, row| {
        let mut max_delta = 0.0f64;
        for (x, slot) in row.iter_mut().enumerate() {
            let i = y * w + x;
            if asm.held[i] {
                *slot = asm.rhs[i];
                continue;
            }
            // solved cells never sit on the lattice border
            let c = cur[i];
            let residual = asm.source[i]
                + left[i] * (cur[i - 1] - c)
                + right[i] * (cur[i + 1] - c)
                + up[i] * (cur[i - w] - c)
                + down[i] * (cur[i + w] - c)
                + asm.surface[i] * (asm.t_inf - c)
                + asm.capacity[i] * (asm.previous[i] - c);
            let d = asm.diag[i];
            let value = if d > 0.0 { c + residual / d } else { c };
            if !value.is_finite() {
                return f64::INFINITY;
            }
            *slot = value;
            max_delta = max_delta.max((value - cur[i]).abs());
        }
        max_delta
    })
}

fn first_non_finite(field: &Field) -> SimError {
    let i = field
        .as_slice()
        .iter()
        .position(|v| !v.is_finite())
        .unwrap_or(0);
    SimError::Divergence {
        x: i % field.width().max(1),
        y: i / field.width().max(1),
    }
}

fn apply_held(field: &mut Field, asm: &Assembly) {
    for ((v, &h), &r) in field.as_mut_slice().iter_mut().zip(&asm.held).zip(&asm.rhs) {
        if h {
            *v = r;
        }
    }
}

/// A single sweep: neighbor terms from `state.temps`, the capacity term
/// from `state.previous`. Returns the new field and the max change over
/// non-exterior cells.
pub fn fd_sweep(
    state: &ThermalState,
    fields: &OrientedFields,
    bc: &BoundaryConditions,
    energy: &Field,
) -> Result<(Field, f64)> {
    let asm = assemble(&state.previous, fields, bc, energy)?;
    if !state.temps.same_shape(&state.previous) {
        return Err(SimError::Shape("temps and previous differ in shape".into()));
    }
    let mut out = Field::new(state.temps.width(), state.temps.height(), 0.0);
    let delta = sweep_into(&state.temps, &mut out, fields, &asm);
    if !delta.is_finite() {
        return Err(first_non_finite_in(&state.temps, &out, &asm));
    }
    Ok((out, delta))
}

// Rows abandoned at the first non-finite value leave stale entries, so
// recompute the culprit directly.
fn first_non_finite_in(current: &Field, partial: &Field, asm: &Assembly) -> SimError {
    let w = current.width();
    for i in 0..current.len() {
        if asm.held[i] {
            continue;
        }
        if !partial.as_slice()[i].is_finite() || !current.as_slice()[i].is_finite() {
            return SimError::Divergence { x: i % w, y: i / w };
        }
    }
    // value was computed but never stored; find the first row that bailed
    for i in 0..current.len() {
        if !asm.held[i] && (!asm.source[i].is_finite() || !asm.diag[i].is_finite()) {
            return SimError::Divergence { x: i % w, y: i / w };
        }
    }
    first_non_finite(partial)
}

/// Advances one timestep: sweeps to convergence, then commits.
pub fn fd_step(
    state: &mut ThermalState,
    fields: &OrientedFields,
    bc: &BoundaryConditions,
    energy: &Field,
    settings: &SolverSettings,
) -> Result<StepStats> {
    if !(settings.epsilon > 0.0) {
        return Err(SimError::Config(format!(
            "epsilon must be > 0, got {}",
            settings.epsilon
        )));
    }
    let start = state.temps.clone();
    let asm = assemble(&start, fields, bc, energy)?;
    let mut current = start.clone();
    apply_held(&mut current, &asm);
    let mut next = Field::new(current.width(), current.height(), 0.0);
    let mut sweeps = 0;
    loop {
        sweeps += 1;
        let delta = sweep_into(&current, &mut next, fields, &asm);
        if !delta.is_finite() {
            return Err(first_non_finite_in(&current, &next, &asm));
        }
        std::mem::swap(&mut current, &mut next);
        if delta <= settings.epsilon {
            state.previous = start;
            state.temps = current;
            state.elapsed += bc.timestep;
            return Ok(StepStats {
                sweeps,
                max_delta: delta,
            });
        }
        if sweeps >= settings.max_sweeps {
            return Err(SimError::Convergence {
                sweeps,
                max_delta: delta,
            });
        }
    }
}

/// Distributes per-device energy (J per step) equally over each device's
/// diffuser cells. Returns one field per floor.
pub fn apply_diffuser_energy(
    energy_per_device: &BTreeMap<String, f64>,
    layout: &DeviceLayout,
    floors: &[(usize, usize)],
) -> Result<Vec<Field>> {
    let mut out: Vec<Field> = floors.iter().map(|&(w, h)| Field::new(w, h, 0.0)).collect();
    for (id, &q) in energy_per_device {
        let device = layout
            .get(id)
            .ok_or_else(|| SimError::Config(format!("energy for unknown device {id}")))?;
        if q == 0.0 {
            continue;
        }
        if device.diffusers.is_empty() {
            return Err(SimError::Config(format!(
                "device {id} has energy {q} J but no diffuser cells"
            )));
        }
        let field = out.get_mut(device.floor).ok_or_else(|| {
            SimError::Config(format!("device {id} on missing floor {}", device.floor))
        })?;
        let share = q / device.diffusers.len() as f64;
        for &[x, y] in &device.diffusers {
            if x >= field.width() || y >= field.height() {
                return Err(SimError::Config(format!(
                    "device {id} diffuser ({x}, {y}) out of bounds"
                )));
            }
            let i = field.index(x, y);
            field.as_mut_slice()[i] += share;
        }
    }
    Ok(out)
}

/// Zone membership of interior-air cells on one floor, arranged for fast
/// window queries.
#[derive(Debug, Clone)]
pub struct ShuffleIndex {
    width: usize,
    height: usize,
    zone_of: Vec<u32>,
    /// zone → row → sorted x coordinates of member cells
    rows: Vec<Vec<Vec<u32>>>,
}

const NO_ZONE: u32 = u32::MAX;

impl ShuffleIndex {
    pub fn new(grid: &FloorplanGrid, zones: &ZoneMap, floor: usize) -> Self {
        let (w, h) = (grid.width(), grid.height());
        let mut zone_of = vec![NO_ZONE; w * h];
        let mut rows = Vec::new();
        for zone in zones.zones.iter().filter(|z| z.floor == floor) {
            let k = rows.len() as u32;
            let mut by_row = vec![Vec::new(); h];
            for &[x, y] in &zone.cells {
                if x < w && y < h && grid.get(x, y) == CellClass::InteriorAir {
                    zone_of[y * w + x] = k;
                    by_row[y].push(x as u32);
                }
            }
            for r in &mut by_row {
                r.sort_unstable();
            }
            rows.push(by_row);
        }
        Self {
            width: w,
            height: h,
            zone_of,
            rows,
        }
    }

    fn window_rows(&self, y: usize, radius: usize) -> std::ops::RangeInclusive<usize> {
        y.saturating_sub(radius)..=(y + radius).min(self.height - 1)
    }

    fn count_in_row(xs: &[u32], lo: u32, hi: u32) -> (usize, usize) {
        let a = xs.partition_point(|&v| v < lo);
        let b = xs.partition_point(|&v| v <= hi);
        (a, b)
    }
}

/// Randomized intra-zone air mixing: each zoned air cell, with probability
/// `swap_prob`, swaps temperature with a uniformly chosen other air cell of
/// the same zone within Chebyshev distance `swap_radius`.
pub fn air_shuffle<R: Rng>(
    temps: &mut Field,
    index: &ShuffleIndex,
    swap_prob: f64,
    swap_radius: usize,
    rng: &mut R,
) {
    if swap_prob <= 0.0 || swap_radius == 0 {
        return;
    }
    debug_assert_eq!(temps.width(), index.width);
    let w = index.width;
    let data = temps.as_mut_slice();
    for i in 0..index.zone_of.len() {
        let zone = index.zone_of[i];
        if zone == NO_ZONE || rng.gen::<f64>() >= swap_prob {
            continue;
        }
        let (x, y) = (i % w, i / w);
        let lo = x.saturating_sub(swap_radius) as u32;
        let hi = (x + swap_radius) as u32;
        let rows = &index.rows[zone as usize];
        let total: usize = index
            .window_rows(y, swap_radius)
            .map(|yy| {
                let (a, b) = ShuffleIndex::count_in_row(&rows[yy], lo, hi);
                b - a
            })
            .sum();
        if total < 2 {
            continue;
        }
        let target = loop {
            let mut k = rng.gen_range(0..total);
            let mut found = None;
            for yy in index.window_rows(y, swap_radius) {
                let (a, b) = ShuffleIndex::count_in_row(&rows[yy], lo, hi);
                if k < b - a {
                    found = Some(yy * w + rows[yy][a + k] as usize);
                    break;
                }
                k -= b - a;
            }
            let j = found.expect("index within window count");
            if j != i {
                break j;
            }
        };
        data.swap(i, target);
    }
}

/// [`air_shuffle`] using the state's own generator.
pub fn air_shuffle_state(
    state: &mut ThermalState,
    index: &ShuffleIndex,
    swap_prob: f64,
    swap_radius: usize,
) {
    let ThermalState { temps, rng, .. } = state;
    air_shuffle(temps, index, swap_prob, swap_radius, rng);
}
