//! Raster floorplan to control-volume lattice.
//!
//! Pipeline: binarize, erase masked features, denoise by morphological
//! opening, block-max downsample to CV resolution, pad with exterior,
//! flood-fill the exterior, thin walls, then place devices by room.

use std::collections::VecDeque;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::config::{BuildingConfig, FloorConfig, CONFIG_VERSION};
use crate::error::{Result, SimError};
use crate::field::Direction;
use crate::grid::{CellClass, Device, DeviceLayout, DeviceType, FloorplanGrid, MaterialParams, Zone, ZoneMap};
use crate::synth::{plant_devices, sized_plant};

/// Grayscale image with intensities in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct RasterImage {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<f32>,
}

impl RasterImage {
    pub fn new(width: usize, height: usize, pixels: Vec<f32>) -> Result<Self> {
        if width == 0 || height == 0 || pixels.len() != width * height {
            return Err(SimError::Shape(format!(
                "{} pixels for a {width}x{height} image",
                pixels.len()
            )));
        }
        Ok(Self {
            width,
            height,
            pixels,
        })
    }

    /// Reads PNG or PGM, converting to grayscale.
    pub fn load(path: &Path) -> Result<Self> {
        let img = image::open(path)
            .map_err(|e| match e {
                image::ImageError::IoError(io) => SimError::file(path, io),
                other => SimError::Image(other),
            })?
            .into_luma8();
        let (w, h) = img.dimensions();
        let pixels = img.into_raw().into_iter().map(|v| v as f32 / 255.0).collect();
        Self::new(w as usize, h as usize, pixels)
    }
}

/// Boolean raster; `true` is wall.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BitGrid {
    pub width: usize,
    pub height: usize,
    pub bits: Vec<bool>,
}

impl BitGrid {
    pub fn new(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            bits: vec![false; width * height],
        }
    }

    pub fn from_rows(rows: &[&str]) -> Self {
        let height = rows.len();
        let width = rows.first().map_or(0, |r| r.len());
        let bits = rows
            .iter()
            .flat_map(|r| r.bytes().map(|b| b == b'#' || b == b'1'))
            .collect();
        Self {
            width,
            height,
            bits,
        }
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> bool {
        self.bits[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: bool) {
        self.bits[y * self.width + x] = v;
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }
}

/// Wall where intensity is below `threshold`.
pub fn binarize(img: &RasterImage, threshold: f32) -> BitGrid {
    BitGrid {
        width: img.width,
        height: img.height,
        bits: img.pixels.iter().map(|&p| p < threshold).collect(),
    }
}

/// Pixel rectangle to clear before processing (doors, legends, compass).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MaskRect {
    pub x: usize,
    pub y: usize,
    pub width: usize,
    pub height: usize,
}

pub fn erase(bits: &mut BitGrid, rects: &[MaskRect]) {
    for r in rects {
        for y in r.y..(r.y + r.height).min(bits.height) {
            for x in r.x..(r.x + r.width).min(bits.width) {
                bits.set(x, y, false);
            }
        }
    }
}

fn neighborhood(g: &BitGrid, x: usize, y: usize) -> impl Iterator<Item = bool> + '_ {
    let x0 = x.saturating_sub(1);
    let y0 = y.saturating_sub(1);
    let x1 = (x + 1).min(g.width - 1);
    let y1 = (y + 1).min(g.height - 1);
    (y0..=y1).flat_map(move |yy| (x0..=x1).map(move |xx| g.get(xx, yy)))
}

/// 3×3 erosion; out-of-image neighbors are ignored.
pub fn erode(g: &BitGrid) -> BitGrid {
    let mut out = BitGrid::new(g.width, g.height);
    for y in 0..g.height {
        for x in 0..g.width {
            out.set(x, y, neighborhood(g, x, y).all(|b| b));
        }
    }
    out
}

/// 3×3 dilation; out-of-image neighbors are ignored.
pub fn dilate(g: &BitGrid) -> BitGrid {
    let mut out = BitGrid::new(g.width, g.height);
    for y in 0..g.height {
        for x in 0..g.width {
            out.set(x, y, neighborhood(g, x, y).any(|b| b));
        }
    }
    out
}

/// `n_iters` rounds of opening (erosion then dilation).
pub fn denoise(g: &BitGrid, n_iters: usize) -> BitGrid {
    let mut out = g.clone();
    for _ in 0..n_iters {
        out = dilate(&erode(&out));
    }
    out
}

/// Block size for CV size `cv_size` at `scale` meters per pixel.
pub fn block_size(cv_size: f64, scale: f64) -> Result<usize> {
    if !(cv_size > 0.0 && scale > 0.0) {
        return Err(SimError::Config("cv size and image scale must be > 0".into()));
    }
    let ratio = cv_size / scale;
    let block = ratio.round();
    if block < 1.0 || (ratio - block).abs() > 1e-6 * ratio.max(1.0) {
        return Err(SimError::Config(format!(
            "cv size {cv_size} m is not a whole number of {scale} m pixels"
        )));
    }
    Ok(block as usize)
}

/// Block-max pooling: a cell is wall if any pixel of its block is.
pub fn downsample(g: &BitGrid, block: usize) -> BitGrid {
    let w = g.width.div_ceil(block);
    let h = g.height.div_ceil(block);
    let mut out = BitGrid::new(w, h);
    for y in 0..g.height {
        for x in 0..g.width {
            if g.get(x, y) {
                out.set(x / block, y / block, true);
            }
        }
    }
    out
}

/// Adds `pad` background cells around the grid.
pub fn pad(g: &BitGrid, pad: usize) -> BitGrid {
    let mut out = BitGrid::new(g.width + 2 * pad, g.height + 2 * pad);
    for y in 0..g.height {
        for x in 0..g.width {
            out.set(x + pad, y + pad, g.get(x, y));
        }
    }
    out
}

/// Background 4-connected to the border becomes exterior air, enclosed
/// background interior air, walls interior walls.
pub fn mark_exterior(g: &BitGrid) -> Vec<CellClass> {
    flood_exterior(g, &[])
}

/// Exterior flood seeded from the border and from `seeds`.
fn flood_exterior(g: &BitGrid, seeds: &[usize]) -> Vec<CellClass> {
    let (w, h) = (g.width, g.height);
    let mut out: Vec<CellClass> = g
        .bits
        .iter()
        .map(|&b| if b { CellClass::InteriorWall } else { CellClass::InteriorAir })
        .collect();
    let mut queue = VecDeque::new();
    let border = (0..w * h).filter(|&i| {
        let (x, y) = (i % w, i / w);
        x == 0 || y == 0 || x + 1 == w || y + 1 == h
    });
    for i in border.chain(seeds.iter().copied()) {
        if !g.bits[i] && out[i] == CellClass::InteriorAir {
            out[i] = CellClass::ExteriorAir;
            queue.push_back((i % w, i / w));
        }
    }
    while let Some((x, y)) = queue.pop_front() {
        for d in Direction::ALL {
            let (dx, dy) = d.offset();
            let (Some(nx), Some(ny)) = (x.checked_add_signed(dx), y.checked_add_signed(dy)) else {
                continue;
            };
            if nx < w && ny < h && out[ny * w + nx] == CellClass::InteriorAir {
                out[ny * w + nx] = CellClass::ExteriorAir;
                queue.push_back((nx, ny));
            }
        }
    }
    out
}

// 8-neighborhood in counter-clockwise order starting east.
const RING: [(isize, isize); 8] = [
    (1, 0),
    (1, -1),
    (0, -1),
    (-1, -1),
    (-1, 0),
    (-1, 1),
    (0, 1),
    (1, 1),
];

fn ring(walls: &[bool], w: usize, h: usize, x: usize, y: usize) -> [bool; 8] {
    std::array::from_fn(|k| {
        let (dx, dy) = RING[k];
        match (x.checked_add_signed(dx), y.checked_add_signed(dy)) {
            (Some(nx), Some(ny)) if nx < w && ny < h => walls[ny * w + nx],
            _ => false,
        }
    })
}

/// Yokoi connectivity number for 8-connected foreground; a wall pixel is
/// simple (removable without changing topology) iff this equals 1.
fn connectivity8(n: &[bool; 8]) -> u32 {
    let c = |k: usize| !n[k % 8] as u32;
    [0, 2, 4, 6]
        .iter()
        .map(|&k| c(k) - c(k) * c(k + 1) * c(k + 2))
        .sum()
}

fn removable(walls: &[bool], w: usize, h: usize, x: usize, y: usize) -> bool {
    let n = ring(walls, w, h, x, y);
    let wall_neighbors = n.iter().filter(|&&b| b).count();
    wall_neighbors > 1 && connectivity8(&n) == 1
}

fn room_count(cells: &[CellClass], w: usize, h: usize) -> (usize, Vec<usize>) {
    let mut label = vec![usize::MAX; w * h];
    let mut count = 0;
    let mut queue = VecDeque::new();
    for start in 0..w * h {
        if cells[start] != CellClass::InteriorAir || label[start] != usize::MAX {
            continue;
        }
        label[start] = count;
        queue.push_back(start);
        while let Some(i) = queue.pop_front() {
            let (x, y) = (i % w, i / w);
            let mut visit = |j: usize| {
                if cells[j] == CellClass::InteriorAir && label[j] == usize::MAX {
                    label[j] = count;
                    queue.push_back(j);
                }
            };
            if x > 0 {
                visit(i - 1);
            }
            if x + 1 < w {
                visit(i + 1);
            }
            if y > 0 {
                visit(i - w);
            }
            if y + 1 < h {
                visit(i + w);
            }
        }
        count += 1;
    }
    (count, label)
}

/// Reduces interior walls to one cell and exterior walls to two cells
/// (the skeleton plus one layer on the exterior side), keeping every
/// room separate.
///
/// Walls are thinned to an 8-connected skeleton by directional removal of
/// simple points. Skeleton cells touching exterior air become exterior
/// walls and grow one cell outward. Input that already carries exterior
/// wall labels has its outer layer stripped first. Exterior pockets
/// narrower than the doubled wall can make one pass differ from the
/// next, so passes repeat until the lattice stops changing.
pub fn thin_walls(cells: &[CellClass], w: usize, h: usize) -> Result<Vec<CellClass>> {
    if cells.len() != w * h {
        return Err(SimError::Shape(format!("{} cells for {w}x{h}", cells.len())));
    }
    let (rooms_before, before_labels) = room_count(cells, w, h);
    let mut out = thin_pass(cells, w, h);
    for _ in 0..MAX_THIN_PASSES {
        let next = thin_pass(&out, w, h);
        if next == out {
            break;
        }
        out = next;
    }

    let (rooms_after, labels) = room_count(&out, w, h);
    if rooms_after != rooms_before {
        let i = (0..w * h)
            .find(|&i| labels[i] != usize::MAX && before_labels[i] == usize::MAX)
            .or_else(|| (0..w * h).find(|&i| labels[i] != usize::MAX))
            .unwrap_or(0);
        return Err(SimError::RoomMerge { x: i % w, y: i / w });
    }
    Ok(out)
}

const MAX_THIN_PASSES: usize = 16;

fn thin_pass(cells: &[CellClass], w: usize, h: usize) -> Vec<CellClass> {
    let ext_in = exterior_mask(cells);
    let mut walls: Vec<bool> = (0..w * h)
        .map(|i| match cells[i] {
            CellClass::InteriorWall => true,
            CellClass::ExteriorWall => !ring(&ext_in, w, h, i % w, i / w).iter().any(|&b| b),
            _ => false,
        })
        .collect();

    let sides = [(0isize, -1isize), (0, 1), (1, 0), (-1, 0)];
    loop {
        let mut changed = false;
        for (dx, dy) in sides {
            let candidates: Vec<usize> = (0..w * h)
                .filter(|&i| {
                    if !walls[i] {
                        return false;
                    }
                    let (x, y) = (i % w, i / w);
                    match (x.checked_add_signed(dx), y.checked_add_signed(dy)) {
                        (Some(nx), Some(ny)) if nx < w && ny < h => !walls[ny * w + nx],
                        _ => true,
                    }
                })
                .collect();
            for i in candidates {
                if removable(&walls, w, h, i % w, i / w) {
                    walls[i] = false;
                    changed = true;
                }
            }
        }
        if !changed {
            break;
        }
    }

    let bits = BitGrid {
        width: w,
        height: h,
        bits: walls.clone(),
    };
    let seeds: Vec<usize> = (0..w * h).filter(|&i| ext_in[i]).collect();
    let mut out = flood_exterior(&bits, &seeds);
    let ext = exterior_mask(&out);
    let skeleton_exterior: Vec<usize> = (0..w * h)
        .filter(|&i| walls[i] && ring(&ext, w, h, i % w, i / w).iter().any(|&b| b))
        .collect();
    for &i in &skeleton_exterior {
        out[i] = CellClass::ExteriorWall;
        let (x, y) = (i % w, i / w);
        for (dx, dy) in RING {
            if let (Some(nx), Some(ny)) = (x.checked_add_signed(dx), y.checked_add_signed(dy)) {
                if nx > 0 && ny > 0 && nx + 1 < w && ny + 1 < h && ext[ny * w + nx] {
                    out[ny * w + nx] = CellClass::ExteriorWall;
                }
            }
        }
    }
    out
}

fn exterior_mask(cells: &[CellClass]) -> Vec<bool> {
    cells.iter().map(|c| c.is_exterior()).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IngestOptions {
    pub threshold: f32,
    pub denoise_iters: usize,
    /// CV edge, m.
    pub cv_size: f64,
    /// Meters per pixel.
    pub scale: f64,
    pub floor_height: f64,
    #[serde(default)]
    pub masks: Vec<MaskRect>,
}

impl Default for IngestOptions {
    fn default() -> Self {
        Self {
            threshold: 0.5,
            denoise_iters: 2,
            cv_size: 0.5,
            scale: 0.05,
            floor_height: 3.0,
            masks: Vec::new(),
        }
    }
}

/// Exterior padding added around the downsampled lattice, cells.
pub const PADDING: usize = 2;

#[derive(Debug, Clone)]
pub struct IngestResult {
    pub grid: FloorplanGrid,
    /// Pixels per cell.
    pub block: usize,
    /// Air rooms before thinning.
    pub rooms: usize,
}

impl IngestResult {
    /// Cell containing pixel `(px, py)`.
    pub fn pixel_to_cell(&self, px: f64, py: f64) -> Option<(usize, usize)> {
        if px < 0.0 || py < 0.0 {
            return None;
        }
        let x = (px as usize) / self.block + PADDING;
        let y = (py as usize) / self.block + PADDING;
        (x < self.grid.width() && y < self.grid.height()).then_some((x, y))
    }
}

pub fn ingest(img: &RasterImage, opts: &IngestOptions) -> Result<IngestResult> {
    let block = block_size(opts.cv_size, opts.scale)?;
    let mut bits = binarize(img, opts.threshold);
    erase(&mut bits, &opts.masks);
    let clean = denoise(&bits, opts.denoise_iters);
    let cells = pad(&downsample(&clean, block), PADDING);
    let labels = mark_exterior(&cells);
    let (w, h) = (cells.width, cells.height);
    let (rooms, _) = room_count(&labels, w, h);
    let thin = thin_walls(&labels, w, h)?;
    let grid = FloorplanGrid::new(w, h, thin, opts.cv_size, opts.floor_height)?;
    Ok(IngestResult { grid, block, rooms })
}

/// Air rooms (4-connected interior air) of a grid with their cells in
/// row-major order.
pub fn rooms(grid: &FloorplanGrid) -> Vec<Vec<[usize; 2]>> {
    let (n, labels) = room_count(grid.cells(), grid.width(), grid.height());
    let mut out = vec![Vec::new(); n];
    for (i, &l) in labels.iter().enumerate() {
        if l != usize::MAX {
            out[l].push([i % grid.width(), i / grid.width()]);
        }
    }
    out
}

/// One device in a placement file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlacedDevice {
    pub id: String,
    #[serde(rename = "type")]
    pub device_type: DeviceType,
    /// Pixel inside the room the device serves.
    #[serde(default)]
    pub anchor: Option<[f64; 2]>,
    /// Explicit diffuser cells, used instead of an anchor.
    #[serde(default)]
    pub cells: Option<Vec<[usize; 2]>>,
    #[serde(default)]
    pub observable_fields: Vec<String>,
    #[serde(default)]
    pub action_fields: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct PlacementFile {
    pub devices: Vec<PlacedDevice>,
}

/// Resolves anchors to the interior-air cells of the enclosing room.
pub fn place_devices(ingest: &IngestResult, placement: &PlacementFile, floor: usize) -> Result<DeviceLayout> {
    let grid = &ingest.grid;
    let (_, labels) = room_count(grid.cells(), grid.width(), grid.height());
    let rooms = rooms(grid);
    let mut devices = Vec::new();
    for p in &placement.devices {
        let diffusers = match (&p.anchor, &p.cells) {
            (_, Some(cells)) => cells.clone(),
            (Some([px, py]), None) => {
                let (x, y) = ingest.pixel_to_cell(*px, *py).ok_or_else(|| {
                    SimError::Placement(format!("device {} anchor ({px}, {py}) is outside the image", p.id))
                })?;
                let class = grid.get(x, y);
                if class != CellClass::InteriorAir {
                    return Err(SimError::Placement(format!(
                        "device {} anchor ({px}, {py}) falls on {class:?} cell ({x}, {y})",
                        p.id
                    )));
                }
                rooms[labels[grid.index(x, y)]].clone()
            }
            (None, None) => Vec::new(),
        };
        devices.push(Device {
            id: p.id.clone(),
            device_type: p.device_type,
            floor,
            diffusers,
            observable_fields: p.observable_fields.clone(),
            action_fields: p.action_fields.clone(),
        });
    }
    Ok(DeviceLayout { devices })
}

/// Building config for a single ingested floor: one zone per room, each
/// VAV assigned to the room holding its first diffuser. Plant devices
/// missing from the placement are added with default fields.
pub fn building_from_plan(ingest: &IngestResult, placement: &PlacementFile, name: &str) -> Result<BuildingConfig> {
    let mut layout = place_devices(ingest, placement, 0)?;
    let grid = &ingest.grid;
    let (_, labels) = room_count(grid.cells(), grid.width(), grid.height());
    let mut zones: Vec<Zone> = rooms(grid)
        .into_iter()
        .enumerate()
        .map(|(k, cells)| Zone {
            id: format!("room_{k}"),
            floor: 0,
            cells,
            devices: Vec::new(),
        })
        .collect();
    for d in &layout.devices {
        if d.device_type != DeviceType::Vav {
            continue;
        }
        let &[x, y] = d
            .diffusers
            .first()
            .ok_or_else(|| SimError::Placement(format!("VAV {} has no diffuser cells", d.id)))?;
        if x >= grid.width() || y >= grid.height() || grid.get(x, y) != CellClass::InteriorAir {
            return Err(SimError::Placement(format!("VAV {} diffuser ({x}, {y}) is not interior air", d.id)));
        }
        zones[labels[grid.index(x, y)]].devices.push(d.id.clone());
    }
    for dev in plant_devices() {
        if !layout.devices.iter().any(|d| d.device_type == dev.device_type) {
            layout.devices.push(dev);
        }
    }
    let cv = grid.cv_size();
    let largest = zones.iter().map(|z| z.cells.len()).max().unwrap_or(0) as f64;
    let plant = sized_plant(largest * cv * cv * grid.floor_height(), zones.len());
    let config = BuildingConfig {
        version: CONFIG_VERSION,
        name: name.to_string(),
        floors: vec![FloorConfig::from_grid(grid)],
        zones: ZoneMap { zones },
        devices: layout,
        params: MaterialParams::reference_calibrated(),
        plant,
        setpoints: Default::default(),
        occupancy: Default::default(),
        occupant_density: 0.05,
        reward: Default::default(),
        tariff: Default::default(),
        weather: Default::default(),
    };
    config.validate()?;
    Ok(config)
}
