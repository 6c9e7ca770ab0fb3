//! Heatmap rendering of temperature fields.

use std::path::{Path, PathBuf};

use image::{Rgba, RgbaImage};

use crate::error::{Result, SimError};
use crate::field::Field;
use crate::grid::{CellClass, FloorplanGrid};

pub const WALL_COLOR: [u8; 4] = [64, 64, 64, 255];
pub const EXTERIOR_COLOR: [u8; 4] = [0, 0, 0, 0];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Palette {
    /// Blue-white-red centered at 0, symmetric about the largest magnitude.
    Diverging,
    /// Blue to red over the value range.
    Sequential,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RenderStats {
    pub min: f64,
    pub max: f64,
}

fn lerp(a: [u8; 3], b: [u8; 3], t: f64) -> [u8; 3] {
    std::array::from_fn(|k| (a[k] as f64 + (b[k] as f64 - a[k] as f64) * t).round() as u8)
}

pub const BLUE: [u8; 3] = [33, 102, 172];
pub const WHITE: [u8; 3] = [255, 255, 255];
pub const RED: [u8; 3] = [178, 24, 43];

/// Diverging color of `t` in `[-1, 1]`; 0 maps to exactly white.
pub fn diverging(t: f64) -> [u8; 3] {
    let t = if t.is_nan() { 0.0 } else { t.clamp(-1.0, 1.0) };
    if t < 0.0 {
        lerp(WHITE, BLUE, -t)
    } else {
        lerp(WHITE, RED, t)
    }
}

pub fn sequential(t: f64) -> [u8; 3] {
    let t = if t.is_nan() { 0.0 } else { t.clamp(0.0, 1.0) };
    diverging(2.0 * t - 1.0)
}

/// Path of the min/max sidecar for an image path.
pub fn sidecar_path(image: &Path) -> PathBuf {
    image.with_extension("txt")
}

/// Renders air cells by value, walls dark gray and exterior transparent,
/// `scale` pixels per cell. Writes a PNG and a min/max sidecar.
pub fn render_heatmap(
    values: &Field,
    grid: &FloorplanGrid,
    palette: Palette,
    scale: u32,
    out: &Path,
) -> Result<RenderStats> {
    if values.width() != grid.width() || values.height() != grid.height() {
        return Err(SimError::Shape(format!(
            "field {}x{} vs grid {}x{}",
            values.width(),
            values.height(),
            grid.width(),
            grid.height()
        )));
    }
    let img = heatmap_image(values, grid, palette, scale.max(1));
    let air: Vec<f64> = grid
        .cells()
        .iter()
        .zip(values.as_slice())
        .filter(|(c, _)| **c == CellClass::InteriorAir)
        .map(|(_, v)| *v)
        .collect();
    let stats = RenderStats {
        min: air.iter().copied().fold(f64::INFINITY, f64::min),
        max: air.iter().copied().fold(f64::NEG_INFINITY, f64::max),
    };
    img.save(out)?;
    let side = sidecar_path(out);
    std::fs::write(&side, format!("min={}\nmax={}\n", stats.min, stats.max))
        .map_err(|e| SimError::file(&side, e))?;
    Ok(stats)
}

pub fn heatmap_image(values: &Field, grid: &FloorplanGrid, palette: Palette, scale: u32) -> RgbaImage {
    let air = || {
        grid.cells()
            .iter()
            .zip(values.as_slice())
            .filter(|(c, v)| **c == CellClass::InteriorAir && v.is_finite())
            .map(|(_, v)| *v)
    };
    let (lo, hi) = air().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    let magnitude = air().fold(0.0f64, |m, v| m.max(v.abs()));
    let color = |v: f64| match palette {
        Palette::Diverging => {
            if magnitude > 0.0 {
                diverging(v / magnitude)
            } else {
                WHITE
            }
        }
        Palette::Sequential => {
            if hi > lo {
                sequential((v - lo) / (hi - lo))
            } else {
                sequential(0.5)
            }
        }
    };
    let mut img = RgbaImage::new(grid.width() as u32 * scale, grid.height() as u32 * scale);
    for y in 0..grid.height() {
        for x in 0..grid.width() {
            let px = match grid.get(x, y) {
                CellClass::ExteriorAir => EXTERIOR_COLOR,
                CellClass::InteriorWall | CellClass::ExteriorWall => WALL_COLOR,
                CellClass::InteriorAir => {
                    let [r, g, b] = color(values.get(x, y));
                    [r, g, b, 255]
                }
            };
            for dy in 0..scale {
                for dx in 0..scale {
                    img.put_pixel(x as u32 * scale + dx, y as u32 * scale + dy, Rgba(px));
                }
            }
        }
    }
    img
}
