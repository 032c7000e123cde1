//! Terrain modeling with a simple morphological filter (SMRF) and
//! ground / non-ground classification.
//!
//! The cloud is rasterized to per-cell minimum elevation, holes are inpainted,
//! and a progressive disk opening flags cells that rise above the opened
//! surface by more than `slope_threshold × window_radius`. Flagged cells are
//! re-inpainted from the surviving ground cells to give a fully populated
//! [`GroundModel`] that can be queried for height above ground anywhere.

mod asc;
mod morph;

use serde::{Deserialize, Serialize};

use crate::cloud::{Point3, PointCloud};

pub use asc::{read_ground_model, write_ground_model};

#[derive(Debug, thiserror::Error)]
pub enum GroundError {
    #[error("cloud is empty: no extent to rasterize")]
    NoExtent,
    #[error("elevation grid has no populated cells")]
    NoGroundCells,
    #[error("invalid SMRF parameters: {0}")]
    InvalidParams(String),
    #[error("grid file {path}: {message}")]
    Format { path: String, message: String },
    #[error("grid file {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// Regular raster geometry shared by [`ElevationGrid`] and [`GroundModel`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridGeometry {
    pub origin: (f64, f64),
    pub cell_size: f64,
    pub ncols: usize,
    pub nrows: usize,
}

impl GridGeometry {
    pub fn cell_count(&self) -> usize {
        self.ncols * self.nrows
    }

    #[inline]
    pub fn index(&self, col: usize, row: usize) -> usize {
        row * self.ncols + col
    }

    /// Cell containing `(x, y)`, clamped into the grid.
    pub fn cell_of(&self, x: f64, y: f64) -> (usize, usize) {
        let c = ((x - self.origin.0) / self.cell_size).floor();
        let r = ((y - self.origin.1) / self.cell_size).floor();
        (
            (c.max(0.0) as usize).min(self.ncols - 1),
            (r.max(0.0) as usize).min(self.nrows - 1),
        )
    }

    pub fn cell_center(&self, col: usize, row: usize) -> (f64, f64) {
        (
            self.origin.0 + (col as f64 + 0.5) * self.cell_size,
            self.origin.1 + (row as f64 + 0.5) * self.cell_size,
        )
    }
}

/// Per-cell minimum elevation; `None` marks cells without points.
#[derive(Debug, Clone, PartialEq)]
pub struct ElevationGrid {
    pub geometry: GridGeometry,
    pub cells: Vec<Option<f64>>,
}

impl ElevationGrid {
    pub fn get(&self, col: usize, row: usize) -> Option<f64> {
        self.cells[self.geometry.index(col, row)]
    }
}

/// Fully populated terrain surface.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundModel {
    pub geometry: GridGeometry,
    pub cells: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SmrfParams {
    pub cell_size: f64,
    pub max_window_radius: f64,
    pub slope_threshold: f64,
    pub height_threshold: f64,
}

impl Default for SmrfParams {
    fn default() -> Self {
        SmrfParams {
            cell_size: 0.25,
            max_window_radius: 2.5,
            slope_threshold: 0.15,
            height_threshold: 0.05,
        }
    }
}

impl SmrfParams {
    pub fn validate(&self) -> Result<(), GroundError> {
        let named = [
            ("cell_size", self.cell_size),
            ("max_window_radius", self.max_window_radius),
            ("slope_threshold", self.slope_threshold),
            ("height_threshold", self.height_threshold),
        ];
        for (name, v) in named {
            if !(v > 0.0 && v.is_finite()) {
                return Err(GroundError::InvalidParams(format!("{name} must be positive, got {v}")));
            }
        }
        if self.max_window_radius < self.cell_size {
            return Err(GroundError::InvalidParams(format!(
                "max_window_radius {} is smaller than cell_size {}",
                self.max_window_radius, self.cell_size
            )));
        }
        Ok(())
    }
}

pub fn rasterize_min_elevation(cloud: &PointCloud, cell_size: f64) -> Result<ElevationGrid, GroundError> {
    if !(cell_size > 0.0) {
        return Err(GroundError::InvalidParams(format!("cell_size must be positive, got {cell_size}")));
    }
    let (min_x, min_y, max_x, max_y) = cloud.xy_bounds().ok_or(GroundError::NoExtent)?;
    let geometry = GridGeometry {
        origin: (min_x, min_y),
        cell_size,
        ncols: ((max_x - min_x) / cell_size).floor() as usize + 1,
        nrows: ((max_y - min_y) / cell_size).floor() as usize + 1,
    };
    let mut cells: Vec<Option<f64>> = vec![None; geometry.cell_count()];
    for p in cloud.points() {
        let (c, r) = geometry.cell_of(p.x, p.y);
        let slot = &mut cells[geometry.index(c, r)];
        *slot = Some(slot.map_or(p.z, |z| z.min(p.z)));
    }
    Ok(ElevationGrid { geometry, cells })
}

/// Fills every cell where `known` is false with the iterated 8-neighbor mean.
/// Stops when the largest per-cell change drops under 1 mm or after 1000 sweeps.
pub(crate) fn inpaint(geometry: &GridGeometry, values: &mut [f64], known: &[bool]) {
    const TOLERANCE: f64 = 1e-3;
    const MAX_SWEEPS: usize = 1000;
    let (nc, nr) = (geometry.ncols as isize, geometry.nrows as isize);
    let neighbors = |c: isize, r: isize| {
        (-1..=1)
            .flat_map(move |dr| (-1..=1).map(move |dc| (c + dc, r + dr)))
            .filter(move |&(x, y)| (x, y) != (c, r) && x >= 0 && y >= 0 && x < nc && y < nr)
            .map(move |(x, y)| (y * nc + x) as usize)
    };

    // seed unknown cells outward from known cells (breadth-first) so the
    // sweeps start near the solution
    let mut assigned = known.to_vec();
    let mut frontier: Vec<usize> = (0..values.len()).filter(|&i| known[i]).collect();
    let mut queued = known.to_vec();
    while !frontier.is_empty() {
        let mut fresh = Vec::new();
        for &i in &frontier {
            let (c, r) = ((i as isize) % nc, (i as isize) / nc);
            for j in neighbors(c, r) {
                if !queued[j] {
                    queued[j] = true;
                    fresh.push(j);
                }
            }
        }
        fresh.sort_unstable();
        for &j in &fresh {
            let (c, r) = ((j as isize) % nc, (j as isize) / nc);
            let (sum, n) = neighbors(c, r)
                .filter(|&k| assigned[k])
                .fold((0.0, 0usize), |(s, n), k| (s + values[k], n + 1));
            values[j] = sum / n as f64;
        }
        for &j in &fresh {
            assigned[j] = true;
        }
        frontier = fresh;
    }

    let unknown: Vec<usize> = (0..values.len()).filter(|&i| !known[i]).collect();
    if unknown.is_empty() {
        return;
    }
    for _ in 0..MAX_SWEEPS {
        let mut max_change: f64 = 0.0;
        for &i in &unknown {
            let (c, r) = ((i as isize) % nc, (i as isize) / nc);
            let (sum, n) = neighbors(c, r).fold((0.0, 0usize), |(s, n), k| (s + values[k], n + 1));
            if n == 0 {
                continue;
            }
            let v = sum / n as f64;
            max_change = max_change.max((v - values[i]).abs());
            values[i] = v;
        }
        if max_change < TOLERANCE {
            break;
        }
    }
}

/// Builds the terrain surface from a minimum-elevation raster.
pub fn smrf_surface(grid: &ElevationGrid, params: &SmrfParams) -> Result<GroundModel, GroundError> {
    params.validate()?;
    let geometry = grid.geometry;
    let known: Vec<bool> = grid.cells.iter().map(Option::is_some).collect();
    if !known.iter().any(|&k| k) {
        return Err(GroundError::NoGroundCells);
    }
    let mut surface: Vec<f64> = grid.cells.iter().map(|c| c.unwrap_or(0.0)).collect();
    inpaint(&geometry, &mut surface, &known);

    let flagged = morph::flag_objects(&geometry, &surface, params);

    let ground: Vec<bool> = known.iter().zip(&flagged).map(|(&k, &f)| k && !f).collect();
    let mut cells: Vec<f64> = grid.cells.iter().map(|c| c.unwrap_or(0.0)).collect();
    inpaint(&geometry, &mut cells, &ground);
    Ok(GroundModel { geometry, cells })
}

impl GroundModel {
    /// A constant-elevation model covering one cell at `origin`.
    pub fn flat(z: f64) -> Self {
        GroundModel {
            geometry: GridGeometry {
                origin: (0.0, 0.0),
                cell_size: 1.0,
                ncols: 1,
                nrows: 1,
            },
            cells: vec![z],
        }
    }

    pub fn get(&self, col: usize, row: usize) -> f64 {
        self.cells[self.geometry.index(col, row)]
    }

    /// Bilinear interpolation between cell centers, clamped at the grid edge.
    pub fn elevation_at(&self, x: f64, y: f64) -> f64 {
        let g = &self.geometry;
        let axis = |v: f64, origin: f64, n: usize| -> (usize, usize, f64) {
            let u = ((v - origin) / g.cell_size - 0.5).clamp(0.0, (n - 1) as f64);
            let i0 = (u.floor() as usize).min(n.saturating_sub(2));
            let i1 = (i0 + 1).min(n - 1);
            (i0, i1, u - i0 as f64)
        };
        let (c0, c1, tx) = axis(x, g.origin.0, g.ncols);
        let (r0, r1, ty) = axis(y, g.origin.1, g.nrows);
        let z00 = self.get(c0, r0);
        let z10 = self.get(c1, r0);
        let z01 = self.get(c0, r1);
        let z11 = self.get(c1, r1);
        let bottom = z00 + (z10 - z00) * tx;
        let top = z01 + (z11 - z01) * tx;
        bottom + (top - bottom) * ty
    }

    pub fn height_above_ground(&self, p: &Point3) -> f64 {
        p.z - self.elevation_at(p.x, p.y)
    }
}

pub fn height_above_ground(ground: &GroundModel, p: &Point3) -> f64 {
    ground.height_above_ground(p)
}

/// Splits point indices into `(ground, nonground)`; points at or below
/// `height_threshold` over the surface are ground.
pub fn classify_ground(cloud: &PointCloud, ground: &GroundModel, height_threshold: f64) -> (Vec<usize>, Vec<usize>) {
    let mut on = Vec::new();
    let mut off = Vec::new();
    for (i, p) in cloud.points().iter().enumerate() {
        if ground.height_above_ground(p) <= height_threshold {
            on.push(i);
        } else {
            off.push(i);
        }
    }
    (on, off)
}
