//! Coverage of the ground-truth (x, y) space by the repertoire.

use serde::{Deserialize, Serialize};

use crate::envs::{Bounds, Vec2};
use crate::error::{Result, TaxonsError};

pub const DEFAULT_RESOLUTION: usize = 50;

/// Occupancy of a `resolution × resolution` grid over `bounds`.
///
/// Cells are half-open `[lo, hi)` along each axis except the last one, which
/// also holds the top edge.
#[derive(Debug, Clone, PartialEq)]
pub struct CoverageGrid {
    bounds: Bounds,
    resolution: usize,
    cells: Vec<bool>,
    occupied: usize,
}

impl CoverageGrid {
    pub fn new(bounds: Bounds, resolution: usize) -> Result<Self> {
        if resolution == 0 {
            return Err(TaxonsError::invalid("coverage resolution must be at least 1"));
        }
        if bounds.is_degenerate() {
            return Err(TaxonsError::invalid(format!("degenerate coverage bounds {bounds:?}")));
        }
        Ok(CoverageGrid {
            bounds,
            resolution,
            cells: vec![false; resolution * resolution],
            occupied: 0,
        })
    }

    pub fn resolution(&self) -> usize {
        self.resolution
    }

    pub fn occupied(&self) -> usize {
        self.occupied
    }

    /// `(column, row)` of the cell holding `(x, y)`; out-of-bounds points are
    /// clamped to the nearest boundary cell.
    pub fn cell_of(&self, x: f64, y: f64) -> Result<(usize, usize)> {
        if !x.is_finite() || !y.is_finite() {
            return Err(TaxonsError::NonFinite(format!("coverage point ({x}, {y})")));
        }
        if !self.bounds.contains(Vec2::new(x, y)) {
            log::warn!("coverage point ({x}, {y}) outside {:?}; clamped", self.bounds);
        }
        let b = &self.bounds;
        let axis = |v: f64, lo: f64, hi: f64| {
            let t = (v - lo) / (hi - lo) * self.resolution as f64;
            (t.floor().max(0.0) as usize).min(self.resolution - 1)
        };
        Ok((axis(x, b.x_min, b.x_max), axis(y, b.y_min, b.y_max)))
    }

    /// Marks the cell of `(x, y)`; returns whether it was newly reached.
    pub fn add(&mut self, x: f64, y: f64) -> Result<bool> {
        let (c, r) = self.cell_of(x, y)?;
        let cell = &mut self.cells[r * self.resolution + c];
        let fresh = !*cell;
        *cell = true;
        self.occupied += usize::from(fresh);
        Ok(fresh)
    }

    pub fn is_occupied(&self, col: usize, row: usize) -> bool {
        self.cells[row * self.resolution + col]
    }

    /// Percentage of cells reached, in `[0, 100]`.
    pub fn percentage(&self) -> f64 {
        100.0 * self.occupied as f64 / self.cells.len() as f64
    }
}

pub fn coverage(points: &[(f64, f64)], bounds: Bounds, resolution: usize) -> Result<f64> {
    let mut grid = CoverageGrid::new(bounds, resolution)?;
    for &(x, y) in points {
        grid.add(x, y)?;
    }
    Ok(grid.percentage())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub generation: usize,
    pub archive_size: usize,
    pub coverage: f64,
}

/// One point per generation from the ground truths each generation added
/// to the archive.
pub fn coverage_curve(
    additions: &[Vec<(f64, f64)>],
    bounds: Bounds,
    resolution: usize,
) -> Result<Vec<CurvePoint>> {
    let mut grid = CoverageGrid::new(bounds, resolution)?;
    let mut size = 0;
    let mut curve = Vec::with_capacity(additions.len());
    for (g, batch) in additions.iter().enumerate() {
        for &(x, y) in batch {
            grid.add(x, y)?;
        }
        size += batch.len();
        curve.push(CurvePoint {
            generation: g + 1,
            archive_size: size,
            coverage: grid.percentage(),
        });
    }
    Ok(curve)
}
