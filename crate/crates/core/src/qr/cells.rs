//! Module <-> pixel resampling: each QR module becomes a `cell_px x cell_px`
//! block of signed scores (+1 dark, -1 light) and is read back by block mean.

use super::matrix::{QrMatrix, SIZE};
use crate::error::{Result, SfwError};

#[derive(Clone, Debug, PartialEq)]
pub struct CellGrid {
    cell_px: usize,
    pixels: Vec<f64>,
}

impl CellGrid {
    /// Wraps a square grid of `(21 * cell_px)^2` row-major scores.
    pub fn new(cell_px: usize, pixels: Vec<f64>) -> Result<Self> {
        if cell_px == 0 {
            return Err(SfwError::InvalidParameter("cell_px must be >= 1".into()));
        }
        let side = SIZE * cell_px;
        if pixels.len() != side * side {
            return Err(SfwError::Size {
                what: "cell grid pixels",
                expected: side * side,
                actual: pixels.len(),
            });
        }
        Ok(Self { cell_px, pixels })
    }

    pub fn cell_px(&self) -> usize {
        self.cell_px
    }

    pub fn side(&self) -> usize {
        SIZE * self.cell_px
    }

    pub fn pixels(&self) -> &[f64] {
        &self.pixels
    }

    pub fn pixels_mut(&mut self) -> &mut [f64] {
        &mut self.pixels
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.pixels[row * self.side() + col]
    }

    /// Mean score of the block belonging to module `(row, col)`.
    pub fn module_score(&self, row: usize, col: usize) -> f64 {
        let n = self.cell_px;
        let mut sum = 0.0;
        for dy in 0..n {
            for dx in 0..n {
                sum += self.get(row * n + dy, col * n + dx);
            }
        }
        sum / (n * n) as f64
    }
}

pub fn cell_upsample(matrix: &QrMatrix, cell_px: usize) -> Result<CellGrid> {
    if cell_px == 0 {
        return Err(SfwError::InvalidParameter("cell_px must be >= 1".into()));
    }
    let side = SIZE * cell_px;
    let mut pixels = vec![0.0; side * side];
    for r in 0..side {
        for c in 0..side {
            pixels[r * side + c] = if matrix.get(r / cell_px, c / cell_px) { 1.0 } else { -1.0 };
        }
    }
    CellGrid::new(cell_px, pixels)
}

/// Dark iff the block mean is non-negative.
pub fn cell_downsample(grid: &CellGrid) -> QrMatrix {
    let mut modules = [[false; SIZE]; SIZE];
    for (r, row) in modules.iter_mut().enumerate() {
        for (c, m) in row.iter_mut().enumerate() {
            *m = grid.module_score(r, c) >= 0.0;
        }
    }
    QrMatrix::from_modules(modules)
}
