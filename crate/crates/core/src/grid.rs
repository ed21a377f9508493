//! Structured, cell-centred grids and the fields that live on them.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Uniform box grid. Cells are indexed `(i, j, k)` with `i` fastest; the
/// bottom face of the box is the ground plane `z = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid3 {
    /// Lower corner `(x0, y0, z0)`; `z0` must be zero.
    pub origin: [f64; 3],
    /// Box extents `(Hx, Hy, Hz)`.
    pub extent: [f64; 3],
    /// Cell counts `(Nx, Ny, Nz)`.
    pub cells: [usize; 3],
}

impl Grid3 {
    pub fn new(origin: [f64; 3], extent: [f64; 3], cells: [usize; 3]) -> Result<Self> {
        let g = Grid3 { origin, extent, cells };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if self.origin.iter().chain(self.extent.iter()).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("grid geometry".into()));
        }
        if self.extent.iter().any(|&h| h <= 0.0) {
            return Err(invalid(format!("grid extents must be positive: {:?}", self.extent)));
        }
        if self.cells.contains(&0) {
            return Err(invalid(format!("grid cell counts must be positive: {:?}", self.cells)));
        }
        if self.origin[2] != 0.0 {
            return Err(invalid("grid must start at the ground plane (origin z = 0)"));
        }
        if self.len() > 1 << 28 {
            return Err(invalid(format!("grid too large: {:?}", self.cells)));
        }
        Ok(())
    }

    pub fn nx(&self) -> usize {
        self.cells[0]
    }
    pub fn ny(&self) -> usize {
        self.cells[1]
    }
    pub fn nz(&self) -> usize {
        self.cells[2]
    }

    pub fn spacing(&self) -> [f64; 3] {
        [
            self.extent[0] / self.cells[0] as f64,
            self.extent[1] / self.cells[1] as f64,
            self.extent[2] / self.cells[2] as f64,
        ]
    }

    pub fn cell_volume(&self) -> f64 {
        let [dx, dy, dz] = self.spacing();
        dx * dy * dz
    }

    pub fn cell_area(&self) -> f64 {
        let [dx, dy, _] = self.spacing();
        dx * dy
    }

    pub fn len(&self) -> usize {
        self.cells.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        i + self.cells[0] * (j + self.cells[1] * k)
    }

    /// Centre coordinate of cell `n` along `axis`.
    #[inline]
    pub fn center(&self, axis: usize, n: usize) -> f64 {
        self.origin[axis] + (n as f64 + 0.5) * self.extent[axis] / self.cells[axis] as f64
    }

    /// Coordinate of face `n` (0..=N) along `axis`.
    #[inline]
    pub fn face(&self, axis: usize, n: usize) -> f64 {
        self.origin[axis] + n as f64 * self.extent[axis] / self.cells[axis] as f64
    }

    pub fn upper(&self, axis: usize) -> f64 {
        self.origin[axis] + self.extent[axis]
    }

    pub fn contains(&self, p: [f64; 3]) -> bool {
        (0..3).all(|a| p[a] > self.origin[a] && p[a] < self.upper(a))
    }

    pub fn contains_xy(&self, x: f64, y: f64) -> bool {
        x >= self.origin[0] && x <= self.upper(0) && y >= self.origin[1] && y <= self.upper(1)
    }

    /// Same horizontal footprint (origin, extents and counts in x and y).
    pub fn same_footprint(&self, other: &Grid3) -> bool {
        self.origin[..2] == other.origin[..2]
            && self.extent[..2] == other.extent[..2]
            && self.cells[..2] == other.cells[..2]
    }
}

/// Cell-averaged concentration, kg/m^3.
#[derive(Debug, Clone, PartialEq)]
pub struct Field3 {
    pub grid: Grid3,
    pub values: Vec<f64>,
}

impl Field3 {
    pub fn zeros(grid: Grid3) -> Self {
        Field3 { grid, values: vec![0.0; grid.len()] }
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        self.values[self.grid.index(i, j, k)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, k: usize, v: f64) {
        let n = self.grid.index(i, j, k);
        self.values[n] = v;
    }

    /// Total airborne mass, kg.
    pub fn mass(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.grid.cell_volume()
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// `(i, j, k)` of the largest value.
    pub fn argmax(&self) -> (usize, usize, usize) {
        let mut best = 0;
        for (n, v) in self.values.iter().enumerate() {
            if *v > self.values[best] {
                best = n;
            }
        }
        let nx = self.grid.nx();
        let ny = self.grid.ny();
        (best % nx, (best / nx) % ny, best / (nx * ny))
    }
}

/// Accumulated ground deposition, kg/m^2, on the `Nx x Ny` footprint.
#[derive(Debug, Clone, PartialEq)]
pub struct DepositionField {
    pub grid: Grid3,
    pub values: Vec<f64>,
}

impl DepositionField {
    pub fn zeros(grid: Grid3) -> Self {
        DepositionField { grid, values: vec![0.0; grid.nx() * grid.ny()] }
    }

    pub fn from_values(grid: Grid3, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.nx() * grid.ny() {
            return Err(Error::GridMismatch(format!(
                "expected {} ground values, got {}",
                grid.nx() * grid.ny(),
                values.len()
            )));
        }
        Ok(DepositionField { grid, values })
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i + self.grid.nx() * j]
    }

    /// Total deposited mass, kg.
    pub fn mass(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.grid.cell_area()
    }

    /// Cell-centre coordinates of ground cell `n` in flattened order.
    pub fn cell_xy(&self, n: usize) -> (f64, f64) {
        let nx = self.grid.nx();
        (self.grid.center(0, n % nx), self.grid.center(1, n / nx))
    }

    pub fn scaled(&self, factor: f64) -> DepositionField {
        DepositionField { grid: self.grid, values: self.values.iter().map(|v| v * factor).collect() }
    }

    /// Area (m^2) of ground cells whose value exceeds `threshold`.
    pub fn area_above(&self, threshold: f64) -> f64 {
        self.values.iter().filter(|&&v| v > threshold).count() as f64 * self.grid.cell_area()
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spacing_and_index() {
        let g = Grid3::new([0.0, -5.0, 0.0], [10.0, 10.0, 10.0], [4, 5, 2]).unwrap();
        assert_eq!(g.spacing(), [2.5, 2.0, 5.0]);
        assert_eq!(g.index(3, 4, 1), 3 + 4 * (4 + 5));
        assert_eq!(g.center(1, 0), -4.0);
        assert_eq!(g.face(0, 4), 10.0);
        assert!(g.contains([1.0, 0.0, 1.0]));
        assert!(!g.contains([1.0, 0.0, 0.0]));
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(Grid3::new([0.0, 0.0, 1.0], [1.0, 1.0, 1.0], [2, 2, 2]).is_err());
        assert!(Grid3::new([0.0, 0.0, 0.0], [1.0, -1.0, 1.0], [2, 2, 2]).is_err());
        assert!(Grid3::new([0.0, 0.0, 0.0], [1.0, 1.0, 1.0], [2, 0, 2]).is_err());
    }

    #[test]
    fn argmax_roundtrip() {
        let g = Grid3::new([0.0; 3], [1.0; 3], [3, 4, 5]).unwrap();
        let mut f = Field3::zeros(g);
        f.set(2, 1, 3, 7.0);
        assert_eq!(f.argmax(), (2, 1, 3));
    }
}
