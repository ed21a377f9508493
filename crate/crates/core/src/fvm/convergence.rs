//! Grid-refinement study on a cube with height-dependent coefficients.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::diffusion::RobinSpec;
use super::solver::{solve_forward, Coefficients, StepControl, TransportModel};
use super::source::{box_delta_weights, EmissionRate, PreparedSource, SmoothBump};
use crate::error::{invalid, Result};
use crate::grid::{Field3, Grid3};

pub const TEST_ORIGIN: [f64; 3] = [0.0, -5.0, 0.0];
pub const TEST_EXTENT: [f64; 3] = [10.0, 10.0, 10.0];
pub const TEST_SOURCE: [f64; 3] = [3.0, 0.0, 3.0];
pub const TEST_END_TIME: f64 = 8.0;

/// Vertical diffusivity of the test problem, `z sqrt(16) / (40 sqrt(1 + 1.5 z))`.
pub fn test_vertical_diffusivity(z: f64) -> f64 {
    4.0 * z / (40.0 * (1.0 + 1.5 * z).sqrt())
}

/// `u = ((z/10)^0.3, 0, 0)`, `S = diag(0.25, 0.25, s_z(z))`, zero-flux ground.
#[derive(Debug, Clone, Copy, Default)]
pub struct TestProblem;

impl TransportModel for TestProblem {
    fn coefficients(&self, grid: &Grid3, _t: f64) -> Result<Coefficients> {
        let nz = grid.nz();
        let zc: Vec<f64> = (0..nz).map(|k| grid.center(2, k)).collect();
        let centres: Vec<f64> = zc.iter().map(|&z| test_vertical_diffusivity(z)).collect();
        let mut sz_faces = Vec::with_capacity(nz + 1);
        sz_faces.push(test_vertical_diffusivity(0.0));
        for k in 1..nz {
            sz_faces.push(0.5 * (centres[k - 1] + centres[k]));
        }
        sz_faces.push(centres[nz - 1]);
        Ok(Coefficients {
            ux: zc.iter().map(|z| (z / 10.0).powf(0.3)).collect(),
            uy: vec![0.0; nz],
            u_set: 0.0,
            sx: vec![0.25; nz],
            sy: vec![0.25; nz],
            sz_faces,
            ground: RobinSpec::NEUMANN,
            u_dep: 0.0,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SourceKind {
    Smooth,
    Point,
}

impl std::str::FromStr for SourceKind {
    type Err = crate::error::Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "smooth" => Ok(SourceKind::Smooth),
            "point" => Ok(SourceKind::Point),
            other => Err(invalid(format!("unknown source kind {other:?} (expected smooth or point)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Region {
    Entire,
    AwayFromSource,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceOptions {
    pub sizes: Vec<usize>,
    pub source: SourceKind,
    /// Cells whose centres lie within this distance of the source are left
    /// out of the away-from-source norms. Defaults to three coarse cells.
    pub exclusion_radius: Option<f64>,
    pub courant: f64,
}

impl ConvergenceOptions {
    pub fn new(sizes: Vec<usize>, source: SourceKind) -> Self {
        ConvergenceOptions { sizes, source, exclusion_radius: None, courant: 0.9 }
    }

    fn radius(&self) -> f64 {
        self.exclusion_radius.unwrap_or_else(|| 3.0 * TEST_EXTENT[0] / self.sizes[0] as f64)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub n: usize,
    pub region: Region,
    /// `log2(|C_N - C_2N| / |C_2N - C_4N|)` in the l1 and l2 norms; `None`
    /// when a difference vanishes.
    pub e1: Option<f64>,
    pub e2: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceTable {
    pub source: SourceKind,
    pub exclusion_radius: f64,
    pub rows: Vec<ConvergenceRow>,
}

impl ConvergenceTable {
    pub fn rate(&self, n: usize, region: Region) -> Option<&ConvergenceRow> {
        self.rows.iter().find(|r| r.n == n && r.region == region)
    }
}

pub fn test_grid(n: usize) -> Result<Grid3> {
    Grid3::new(TEST_ORIGIN, TEST_EXTENT, [n, n, n])
}

pub fn test_source(grid: &Grid3, kind: SourceKind) -> Result<PreparedSource> {
    match kind {
        SourceKind::Smooth => SmoothBump { center: TEST_SOURCE, half_width: [1.0; 3], rate: 1.0 }.prepare(grid),
        SourceKind::Point => {
            Ok(PreparedSource { cells: box_delta_weights(grid, TEST_SOURCE)?, rate: EmissionRate::Constant(1.0) })
        }
    }
}

/// Runs the test problem on an `n^3` grid up to the end time.
pub fn solve_test_problem(n: usize, kind: SourceKind, courant: f64) -> Result<Field3> {
    let grid = test_grid(n)?;
    let src = test_source(&grid, kind)?;
    let ctrl = StepControl { courant, dt_min: 0.0, dt_max: f64::MAX };
    Ok(solve_forward(&grid, &TestProblem, &[src], TEST_END_TIME, &ctrl)?.field)
}

/// Averages 2x2x2 blocks of a fine field onto the grid with half the cells.
pub fn restrict(fine: &Field3) -> Result<Field3> {
    let g = fine.grid;
    if g.cells.iter().any(|n| n % 2 != 0) {
        return Err(invalid(format!("cannot coarsen grid with cells {:?}", g.cells)));
    }
    let coarse = Grid3::new(g.origin, g.extent, [g.nx() / 2, g.ny() / 2, g.nz() / 2])?;
    let mut out = Field3::zeros(coarse);
    for k in 0..coarse.nz() {
        for j in 0..coarse.ny() {
            for i in 0..coarse.nx() {
                let mut s = 0.0;
                for (a, b, c) in (0..8).map(|m| (m & 1, (m >> 1) & 1, m >> 2)) {
                    s += fine.get(2 * i + a, 2 * j + b, 2 * k + c);
                }
                out.set(i, j, k, s / 8.0);
            }
        }
    }
    Ok(out)
}

/// Normalized l1 and l2 norms of `a - b` over cells accepted by `keep`.
fn diff_norms(a: &Field3, b: &Field3, keep: impl Fn([f64; 3]) -> bool) -> (f64, f64) {
    let g = a.grid;
    let (mut s1, mut s2, mut count) = (0.0, 0.0, 0usize);
    for k in 0..g.nz() {
        for j in 0..g.ny() {
            for i in 0..g.nx() {
                if !keep([g.center(0, i), g.center(1, j), g.center(2, k)]) {
                    continue;
                }
                let d = (a.get(i, j, k) - b.get(i, j, k)).abs();
                s1 += d;
                s2 += d * d;
                count += 1;
            }
        }
    }
    if count == 0 {
        return (0.0, 0.0);
    }
    (s1 / count as f64, (s2 / count as f64).sqrt())
}

fn log_ratio(a: f64, b: f64) -> Option<f64> {
    (a > 0.0 && b > 0.0).then(|| (a / b).log2())
}

/// Rates from solutions on a sequence of grids refined by two.
pub fn convergence_rates(solutions: &[Field3], region: Region, radius: f64) -> Result<Vec<ConvergenceRow>> {
    if solutions.len() < 3 {
        return Err(crate::error::Error::InsufficientData("need solutions on at least three grids".into()));
    }
    let keep = |p: [f64; 3]| match region {
        Region::Entire => true,
        Region::AwayFromSource => {
            let d2: f64 = (0..3).map(|a| (p[a] - TEST_SOURCE[a]).powi(2)).sum();
            d2 > radius * radius
        }
    };
    let mut diffs = Vec::with_capacity(solutions.len() - 1);
    for w in solutions.windows(2) {
        let r = restrict(&w[1])?;
        if r.grid != w[0].grid {
            return Err(crate::error::Error::GridMismatch("successive grids must differ by a factor of two".into()));
        }
        diffs.push(diff_norms(&w[0], &r, keep));
    }
    Ok(diffs
        .windows(2)
        .zip(solutions)
        .map(|(d, s)| ConvergenceRow {
            n: s.grid.nx(),
            region,
            e1: log_ratio(d[0].0, d[1].0),
            e2: log_ratio(d[0].1, d[1].1),
        })
        .collect())
}

pub fn convergence_study(opts: &ConvergenceOptions) -> Result<ConvergenceTable> {
    if opts.sizes.len() < 3 {
        return Err(crate::error::Error::InsufficientData("need at least three grid sizes".into()));
    }
    if opts.sizes[0] == 0 || opts.sizes.windows(2).any(|w| w[1] != 2 * w[0]) {
        return Err(invalid(format!("grid sizes must double at each level: {:?}", opts.sizes)));
    }
    let solutions: Vec<Field3> = opts
        .sizes
        .par_iter()
        .map(|&n| solve_test_problem(n, opts.source, opts.courant))
        .collect::<Result<_>>()?;
    let radius = opts.radius();
    let mut rows = convergence_rates(&solutions, Region::Entire, radius)?;
    rows.extend(convergence_rates(&solutions, Region::AwayFromSource, radius)?);
    Ok(ConvergenceTable { source: opts.source, exclusion_radius: radius, rows })
}
