//! Linear source-to-deposition maps and Bayesian estimation of emission rates.

mod gibbs;

pub use gibbs::{
    conditional_moments, effective_sample_size, gibbs_sample, posterior_summary, push_forward, synthesize_data,
    GibbsOptions, PosteriorSamples, PosteriorSummary, PriorSpec, SourceSummary,
};

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::fvm::{prepare_sources, solve_forward, MassAudit, PointSource, StepControl, TransportModel};
use crate::grid::{DepositionField, Grid3};

/// Default collector aperture area, m^2.
pub const DEFAULT_JAR_AREA: f64 = 0.0206;

/// Ground deposition per unit emission rate, one column per source.
#[derive(Debug, Clone, PartialEq)]
pub struct ForwardMap {
    pub grid: Grid3,
    pub sources: Vec<PointSource>,
    /// `(Nx Ny) x Nq`, kg/m^2 per kg/s.
    pub matrix: DMatrix<f64>,
    /// Simulated duration, s.
    pub duration: f64,
    /// Hash of the inputs that produced the map.
    pub input_hash: String,
}

impl ForwardMap {
    pub fn n_sources(&self) -> usize {
        self.matrix.ncols()
    }

    pub fn column(&self, j: usize) -> DepositionField {
        DepositionField { grid: self.grid, values: self.matrix.column(j).iter().copied().collect() }
    }

    /// Deposition field `F q`.
    pub fn apply(&self, q: &[f64]) -> Result<DepositionField> {
        if q.len() != self.n_sources() {
            return Err(invalid(format!("expected {} rates, got {}", self.n_sources(), q.len())));
        }
        let w = &self.matrix * DVector::from_column_slice(q);
        Ok(DepositionField { grid: self.grid, values: w.iter().copied().collect() })
    }

    pub fn validate(&self) -> Result<()> {
        if self.matrix.nrows() != self.grid.nx() * self.grid.ny() {
            return Err(Error::GridMismatch("forward map rows do not match the grid footprint".into()));
        }
        if self.matrix.ncols() != self.sources.len() {
            return Err(invalid("forward map columns do not match the source list"));
        }
        if self.matrix.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(invalid("forward map entries must be finite and >= 0"));
        }
        Ok(())
    }
}

/// Result of the unit-rate solves behind a forward map.
#[derive(Debug, Clone)]
pub struct ForwardMapRun {
    pub map: ForwardMap,
    pub audits: Vec<MassAudit>,
    pub solves: usize,
}

/// One unit-rate solve per source, run in parallel.
pub fn build_forward_map(
    grid: &Grid3,
    model: &dyn TransportModel,
    sources: &[PointSource],
    t_end: f64,
    ctrl: &StepControl,
    input_hash: &str,
) -> Result<ForwardMapRun> {
    if sources.is_empty() {
        return Err(invalid("forward map needs at least one source"));
    }
    let unit: Vec<PointSource> = sources.iter().map(|s| s.with_rate(1.0)).collect();
    let prepared = prepare_sources(grid, &unit)?;
    let runs: Vec<_> = prepared
        .par_iter()
        .enumerate()
        .map(|(j, p)| {
            log::info!("unit-rate solve for source {} ({})", j + 1, unit[j].name);
            solve_forward(grid, model, std::slice::from_ref(p), t_end, ctrl)
        })
        .collect::<Result<_>>()?;
    let nxy = grid.nx() * grid.ny();
    let mut matrix = DMatrix::zeros(nxy, sources.len());
    let mut audits = Vec::with_capacity(runs.len());
    for (j, r) in runs.into_iter().enumerate() {
        for (n, v) in r.deposition.values.iter().enumerate() {
            matrix[(n, j)] = *v;
        }
        audits.push(r.audit);
    }
    let solves = audits.len();
    Ok(ForwardMapRun {
        map: ForwardMap { grid: *grid, sources: sources.to_vec(), matrix, duration: t_end, input_hash: input_hash.to_string() },
        audits,
        solves,
    })
}

/// A dust-fall collector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Receptor {
    pub id: String,
    pub x: f64,
    pub y: f64,
    #[serde(default = "default_area")]
    pub area: f64,
}

fn default_area() -> f64 {
    DEFAULT_JAR_AREA
}

/// Collected mass per unit emission rate, `Nr x Nq`, kg per kg/s.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationMap {
    pub receptors: Vec<Receptor>,
    pub matrix: DMatrix<f64>,
}

impl ObservationMap {
    pub fn predict(&self, q: &[f64]) -> Vec<f64> {
        (&self.matrix * DVector::from_column_slice(q)).iter().copied().collect()
    }
}

/// Bilinear interpolation weights of `(x, y)` between ground-cell centres,
/// as `(cell index, weight)`. Points between the outer centres and the box
/// edge take the nearest centre values.
pub fn bilinear_weights(grid: &Grid3, x: f64, y: f64) -> Result<Vec<(usize, f64)>> {
    if !(x.is_finite() && y.is_finite()) || !grid.contains_xy(x, y) {
        return Err(Error::OutsideGrid(format!("receptor at ({x}, {y}) is outside the grid footprint")));
    }
    let axis = |a: usize, v: f64| -> (usize, usize, f64) {
        let n = grid.cells[a];
        let s = ((v - grid.origin[a]) / grid.spacing()[a] - 0.5).clamp(0.0, (n - 1) as f64);
        let i0 = (s.floor() as usize).min(n.saturating_sub(2));
        let i1 = (i0 + 1).min(n - 1);
        (i0, i1, s - i0 as f64)
    };
    let (i0, i1, tx) = axis(0, x);
    let (j0, j1, ty) = axis(1, y);
    let nx = grid.nx();
    let mut w = vec![
        (i0 + nx * j0, (1.0 - tx) * (1.0 - ty)),
        (i1 + nx * j0, tx * (1.0 - ty)),
        (i0 + nx * j1, (1.0 - tx) * ty),
        (i1 + nx * j1, tx * ty),
    ];
    w.retain(|c| c.1 != 0.0);
    Ok(w)
}

/// `G_kj = A_k * bilinear(F_j)(x_k, y_k)`.
pub fn observe(map: &ForwardMap, receptors: &[Receptor]) -> Result<ObservationMap> {
    let mut g = DMatrix::zeros(receptors.len(), map.n_sources());
    for (k, r) in receptors.iter().enumerate() {
        if !(r.area > 0.0) {
            return Err(invalid(format!("receptor {} needs a positive aperture area", r.id)));
        }
        for (idx, w) in bilinear_weights(&map.grid, r.x, r.y)? {
            for j in 0..map.n_sources() {
                g[(k, j)] += r.area * w * map.matrix[(idx, j)];
            }
        }
    }
    Ok(ObservationMap { receptors: receptors.to_vec(), matrix: g })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn map_from(grid: Grid3, cols: Vec<Vec<f64>>) -> ForwardMap {
        let nq = cols.len();
        let matrix = DMatrix::from_fn(grid.nx() * grid.ny(), nq, |r, c| cols[c][r]);
        let sources = (0..nq).map(|j| PointSource::new(format!("Q{j}"), [0.5, 0.5, 0.5], 1.0)).collect();
        ForwardMap { grid, sources, matrix, duration: 1.0, input_hash: String::new() }
    }

    fn receptor(x: f64, y: f64) -> Receptor {
        Receptor { id: "R".into(), x, y, area: 2.0 }
    }

    #[test]
    fn receptor_on_centre_picks_cell() {
        let g = Grid3::new([0.0, 0.0, 0.0], [3.0, 3.0, 1.0], [3, 3, 1]).unwrap();
        let vals: Vec<f64> = (0..9).map(|v| v as f64).collect();
        let m = map_from(g, vec![vals]);
        let obs = observe(&m, &[receptor(1.5, 2.5)]).unwrap();
        assert_eq!(obs.matrix[(0, 0)], 2.0 * 7.0);
    }

    #[test]
    fn receptor_between_four_cells_averages() {
        let g = Grid3::new([0.0, 0.0, 0.0], [2.0, 2.0, 1.0], [2, 2, 1]).unwrap();
        let m = map_from(g, vec![vec![0.0, 0.0, 0.0, 4.0], vec![3.0; 4]]);
        let obs = observe(&m, &[receptor(1.0, 1.0)]).unwrap();
        assert!((obs.matrix[(0, 0)] - 2.0).abs() < 1e-15);
        assert!((obs.matrix[(0, 1)] - 6.0).abs() < 1e-15);
    }

    #[test]
    fn receptor_outside_rejected() {
        let g = Grid3::new([0.0, 0.0, 0.0], [2.0, 2.0, 1.0], [2, 2, 1]).unwrap();
        let m = map_from(g, vec![vec![1.0; 4]]);
        assert!(matches!(observe(&m, &[receptor(2.5, 1.0)]), Err(Error::OutsideGrid(_))));
    }

    #[test]
    fn edge_region_clamps_to_nearest_centre() {
        let g = Grid3::new([0.0, 0.0, 0.0], [2.0, 2.0, 1.0], [2, 2, 1]).unwrap();
        let m = map_from(g, vec![vec![1.0, 2.0, 3.0, 4.0]]);
        let obs = observe(&m, &[receptor(0.1, 0.1), receptor(2.0, 2.0)]).unwrap();
        assert_eq!(obs.matrix[(0, 0)], 2.0);
        assert_eq!(obs.matrix[(1, 0)], 8.0);
    }

    #[test]
    fn single_cell_grid_interpolates() {
        let g = Grid3::new([0.0, 0.0, 0.0], [2.0, 2.0, 1.0], [1, 1, 1]).unwrap();
        let m = map_from(g, vec![vec![5.0]]);
        assert_eq!(observe(&m, &[receptor(0.3, 1.9)]).unwrap().matrix[(0, 0)], 10.0);
    }

    #[test]
    fn linearity_of_observation() {
        let g = Grid3::new([0.0, 0.0, 0.0], [3.0, 3.0, 1.0], [3, 3, 1]).unwrap();
        let m = map_from(g, vec![(0..9).map(|v| v as f64).collect(), (0..9).map(|v| (v * v) as f64).collect()]);
        let obs = observe(&m, &[receptor(0.7, 1.3), receptor(2.2, 0.9)]).unwrap();
        let (a, b) = (1.5, -0.25);
        let lhs = obs.predict(&[a, b]);
        let p1 = obs.predict(&[1.0, 0.0]);
        let p2 = obs.predict(&[0.0, 1.0]);
        for k in 0..2 {
            assert!((lhs[k] - (a * p1[k] + b * p2[k])).abs() < 1e-12);
        }
        let w = m.apply(&[2.0, 0.0]).unwrap();
        assert_eq!(w.values, m.column(0).scaled(2.0).values);
    }
}
