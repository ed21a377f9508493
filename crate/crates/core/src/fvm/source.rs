//! Point sources regularized as box deltas, and their injection into a field.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::grid::{Field3, Grid3};

/// Emission rate in kg/s, constant or tabulated against time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum EmissionRate {
    Constant(f64),
    /// `(time s, rate kg/s)` pairs, linearly interpolated and held constant
    /// beyond either end.
    Table(Vec<(f64, f64)>),
}

impl EmissionRate {
    pub fn at(&self, t: f64) -> f64 {
        match self {
            EmissionRate::Constant(q) => *q,
            EmissionRate::Table(tab) => {
                let hi = tab.partition_point(|&(tt, _)| tt < t);
                if hi == 0 {
                    tab[0].1
                } else if hi == tab.len() {
                    tab[tab.len() - 1].1
                } else {
                    let (t0, q0) = tab[hi - 1];
                    let (t1, q1) = tab[hi];
                    q0 + (q1 - q0) * (t - t0) / (t1 - t0)
                }
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            EmissionRate::Constant(q) if *q >= 0.0 && q.is_finite() => Ok(()),
            EmissionRate::Constant(q) => Err(invalid(format!("emission rate must be finite and >= 0, got {q}"))),
            EmissionRate::Table(tab) => {
                if tab.is_empty() {
                    return Err(invalid("emission table is empty"));
                }
                if tab.windows(2).any(|w| !(w[1].0 > w[0].0)) {
                    return Err(invalid("emission table times must be strictly increasing"));
                }
                if tab.iter().any(|&(t, q)| !t.is_finite() || !(q >= 0.0) || !q.is_finite()) {
                    return Err(invalid("emission table entries must be finite with rate >= 0"));
                }
                Ok(())
            }
        }
    }

    pub fn is_constant(&self) -> bool {
        matches!(self, EmissionRate::Constant(_))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointSource {
    #[serde(default)]
    pub name: String,
    /// `(x, y, z)` in m.
    pub position: [f64; 3],
    pub rate: EmissionRate,
}

impl PointSource {
    pub fn new(name: impl Into<String>, position: [f64; 3], rate: f64) -> Self {
        PointSource { name: name.into(), position, rate: EmissionRate::Constant(rate) }
    }

    pub fn with_rate(&self, rate: f64) -> Self {
        PointSource { rate: EmissionRate::Constant(rate), ..self.clone() }
    }
}

/// A source term reduced to per-cell mass fractions that sum to one.
#[derive(Debug, Clone, PartialEq)]
pub struct PreparedSource {
    pub cells: Vec<(usize, f64)>,
    pub rate: EmissionRate,
}

/// 1D overlap of `[lo, hi]` with the cells of one axis, as `(cell, length)`.
fn axis_overlaps(grid: &Grid3, axis: usize, lo: f64, hi: f64) -> Vec<(usize, f64)> {
    let d = grid.spacing()[axis];
    let n = grid.cells[axis];
    let o = grid.origin[axis];
    let first = (((lo - o) / d).floor().max(0.0) as usize).min(n - 1);
    let last = (((hi - o) / d).ceil().max(1.0) as usize).min(n);
    (first..last)
        .filter_map(|c| {
            let a = grid.face(axis, c).max(lo);
            let b = grid.face(axis, c + 1).min(hi);
            (b > a).then_some((c, b - a))
        })
        .collect()
}

/// Overlap fractions of the one-cell box delta centred at `p`.
///
/// If the support pokes out of the box, the fractions are rescaled so the
/// whole emission still lands inside.
pub fn box_delta_weights(grid: &Grid3, p: [f64; 3]) -> Result<Vec<(usize, f64)>> {
    if !p.iter().all(|v| v.is_finite()) {
        return Err(Error::NonFinite("source position".into()));
    }
    if !grid.contains(p) {
        return Err(Error::OutsideGrid(format!("source at {p:?} is outside the grid box")));
    }
    let d = grid.spacing();
    let per_axis: Vec<Vec<(usize, f64)>> =
        (0..3).map(|a| axis_overlaps(grid, a, p[a] - 0.5 * d[a], p[a] + 0.5 * d[a])).collect();
    let mut cells = Vec::with_capacity(8);
    for &(k, lz) in &per_axis[2] {
        for &(j, ly) in &per_axis[1] {
            for &(i, lx) in &per_axis[0] {
                cells.push((grid.index(i, j, k), lx * ly * lz));
            }
        }
    }
    normalize(cells)
}

fn normalize(mut cells: Vec<(usize, f64)>) -> Result<Vec<(usize, f64)>> {
    let total: f64 = cells.iter().map(|c| c.1).sum();
    if !(total > 0.0) {
        return Err(Error::OutsideGrid("source support does not intersect the grid".into()));
    }
    for c in &mut cells {
        c.1 /= total;
    }
    Ok(cells)
}

pub fn prepare_sources(grid: &Grid3, sources: &[PointSource]) -> Result<Vec<PreparedSource>> {
    sources
        .iter()
        .map(|s| {
            s.rate.validate()?;
            Ok(PreparedSource { cells: box_delta_weights(grid, s.position)?, rate: s.rate.clone() })
        })
        .collect()
}

/// Raised-cosine bump `prod_a (1 + cos(pi (x_a - c_a) / h_a)) / (2 h_a)` with
/// half-widths `h`, integrated exactly over each cell. Total rate is `rate`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmoothBump {
    pub center: [f64; 3],
    pub half_width: [f64; 3],
    pub rate: f64,
}

impl SmoothBump {
    fn antiderivative(x: f64, c: f64, h: f64) -> f64 {
        let s = ((x - c) / h).clamp(-1.0, 1.0);
        (s + (std::f64::consts::PI * s).sin() / std::f64::consts::PI) / 2.0
    }

    pub fn prepare(&self, grid: &Grid3) -> Result<PreparedSource> {
        let mut per_axis = Vec::with_capacity(3);
        for a in 0..3 {
            let (c, h) = (self.center[a], self.half_width[a]);
            if !(h > 0.0) {
                return Err(invalid("bump half-width must be positive"));
            }
            let w: Vec<(usize, f64)> = (0..grid.cells[a])
                .filter_map(|n| {
                    let v = Self::antiderivative(grid.face(a, n + 1), c, h) - Self::antiderivative(grid.face(a, n), c, h);
                    (v > 0.0).then_some((n, v))
                })
                .collect();
            per_axis.push(w);
        }
        let mut cells = Vec::new();
        for &(k, wz) in &per_axis[2] {
            for &(j, wy) in &per_axis[1] {
                for &(i, wx) in &per_axis[0] {
                    cells.push((grid.index(i, j, k), wx * wy * wz));
                }
            }
        }
        Ok(PreparedSource { cells: normalize(cells)?, rate: EmissionRate::Constant(self.rate) })
    }
}

/// Adds `dt q_s f_cell / V_cell` to every cell touched by each source,
/// evaluating the rates at `t`. Returns the injected mass.
pub fn inject_sources(field: &mut Field3, sources: &[PreparedSource], t: f64, dt: f64) -> f64 {
    let vol = field.grid.cell_volume();
    let mut injected = 0.0;
    for s in sources {
        let q = s.rate.at(t);
        if q == 0.0 {
            continue;
        }
        for &(idx, f) in &s.cells {
            field.values[idx] += dt * q * f / vol;
        }
        injected += dt * q;
    }
    injected
}
