//! Steady Gaussian plume with settling and deposition, stepped through
//! piecewise-constant wind intervals.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::fvm::PointSource;
use crate::grid::{DepositionField, Grid3};
use crate::inversion::{bilinear_weights, Receptor};
use crate::physics::{friction_velocity, lateral_diffusivity, vertical_diffusivity, wind_profile, ParticulateParams, SiteParams};
use crate::wind::WindSeries;

/// `exp(x^2) erfc(x)` without overflow for large positive `x`.
pub fn erfcx(x: f64) -> f64 {
    if x < 10.0 {
        (x * x).exp() * statrs::function::erf::erfc(x)
    } else {
        // asymptotic series
        let inv2 = 1.0 / (2.0 * x * x);
        let series = 1.0 - inv2 + 3.0 * inv2 * inv2 - 15.0 * inv2.powi(3) + 105.0 * inv2.powi(4);
        series / (x * std::f64::consts::PI.sqrt())
    }
}

/// Dispersion inputs frozen over one interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlumeState {
    /// Wind speed at the release height, m/s.
    pub u: f64,
    /// Lateral and vertical eddy diffusivities at the release height, m^2/s.
    pub s_h: f64,
    pub s_z: f64,
    pub u_set: f64,
    pub u_dep: f64,
}

/// Ground-level concentration per unit emission rate at `along` m downwind
/// and `cross` m crosswind of a release at height `h`.
pub fn ground_concentration(st: &PlumeState, h: f64, along: f64, cross: f64) -> f64 {
    if !(along > 0.0) || !(st.u > 0.0) || !(st.s_z > 0.0) || !(st.s_h > 0.0) {
        return 0.0;
    }
    let t = along / st.u;
    let sy = (2.0 * st.s_h * t).sqrt();
    let sz = (2.0 * st.s_z * t).sqrt();
    let k = st.s_z;
    let w0 = st.u_set;
    let w1 = st.u_dep - 0.5 * st.u_set;
    let pre = 1.0 / (2.0 * std::f64::consts::PI * st.u * sy * sz);
    let lateral = (-cross * cross / (2.0 * sy * sy)).exp();
    let settle = (w0 * h / (2.0 * k) - w0 * w0 * sz * sz / (8.0 * k * k)).exp();
    let refl = (-h * h / (2.0 * sz * sz)).exp();
    let b = w1 * sz / (std::f64::consts::SQRT_2 * k) + h / (std::f64::consts::SQRT_2 * sz);
    let loss = 2.0 * (2.0 * std::f64::consts::PI).sqrt() * w1 * sz / k * erfcx(b) * refl;
    (pre * lateral * settle * (2.0 * refl - loss)).max(0.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PlumeOptions {
    /// Length of each quasi-steady interval, s.
    pub interval: f64,
    /// Intervals with a reference speed below this are skipped, m/s.
    pub calm_speed: f64,
    pub max_gap: f64,
}

impl Default for PlumeOptions {
    fn default() -> Self {
        PlumeOptions { interval: 600.0, calm_speed: 0.5, max_gap: 3.0 * 3600.0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlumeRun {
    pub deposition: DepositionField,
    pub intervals: usize,
    pub skipped_intervals: usize,
    /// Emitted mass during skipped intervals, kg.
    pub skipped_mass: f64,
}

/// Deposition `sum u_dep c_ground dt` over the intervals covering `[0, t_end]`,
/// evaluated at the ground-cell centres of `grid`. The wind time `start`
/// corresponds to `t = 0`.
#[allow(clippy::too_many_arguments)]
pub fn plume_deposition(
    sources: &[PointSource],
    grid: &Grid3,
    wind: &WindSeries,
    start: f64,
    site: &SiteParams,
    part: &ParticulateParams,
    t_end: f64,
    opts: &PlumeOptions,
) -> Result<PlumeRun> {
    site.validate()?;
    part.validate()?;
    if !(opts.interval > 0.0) {
        return Err(invalid("plume interval must be positive"));
    }
    if !(t_end >= 0.0) || !t_end.is_finite() {
        return Err(invalid("end time must be finite and >= 0"));
    }
    for s in sources {
        s.rate.validate()?;
        if !(s.position[2] > 0.0) || !grid.contains_xy(s.position[0], s.position[1]) {
            return Err(Error::OutsideGrid(format!("plume source {} must lie above the grid footprint", s.name)));
        }
    }
    let u_set = part.settling()?;
    let mut dep = DepositionField::zeros(*grid);
    let centres: Vec<(f64, f64)> = (0..dep.values.len()).map(|n| dep.cell_xy(n)).collect();
    let (mut intervals, mut skipped, mut skipped_mass) = (0, 0, 0.0);
    let mut t = 0.0;
    while t < t_end {
        let dt = opts.interval.min(t_end - t);
        let (wx, wy) = wind.components_at(start + t, opts.max_gap)?;
        let ur = wx.hypot(wy);
        intervals += 1;
        if ur < opts.calm_speed || ur == 0.0 {
            skipped += 1;
            skipped_mass += sources.iter().map(|s| s.rate.at(t) * dt).sum::<f64>();
            t += dt;
            continue;
        }
        let (ex, ey) = (wx / ur, wy / ur);
        let u_star = friction_velocity(ur, site)?;
        let s_h = lateral_diffusivity(u_star, site)?;
        for s in sources {
            let q = s.rate.at(t);
            if q == 0.0 {
                continue;
            }
            let h = s.position[2];
            let st = PlumeState {
                u: wind_profile(ur, h, site)?,
                s_h,
                s_z: vertical_diffusivity(h, u_star, site)?,
                u_set,
                u_dep: part.u_dep,
            };
            let scale = part.u_dep * q * dt;
            for (w, &(x, y)) in dep.values.iter_mut().zip(&centres) {
                let (dx, dy) = (x - s.position[0], y - s.position[1]);
                let along = dx * ex + dy * ey;
                if along <= 0.0 {
                    continue;
                }
                *w += scale * ground_concentration(&st, h, along, -dx * ey + dy * ex);
            }
        }
        t += dt;
    }
    Ok(PlumeRun { deposition: dep, intervals, skipped_intervals: skipped, skipped_mass })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReceptorComparison {
    pub id: String,
    pub fv: f64,
    pub plume: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub threshold: f64,
    pub fv_area: f64,
    pub plume_area: f64,
    /// `fv_area / plume_area`; `None` when the baseline is degenerate.
    pub area_ratio: Option<f64>,
    pub fv_near_source: f64,
    pub plume_near_source: f64,
    pub near_source_ratio: Option<f64>,
    pub receptors: Vec<ReceptorComparison>,
    /// The plume field is identically zero.
    pub degenerate_baseline: bool,
}

/// Ground cells within `radius` cells (Chebyshev distance) of any source.
pub fn near_source_cells(grid: &Grid3, sources: &[PointSource], radius: usize) -> Vec<usize> {
    let (nx, ny) = (grid.nx(), grid.ny());
    let [dx, dy, _] = grid.spacing();
    let mut mark = vec![false; nx * ny];
    for s in sources {
        let ci = (((s.position[0] - grid.origin[0]) / dx).floor().max(0.0) as usize).min(nx - 1);
        let cj = (((s.position[1] - grid.origin[1]) / dy).floor().max(0.0) as usize).min(ny - 1);
        for j in cj.saturating_sub(radius)..=(cj + radius).min(ny - 1) {
            for i in ci.saturating_sub(radius)..=(ci + radius).min(nx - 1) {
                mark[i + nx * j] = true;
            }
        }
    }
    (0..nx * ny).filter(|&n| mark[n]).collect()
}

fn ratio(a: f64, b: f64) -> Option<f64> {
    if a == b {
        Some(1.0)
    } else if b > 0.0 {
        Some(a / b)
    } else {
        None
    }
}

/// Footprint areas above `threshold`, near-source deposited mass and
/// receptor values of the two fields.
pub fn compare_solvers(
    fv: &DepositionField,
    plume: &DepositionField,
    receptors: &[Receptor],
    sources: &[PointSource],
    threshold: f64,
    near_radius_cells: usize,
) -> Result<ComparisonReport> {
    if !fv.grid.same_footprint(&plume.grid) || fv.values.len() != plume.values.len() {
        return Err(Error::GridMismatch("finite-volume and plume fields differ in footprint".into()));
    }
    let area = fv.grid.cell_area();
    let near = near_source_cells(&fv.grid, sources, near_radius_cells);
    let near_mass = |f: &DepositionField| near.iter().map(|&n| f.values[n] * area).sum::<f64>();
    let interp = |f: &DepositionField, r: &Receptor| -> Result<f64> {
        Ok(bilinear_weights(&f.grid, r.x, r.y)?.iter().map(|&(n, w)| w * f.values[n]).sum())
    };
    let receptors = receptors
        .iter()
        .map(|r| Ok(ReceptorComparison { id: r.id.clone(), fv: interp(fv, r)?, plume: interp(plume, r)? }))
        .collect::<Result<_>>()?;
    let (fa, pa) = (fv.area_above(threshold), plume.area_above(threshold));
    let (fn_, pn) = (near_mass(fv), near_mass(plume));
    let degenerate = plume.values.iter().all(|&v| v == 0.0);
    Ok(ComparisonReport {
        threshold,
        fv_area: fa,
        plume_area: pa,
        area_ratio: if degenerate && fa != pa { None } else { ratio(fa, pa) },
        fv_near_source: fn_,
        plume_near_source: pn,
        near_source_ratio: if degenerate && fn_ != pn { None } else { ratio(fn_, pn) },
        receptors,
        degenerate_baseline: degenerate,
    })
}
