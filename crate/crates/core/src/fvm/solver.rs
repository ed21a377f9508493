//! Godunov-split time marching of the 3D advection-diffusion problem.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::advection::{advect_line, LineOutflow, LowerFace};
use super::diffusion::{diffuse_1d_step, ground_robin_spec, LineExchange, RobinSpec, TridiagWork};
use super::source::{inject_sources, PreparedSource};
use crate::error::{invalid, Error, Result};
use crate::grid::{DepositionField, Field3, Grid3};
use crate::physics::{
    friction_velocity, lateral_diffusivity, vertical_diffusivity, wind_profile, ParticulateParams, SiteParams,
};
use crate::wind::WindSeries;

/// Adaptive time-step control.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct StepControl {
    /// Target Courant number.
    pub courant: f64,
    pub dt_min: f64,
    pub dt_max: f64,
}

impl Default for StepControl {
    fn default() -> Self {
        StepControl { courant: 0.9, dt_min: 0.5, dt_max: 40.0 }
    }
}

impl StepControl {
    pub fn validate(&self) -> Result<()> {
        if !(self.courant > 0.0 && self.courant < 1.0) {
            return Err(invalid(format!("target Courant number must lie in (0, 1), got {}", self.courant)));
        }
        if !(self.dt_min >= 0.0 && self.dt_max > 0.0 && self.dt_min <= self.dt_max) {
            return Err(invalid(format!("need 0 <= dt_min <= dt_max, dt_max > 0 (got {}, {})", self.dt_min, self.dt_max)));
        }
        Ok(())
    }

    /// Step length given the Courant-one step `dt_stab` and the time left.
    /// The stability limit overrides `dt_min`.
    pub fn choose(&self, dt_stab: f64, remaining: f64) -> f64 {
        (self.courant * dt_stab).max(self.dt_min).min(dt_stab).min(self.dt_max).min(remaining)
    }
}

/// Transport coefficients frozen over one step.
///
/// Horizontal velocities and diffusivities depend on height only (one entry
/// per cell layer); vertical diffusivities live on the `Nz + 1` z-faces.
#[derive(Debug, Clone, PartialEq)]
pub struct Coefficients {
    pub ux: Vec<f64>,
    pub uy: Vec<f64>,
    /// Downward settling speed (>= 0).
    pub u_set: f64,
    pub sx: Vec<f64>,
    pub sy: Vec<f64>,
    pub sz_faces: Vec<f64>,
    pub ground: RobinSpec,
    pub u_dep: f64,
}

impl Coefficients {
    /// Largest step with every sweep at Courant number one.
    pub fn stable_dt(&self, grid: &Grid3) -> f64 {
        let [dx, dy, dz] = grid.spacing();
        let mx = self.ux.iter().fold(0.0f64, |m, u| m.max(u.abs()));
        let my = self.uy.iter().fold(0.0f64, |m, u| m.max(u.abs()));
        let lim = |d: f64, u: f64| if u > 0.0 { d / u } else { f64::INFINITY };
        lim(dx, mx).min(lim(dy, my)).min(lim(dz, self.u_set))
    }

    fn check(&self, grid: &Grid3) -> Result<()> {
        let nz = grid.nz();
        if self.ux.len() != nz || self.uy.len() != nz || self.sx.len() != nz || self.sy.len() != nz {
            return Err(invalid("coefficient layers must match Nz"));
        }
        if self.sz_faces.len() != nz + 1 {
            return Err(invalid("need Nz + 1 vertical face diffusivities"));
        }
        let all = self.ux.iter().chain(&self.uy).chain(&self.sx).chain(&self.sy).chain(&self.sz_faces);
        if all.clone().any(|v| !v.is_finite()) || !self.u_set.is_finite() || !self.u_dep.is_finite() {
            return Err(Error::NonFinite("transport coefficients".into()));
        }
        if !(self.u_set >= 0.0 && self.u_dep >= 0.0) {
            return Err(invalid("settling and deposition velocities must be >= 0"));
        }
        Ok(())
    }
}

/// Anything that can supply coefficients at time `t` (seconds from the run start).
pub trait TransportModel: Sync {
    fn coefficients(&self, grid: &Grid3, t: f64) -> Result<Coefficients>;
}

/// Wind profile, eddy diffusivities and deposition driven by a single-station
/// wind record.
#[derive(Debug, Clone)]
pub struct AtmosphericModel {
    pub wind: WindSeries,
    pub site: SiteParams,
    pub particulate: ParticulateParams,
    /// Wind time corresponding to `t = 0`.
    pub start: f64,
    /// Longest record gap bridged by interpolation, s.
    pub max_gap: f64,
    /// Reference speed floor used by the turbulence closures, m/s.
    pub calm_speed: f64,
}

impl AtmosphericModel {
    pub const DEFAULT_MAX_GAP: f64 = 3.0 * 3600.0;
    pub const DEFAULT_CALM_SPEED: f64 = 0.1;

    pub fn new(wind: WindSeries, site: SiteParams, particulate: ParticulateParams) -> Result<Self> {
        site.validate()?;
        particulate.validate()?;
        let start = wind.start().ok_or_else(|| Error::WindCoverage { t: 0.0, reason: "empty wind series".into() })?;
        Ok(AtmosphericModel {
            wind,
            site,
            particulate,
            start,
            max_gap: Self::DEFAULT_MAX_GAP,
            calm_speed: Self::DEFAULT_CALM_SPEED,
        })
    }

    pub fn with_site(&self, site: SiteParams) -> Self {
        AtmosphericModel { site, ..self.clone() }
    }
}

impl TransportModel for AtmosphericModel {
    fn coefficients(&self, grid: &Grid3, t: f64) -> Result<Coefficients> {
        let (wx, wy) = self.wind.components_at(self.start + t, self.max_gap)?;
        let speed = wx.hypot(wy);
        let (ex, ey) = if speed > 0.0 { (wx / speed, wy / speed) } else { (0.0, 0.0) };
        let nz = grid.nz();
        let sp = &self.site;
        let mut ux = Vec::with_capacity(nz);
        let mut uy = Vec::with_capacity(nz);
        for k in 0..nz {
            let u = wind_profile(speed, grid.center(2, k), sp)?;
            ux.push(u * ex);
            uy.push(u * ey);
        }
        let u_star = friction_velocity(speed.max(self.calm_speed), sp)?;
        let sh = lateral_diffusivity(u_star, sp)?;
        let centres: Vec<f64> = (0..nz).map(|k| vertical_diffusivity(grid.center(2, k), u_star, sp)).collect::<Result<_>>()?;
        let s_ground = vertical_diffusivity(0.0, u_star, sp)?;
        let mut sz_faces = Vec::with_capacity(nz + 1);
        sz_faces.push(s_ground);
        for k in 1..nz {
            sz_faces.push(0.5 * (centres[k - 1] + centres[k]));
        }
        sz_faces.push(centres[nz - 1]);
        let u_set = self.particulate.settling()?;
        let u_dep = self.particulate.u_dep;
        Ok(Coefficients {
            ux,
            uy,
            u_set,
            sx: vec![sh; nz],
            sy: vec![sh; nz],
            sz_faces,
            ground: ground_robin_spec(u_dep, u_set, s_ground),
            u_dep,
        })
    }
}

/// Running mass budget, kg.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct MassAudit {
    pub injected: f64,
    pub airborne: f64,
    pub deposited: f64,
    pub outflow: f64,
}

impl MassAudit {
    /// `injected - (airborne + deposited + outflow)`.
    pub fn residual(&self) -> f64 {
        self.injected - (self.airborne + self.deposited + self.outflow)
    }

    pub fn relative_residual(&self) -> f64 {
        if self.injected == 0.0 {
            self.residual().abs()
        } else {
            self.residual().abs() / self.injected
        }
    }
}

/// `w += u_dep / 2 * dt * (C_1 + C_0)` over the ground layer.
pub fn accumulate_deposition(dep: &mut DepositionField, ground: &[f64], ghost: &[f64], u_dep: f64, dt: f64) {
    if u_dep == 0.0 {
        return;
    }
    for ((w, c1), c0) in dep.values.iter_mut().zip(ground).zip(ghost) {
        *w += 0.5 * u_dep * dt * (c1 + c0);
    }
}

/// Minimum number of lines handed to one rayon task.
const MIN_LINES: usize = 64;

fn sum_in_order(v: impl IntoIterator<Item = f64>) -> f64 {
    v.into_iter().sum()
}

fn sweep_x(f: &mut [f64], g: &Grid3, c: &Coefficients, dt: f64) -> Result<f64> {
    let [dx, dy, dz] = g.spacing();
    let (nx, ny) = (g.nx(), g.ny());
    let out: Vec<Result<f64>> = f
        .par_chunks_mut(nx)
        .with_min_len(MIN_LINES)
        .enumerate()
        .map(|(line, row)| {
            let u = c.ux[line / ny];
            if u == 0.0 {
                return Ok(0.0);
            }
            let edges = vec![u; nx + 1];
            let o = advect_line(row, &edges, dt, dx, LowerFace::Outflow)?;
            Ok((o.lo + o.hi) * dy * dz)
        })
        .collect();
    out.into_iter().collect::<Result<Vec<_>>>().map(sum_in_order)
}

fn sweep_y(f: &mut [f64], g: &Grid3, c: &Coefficients, dt: f64) -> Result<f64> {
    let [dx, dy, dz] = g.spacing();
    let (nx, ny) = (g.nx(), g.ny());
    let out: Vec<Result<f64>> = f
        .par_chunks_mut(nx * ny)
        .enumerate()
        .map(|(k, slab)| {
            let u = c.uy[k];
            if u == 0.0 {
                return Ok(0.0);
            }
            let edges = vec![u; ny + 1];
            let mut buf = vec![0.0; ny];
            let mut total = 0.0;
            for i in 0..nx {
                for j in 0..ny {
                    buf[j] = slab[i + nx * j];
                }
                let o = advect_line(&mut buf, &edges, dt, dy, LowerFace::Outflow)?;
                for j in 0..ny {
                    slab[i + nx * j] = buf[j];
                }
                total += o.lo + o.hi;
            }
            Ok(total * dx * dz)
        })
        .collect();
    out.into_iter().collect::<Result<Vec<_>>>().map(sum_in_order)
}

/// Copies the field into column-major order (`k` fastest).
fn to_columns(f: &[f64], g: &Grid3, cols: &mut [f64]) {
    let (nxy, nz) = (g.nx() * g.ny(), g.nz());
    cols.par_chunks_mut(nz).with_min_len(MIN_LINES).enumerate().for_each(|(col, dst)| {
        for (k, d) in dst.iter_mut().enumerate() {
            *d = f[col + nxy * k];
        }
    });
}

fn from_columns(cols: &[f64], g: &Grid3, f: &mut [f64]) {
    let (nxy, nz) = (g.nx() * g.ny(), g.nz());
    f.par_chunks_mut(nxy).enumerate().for_each(|(k, slab)| {
        for (col, d) in slab.iter_mut().enumerate() {
            *d = cols[col * nz + k];
        }
    });
}

fn diffuse_x(f: &mut [f64], g: &Grid3, c: &Coefficients, dt: f64) -> Result<()> {
    let dx = g.spacing()[0];
    let (nx, ny) = (g.nx(), g.ny());
    f.par_chunks_mut(nx)
        .with_min_len(MIN_LINES)
        .enumerate()
        .try_for_each_init(TridiagWork::default, |work, (line, row)| {
            let s = c.sx[line / ny];
            if s == 0.0 {
                return Ok(());
            }
            diffuse_1d_step(row, &vec![s; nx + 1], dt, dx, RobinSpec::NEUMANN, RobinSpec::NEUMANN, work).map(|_| ())
        })
}

fn diffuse_y(f: &mut [f64], g: &Grid3, c: &Coefficients, dt: f64) -> Result<()> {
    let dy = g.spacing()[1];
    let (nx, ny) = (g.nx(), g.ny());
    f.par_chunks_mut(nx * ny).enumerate().try_for_each_init(TridiagWork::default, |work, (k, slab)| {
        let s = c.sy[k];
        if s == 0.0 {
            return Ok(());
        }
        let faces = vec![s; ny + 1];
        let mut buf = vec![0.0; ny];
        for i in 0..nx {
            for j in 0..ny {
                buf[j] = slab[i + nx * j];
            }
            diffuse_1d_step(&mut buf, &faces, dt, dy, RobinSpec::NEUMANN, RobinSpec::NEUMANN, work)?;
            for j in 0..ny {
                slab[i + nx * j] = buf[j];
            }
        }
        Ok(())
    })
}

/// Per-step state of the vertical sweeps: ground layer and its ghost values
/// after z-diffusion.
struct Vertical {
    outflow: f64,
    ground: Vec<f64>,
    ghost: Vec<f64>,
}

fn advect_z(f: &mut [f64], cols: &mut [f64], g: &Grid3, c: &Coefficients, dt: f64) -> Result<f64> {
    if c.u_set == 0.0 {
        return Ok(0.0);
    }
    let [dx, dy, dz] = g.spacing();
    let nz = g.nz();
    to_columns(f, g, cols);
    let mut edges = vec![-c.u_set; nz + 1];
    edges[0] = 0.0;
    let res: Vec<Result<LineOutflow>> = cols
        .par_chunks_mut(nz)
        .with_min_len(MIN_LINES)
        .map(|col| advect_line(col, &edges, dt, dz, LowerFace::Reflecting))
        .collect();
    let mut outflow = 0.0;
    for r in res {
        outflow += r?.hi;
    }
    from_columns(cols, g, f);
    Ok(outflow * dx * dy)
}

fn diffuse_z(f: &mut [f64], cols: &mut [f64], g: &Grid3, c: &Coefficients, dt: f64) -> Result<Vertical> {
    let [dx, dy, dz] = g.spacing();
    let nz = g.nz();
    to_columns(f, g, cols);
    let res: Vec<Result<(LineExchange, f64)>> = cols
        .par_chunks_mut(nz)
        .with_min_len(MIN_LINES)
        .map_init(TridiagWork::default, |work, col| {
            let ex = diffuse_1d_step(col, &c.sz_faces, dt, dz, c.ground, RobinSpec::NEUMANN, work)?;
            Ok((ex, col[0]))
        })
        .collect();
    let mut outflow = 0.0;
    let mut ground = Vec::with_capacity(res.len());
    let mut ghost = Vec::with_capacity(res.len());
    for r in res {
        let (ex, c1) = r?;
        outflow += ex.hi;
        ground.push(c1);
        ghost.push(ex.ghost_lo);
    }
    from_columns(cols, g, f);
    Ok(Vertical { outflow: outflow * dx * dy, ground, ghost })
}

/// Scratch buffers reused across steps.
#[derive(Debug, Default)]
pub struct StepWork {
    cols: Vec<f64>,
}

/// One split step of length `dt` starting at time `t`: x, y, z advection,
/// x, y, z diffusion, source injection, deposition tally.
#[allow(clippy::too_many_arguments)]
pub fn godunov_step(
    field: &mut Field3,
    dep: &mut DepositionField,
    coeffs: &Coefficients,
    sources: &[PreparedSource],
    t: f64,
    dt: f64,
    audit: &mut MassAudit,
    work: &mut StepWork,
) -> Result<()> {
    let g = field.grid;
    coeffs.check(&g)?;
    if !(dt > 0.0) {
        return Err(invalid(format!("time step must be positive, got {dt}")));
    }
    let f = &mut field.values;
    work.cols.resize(g.len(), 0.0);
    let mut out = sweep_x(f, &g, coeffs, dt)?;
    out += sweep_y(f, &g, coeffs, dt)?;
    out += advect_z(f, &mut work.cols, &g, coeffs, dt)?;
    diffuse_x(f, &g, coeffs, dt)?;
    diffuse_y(f, &g, coeffs, dt)?;
    let v = diffuse_z(f, &mut work.cols, &g, coeffs, dt)?;
    out += v.outflow;
    audit.injected += inject_sources(field, sources, t, dt);
    accumulate_deposition(dep, &v.ground, &v.ghost, coeffs.u_dep, dt);
    audit.outflow += out;
    Ok(())
}

#[derive(Debug, Clone)]
pub struct ForwardSolution {
    pub field: Field3,
    pub deposition: DepositionField,
    pub audit: MassAudit,
    pub steps: usize,
}

/// Marches from a zero field over `[0, t_end]`.
pub fn solve_forward(
    grid: &Grid3,
    model: &dyn TransportModel,
    sources: &[PreparedSource],
    t_end: f64,
    ctrl: &StepControl,
) -> Result<ForwardSolution> {
    grid.validate()?;
    ctrl.validate()?;
    if !(t_end >= 0.0) || !t_end.is_finite() {
        return Err(invalid(format!("end time must be finite and >= 0, got {t_end}")));
    }
    let mut field = Field3::zeros(*grid);
    let mut dep = DepositionField::zeros(*grid);
    let mut audit = MassAudit::default();
    let mut work = StepWork::default();
    let mut t = 0.0;
    let mut steps = 0;
    while t < t_end {
        let coeffs = model.coefficients(grid, t)?;
        let dt = ctrl.choose(coeffs.stable_dt(grid), t_end - t);
        godunov_step(&mut field, &mut dep, &coeffs, sources, t, dt, &mut audit, &mut work)?;
        steps += 1;
        t = if t_end - (t + dt) <= 1e-9 * t_end { t_end } else { t + dt };
    }
    audit.airborne = field.mass();
    audit.deposited = dep.mass();
    Ok(ForwardSolution { field, deposition: dep, audit, steps })
}
