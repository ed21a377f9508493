//! JSON run configuration. Emission rates are written in ton/yr and
//! converted to kg/s when the config is loaded.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::sha256_hex;
use crate::error::{invalid, Error, Result};
use crate::fvm::convergence::SourceKind;
use crate::fvm::{EmissionRate, PointSource, StepControl};
use crate::grid::Grid3;
use crate::inversion::{PriorSpec, Receptor};
use crate::physics::{ParticulateParams, SiteParams};
use crate::plume::PlumeOptions;
use crate::sensitivity::{Functional, ParameterBox};
use crate::wind::RegularizeOptions;

/// kg/s per ton/yr (metric ton, Julian year).
pub const TON_PER_YEAR: f64 = 1.0e3 / 3.15576e7;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub origin: [f64; 3],
    pub extent: [f64; 3],
    pub cells: [usize; 3],
}

impl GridSpec {
    pub fn build(&self) -> Result<Grid3> {
        Grid3::new(self.origin, self.extent, self.cells)
    }
}

/// A source as written in the config, rates in ton/yr.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigSource {
    pub name: String,
    pub position: [f64; 3],
    /// ton/yr; a number or `[[t_seconds, rate], ...]`.
    pub rate: EmissionRate,
}

impl ConfigSource {
    pub fn to_point_source(&self) -> PointSource {
        let rate = match &self.rate {
            EmissionRate::Constant(q) => EmissionRate::Constant(q * TON_PER_YEAR),
            EmissionRate::Table(t) => EmissionRate::Table(t.iter().map(|&(s, q)| (s, q * TON_PER_YEAR)).collect()),
        };
        PointSource { name: self.name.clone(), position: self.position, rate }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WindSpec {
    /// Relative paths are resolved against the config file's directory.
    pub path: PathBuf,
    /// Longest gap bridged by interpolation, s.
    pub max_gap: f64,
    /// Floor on the reference speed seen by the turbulence closures, m/s.
    pub calm_speed: f64,
    /// Regularize the raw series before use.
    pub regularize: bool,
    pub lengthscales: Vec<f64>,
    pub noises: Vec<f64>,
    pub folds: usize,
    /// Seeds the cross-validation fold assignment.
    pub seed: u64,
    pub windrose_sectors: usize,
    pub windrose_speed_edges: Vec<f64>,
}

impl Default for WindSpec {
    fn default() -> Self {
        let r = crate::wind::RegularizeOptions::default();
        WindSpec {
            path: PathBuf::from("wind.csv"),
            max_gap: 3.0 * 3600.0,
            calm_speed: 0.1,
            regularize: true,
            lengthscales: r.lengthscales,
            noises: r.noises,
            folds: r.folds,
            seed: 0,
            windrose_sectors: 16,
            windrose_speed_edges: crate::wind::DEFAULT_SPEED_EDGES.to_vec(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeWindow {
    /// Wind timestamp at `t = 0` (ISO-8601 or epoch seconds); the first
    /// record when absent.
    #[serde(default)]
    pub start: Option<String>,
    /// Simulated duration, s.
    pub duration: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InversionSpec {
    pub alpha0: f64,
    pub beta0: f64,
    /// Noise std of the observations, kg. Derived from `snr` when absent.
    pub sigma: Option<f64>,
    pub snr: Option<f64>,
    /// Observed jar masses (`receptor,value` CSV, kg). Synthesized from
    /// `q_true` when absent.
    pub observations: Option<PathBuf>,
    /// True rates for synthetic data, ton/yr; defaults to the source rates.
    pub q_true: Option<Vec<f64>>,
    /// Chain length including burn-in.
    pub samples: usize,
    pub burn_in: f64,
    pub seed: u64,
}

impl Default for InversionSpec {
    fn default() -> Self {
        InversionSpec {
            alpha0: 1.0,
            beta0: 1e-4,
            sigma: None,
            snr: Some(10.0),
            observations: None,
            q_true: None,
            samples: 20000,
            burn_in: 0.2,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SensitivitySpec {
    #[serde(rename = "box")]
    pub pbox: ParameterBox,
    pub design_size: usize,
    pub n_base: usize,
    pub bootstrap: usize,
    pub seed: u64,
    /// Radius of the disc integrated by eta_total, m.
    pub radius_inner: f64,
    /// eta_max takes the maximum outside this radius, m.
    pub radius_outer: f64,
    /// Centre of both discs; the source centroid when absent.
    pub center: Option<(f64, f64)>,
    /// Grid used for the design runs; the main grid when absent.
    pub grid: Option<GridSpec>,
    /// Duration of each design run, s; the main window when absent.
    pub duration: Option<f64>,
}

impl Default for SensitivitySpec {
    fn default() -> Self {
        SensitivitySpec {
            pbox: ParameterBox::default(),
            design_size: 32,
            n_base: 10000,
            bootstrap: 200,
            seed: 0,
            radius_inner: 2000.0,
            radius_outer: 1000.0,
            center: None,
            grid: None,
            duration: None,
        }
    }
}

impl SensitivitySpec {
    pub fn functionals(&self, sources: &[PointSource]) -> Vec<Functional> {
        let n = sources.len().max(1) as f64;
        let centroid = sources.iter().fold((0.0, 0.0), |(x, y), s| (x + s.position[0] / n, y + s.position[1] / n));
        let center = self.center.unwrap_or(centroid);
        vec![
            Functional::EtaTotal { center, radius: self.radius_inner },
            Functional::EtaMax { center, radius: self.radius_outer },
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ConvergenceSpec {
    pub sizes: Vec<usize>,
    pub sources: Vec<SourceKind>,
    pub exclusion_radius: Option<f64>,
}

impl Default for ConvergenceSpec {
    fn default() -> Self {
        ConvergenceSpec { sizes: vec![16, 32, 64, 128], sources: vec![SourceKind::Smooth, SourceKind::Point], exclusion_radius: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PlumeSpec {
    #[serde(flatten)]
    pub options: PlumeOptions,
    /// Footprint threshold as a fraction of the larger of the two maxima.
    pub threshold_fraction: f64,
    pub near_radius_cells: usize,
}

impl Default for PlumeSpec {
    fn default() -> Self {
        PlumeSpec { options: PlumeOptions::default(), threshold_fraction: 0.01, near_radius_cells: 3 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema_version: u32,
    pub grid: GridSpec,
    #[serde(default = "SiteParams::best_guess")]
    pub site: SiteParams,
    #[serde(default = "ParticulateParams::zinc_sulphate")]
    pub particulate: ParticulateParams,
    pub sources: Vec<ConfigSource>,
    #[serde(default)]
    pub receptors: Vec<Receptor>,
    #[serde(default)]
    pub wind: WindSpec,
    pub time: TimeWindow,
    #[serde(default)]
    pub solver: StepControl,
    #[serde(default)]
    pub inversion: InversionSpec,
    #[serde(default)]
    pub sensitivity: SensitivitySpec,
    #[serde(default)]
    pub convergence: ConvergenceSpec,
    #[serde(default)]
    pub plume: PlumeSpec,
    #[serde(default = "default_output")]
    pub output_dir: PathBuf,
    /// Directory the config was read from; relative paths resolve here.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

fn default_output() -> PathBuf {
    PathBuf::from("out")
}

impl RunConfig {
    /// Parses and validates a config document.
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| Error::Parse { line: e.line(), msg: e.to_string() })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| std::io::Error::new(e.kind(), format!("{}: {e}", path.display())))?;
        let mut cfg = Self::from_json(&text)?;
        cfg.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(invalid(format!("unsupported schema_version {} (expected {SCHEMA_VERSION})", self.schema_version)));
        }
        let grid = self.grid.build()?;
        self.site.validate()?;
        self.particulate.validate()?;
        self.solver.validate()?;
        if !(self.time.duration > 0.0) || !self.time.duration.is_finite() {
            return Err(invalid("time.duration must be positive"));
        }
        if let Some(s) = &self.time.start {
            if super::parse_timestamp(s).is_none() {
                return Err(invalid(format!("time.start {s:?} is not a timestamp")));
            }
        }
        for s in &self.sources {
            s.rate.validate()?;
            if !grid.contains(s.position) {
                return Err(Error::OutsideGrid(format!("source {} at {:?}", s.name, s.position)));
            }
        }
        for r in &self.receptors {
            if !grid.contains_xy(r.x, r.y) {
                return Err(Error::OutsideGrid(format!("receptor {} at ({}, {})", r.id, r.x, r.y)));
            }
            if !(r.area > 0.0) {
                return Err(invalid(format!("receptor {} area must be positive", r.id)));
            }
        }
        let w = &self.wind;
        self.regularize_options().validate()?;
        if !(w.max_gap > 0.0 && w.calm_speed >= 0.0) {
            return Err(invalid("wind.max_gap must be positive and wind.calm_speed >= 0"));
        }
        let inv = &self.inversion;
        if let Some(q) = &inv.q_true {
            if q.len() != self.sources.len() {
                return Err(invalid(format!("inversion.q_true has {} entries for {} sources", q.len(), self.sources.len())));
            }
        }
        if inv.sigma.is_none() && inv.snr.is_none() && inv.observations.is_none() {
            return Err(invalid("inversion needs sigma, snr or observations"));
        }
        if !(0.0..1.0).contains(&inv.burn_in) {
            return Err(invalid("inversion.burn_in must lie in [0, 1)"));
        }
        if let Some(snr) = inv.snr {
            if !(snr > 0.0) {
                return Err(invalid("inversion.snr must be positive"));
            }
        }
        let sens = &self.sensitivity;
        sens.pbox.validate()?;
        if let Some(g) = &sens.grid {
            g.build()?;
        }
        if sens.design_size < 2 || sens.n_base < 2 {
            return Err(invalid("sensitivity needs design_size >= 2 and n_base >= 2"));
        }
        let conv = &self.convergence;
        if conv.sizes.len() < 3 || conv.sizes.windows(2).any(|w| w[1] != 2 * w[0]) {
            return Err(invalid("convergence.sizes must be at least three successive doublings"));
        }
        if !(self.plume.threshold_fraction > 0.0 && self.plume.threshold_fraction < 1.0) {
            return Err(invalid("plume.threshold_fraction must lie in (0, 1)"));
        }
        Ok(())
    }

    /// Canonical serialization: field order is fixed by the schema and
    /// defaults are filled in, so equivalent documents hash identically.
    pub fn canonical_json(&self) -> String {
        serde_json::to_string(self).unwrap_or_default()
    }

    pub fn hash(&self) -> String {
        sha256_hex(self.canonical_json().as_bytes())
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() { p.to_path_buf() } else { self.base_dir.join(p) }
    }

    pub fn regularize_options(&self) -> RegularizeOptions {
        let w = &self.wind;
        RegularizeOptions { lengthscales: w.lengthscales.clone(), noises: w.noises.clone(), folds: w.folds, seed: w.seed }
    }

    pub fn point_sources(&self) -> Vec<PointSource> {
        self.sources.iter().map(ConfigSource::to_point_source).collect()
    }

    /// Engineering estimates in kg/s (constant sources only; tables are
    /// averaged over their breakpoints).
    pub fn q_eng(&self) -> Vec<f64> {
        self.point_sources().iter().map(|s| mean_rate(&s.rate)).collect()
    }

    pub fn q_true(&self) -> Vec<f64> {
        match &self.inversion.q_true {
            Some(q) => q.iter().map(|v| v * TON_PER_YEAR).collect(),
            None => self.q_eng(),
        }
    }

    pub fn prior(&self, sigma: f64) -> PriorSpec {
        PriorSpec { q_eng: self.q_eng(), alpha0: self.inversion.alpha0, beta0: self.inversion.beta0, sigma }
    }
}

fn mean_rate(r: &EmissionRate) -> f64 {
    match r {
        EmissionRate::Constant(q) => *q,
        EmissionRate::Table(t) => t.iter().map(|p| p.1).sum::<f64>() / t.len() as f64,
    }
}
