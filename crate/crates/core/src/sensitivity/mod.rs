//! Variance-based sensitivity of deposition functionals to site parameters.

pub mod design;
pub mod sobol;
pub mod surrogate;

pub use design::{lhs_design, Design, DesignKind};
pub use sobol::{sobol_indices, SobolOptions, SobolResult};
pub use surrogate::{Surrogate, SurrogateOptions};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::grid::DepositionField;
use crate::physics::{ObukhovLength, SiteParams, PRIOR_BOX};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParameterRange {
    pub name: String,
    pub lower: f64,
    pub upper: f64,
}

/// Ranges of the varied site parameters, mapped linearly onto `[0, 1]^p`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParameterBox {
    pub params: Vec<ParameterRange>,
}

impl Default for ParameterBox {
    fn default() -> Self {
        ParameterBox {
            params: PRIOR_BOX
                .iter()
                .map(|&(n, lo, hi)| ParameterRange { name: n.to_string(), lower: lo, upper: hi })
                .collect(),
        }
    }
}

impl ParameterBox {
    pub fn dim(&self) -> usize {
        self.params.len()
    }

    pub fn names(&self) -> Vec<&str> {
        self.params.iter().map(|p| p.name.as_str()).collect()
    }

    pub fn validate(&self) -> Result<()> {
        if self.params.is_empty() {
            return Err(invalid("parameter box is empty"));
        }
        for p in &self.params {
            if !matches!(p.name.as_str(), "gamma" | "z0" | "z_i" | "L" | "z_cut") {
                return Err(invalid(format!("unknown parameter {:?}", p.name)));
            }
            if !(p.lower < p.upper) || !p.lower.is_finite() || !p.upper.is_finite() {
                return Err(invalid(format!("parameter {} needs finite lower < upper", p.name)));
            }
        }
        Ok(())
    }

    pub fn to_physical(&self, u: &[f64]) -> Vec<f64> {
        self.params.iter().zip(u).map(|(p, v)| p.lower + v * (p.upper - p.lower)).collect()
    }

    pub fn to_unit(&self, x: &[f64]) -> Vec<f64> {
        self.params.iter().zip(x).map(|(p, v)| (v - p.lower) / (p.upper - p.lower)).collect()
    }

    /// `base` with the box parameters replaced by the physical values `x`.
    pub fn apply(&self, base: &SiteParams, x: &[f64]) -> SiteParams {
        let mut s = *base;
        for (p, &v) in self.params.iter().zip(x) {
            match p.name.as_str() {
                "gamma" => s.gamma = v,
                "z0" => s.z0 = v,
                "z_i" => s.z_i = v,
                "L" => s.obukhov = ObukhovLength::Finite(v),
                "z_cut" => s.z_cut = v,
                _ => {}
            }
        }
        s
    }
}

/// Midpoint-rule integral of `w` over ground cells centred within `radius`
/// of `center`, kg.
pub fn eta_total(w: &DepositionField, center: (f64, f64), radius: f64) -> f64 {
    let area = w.grid.cell_area();
    (0..w.values.len())
        .filter(|&n| {
            let (x, y) = w.cell_xy(n);
            (x - center.0).powi(2) + (y - center.1).powi(2) <= radius * radius
        })
        .map(|n| w.values[n] * area)
        .sum()
}

/// Largest `w` over ground cells centred farther than `radius` from
/// `center`; zero if there are none.
pub fn eta_max(w: &DepositionField, center: (f64, f64), radius: f64) -> f64 {
    (0..w.values.len())
        .filter(|&n| {
            let (x, y) = w.cell_xy(n);
            (x - center.0).powi(2) + (y - center.1).powi(2) > radius * radius
        })
        .map(|n| w.values[n])
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Functional {
    EtaTotal { center: (f64, f64), radius: f64 },
    EtaMax { center: (f64, f64), radius: f64 },
}

impl Functional {
    pub fn eval(&self, w: &DepositionField) -> f64 {
        match *self {
            Functional::EtaTotal { center, radius } => eta_total(w, center, radius),
            Functional::EtaMax { center, radius } => eta_max(w, center, radius),
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Functional::EtaTotal { .. } => "eta_total",
            Functional::EtaMax { .. } => "eta_max",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyOptions {
    pub design_size: usize,
    pub design_seed: u64,
    pub sobol: SobolOptions,
    pub surrogate: SurrogateOptions,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScatterRow {
    pub parameter: String,
    pub value: f64,
    pub functional_value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudyResult {
    pub names: Vec<String>,
    pub design: Design,
    /// Physical parameter values per design point.
    pub physical: Vec<Vec<f64>>,
    pub outputs: Vec<f64>,
    pub sobol: SobolResult,
    pub surrogate: Surrogate,
}

impl StudyResult {
    pub fn scatter(&self) -> Vec<ScatterRow> {
        let mut rows = Vec::with_capacity(self.names.len() * self.outputs.len());
        for (a, name) in self.names.iter().enumerate() {
            for (x, y) in self.physical.iter().zip(&self.outputs) {
                rows.push(ScatterRow { parameter: name.clone(), value: x[a], functional_value: *y });
            }
        }
        rows
    }
}

/// Runs the model over a Latin hypercube, fits a surrogate to the functional
/// values and estimates Sobol indices on the surrogate.
pub fn sensitivity_study<R>(
    runner: R,
    pbox: &ParameterBox,
    base: &SiteParams,
    functional: &Functional,
    opts: &StudyOptions,
) -> Result<StudyResult>
where
    R: Fn(&SiteParams) -> Result<DepositionField> + Sync,
{
    sensitivity_study_multi(runner, pbox, base, std::slice::from_ref(functional), opts)?.remove(0)
}

/// As [`sensitivity_study`], sharing one set of model runs across several
/// functionals. Model failures abort the study; a functional whose indices
/// cannot be estimated (e.g. constant outputs) fails on its own.
pub fn sensitivity_study_multi<R>(
    runner: R,
    pbox: &ParameterBox,
    base: &SiteParams,
    functionals: &[Functional],
    opts: &StudyOptions,
) -> Result<Vec<Result<StudyResult>>>
where
    R: Fn(&SiteParams) -> Result<DepositionField> + Sync,
{
    pbox.validate()?;
    if functionals.is_empty() {
        return Err(invalid("no functionals requested"));
    }
    let p = pbox.dim();
    let design = lhs_design(opts.design_size, p, opts.design_seed)?;
    let physical: Vec<Vec<f64>> = design.points.iter().map(|u| pbox.to_physical(u)).collect();
    let fields: Vec<DepositionField> = physical.par_iter().map(|x| runner(&pbox.apply(base, x))).collect::<Result<_>>()?;
    Ok(functionals
        .iter()
        .map(|f| {
            let outputs: Vec<f64> = fields.iter().map(|w| f.eval(w)).collect();
            let surrogate = Surrogate::fit(&design.points, &outputs, &opts.surrogate)?;
            let sobol = sobol_indices(|u| surrogate.predict(u), p, &opts.sobol)?;
            Ok(StudyResult {
                names: pbox.names().iter().map(|s| s.to_string()).collect(),
                design: design.clone(),
                physical: physical.clone(),
                outputs,
                sobol,
                surrogate,
            })
        })
        .collect())
}
