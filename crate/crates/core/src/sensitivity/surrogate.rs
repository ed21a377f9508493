//! Kernel ridge surrogate with an anisotropic squared-exponential kernel.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurrogateOptions {
    /// Candidate length-scales, shared by every coordinate.
    pub lengthscales: Vec<f64>,
    /// Candidate ridge values, relative to the unit kernel diagonal.
    pub ridges: Vec<f64>,
    /// Coordinate-descent passes over the length-scales.
    pub sweeps: usize,
}

impl Default for SurrogateOptions {
    fn default() -> Self {
        SurrogateOptions {
            lengthscales: vec![0.05, 0.1, 0.2, 0.35, 0.5, 0.75, 1.0, 1.5, 2.5, 5.0, 10.0],
            ridges: vec![1e-8, 1e-6, 1e-4, 1e-2, 1e-1],
            sweeps: 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Surrogate {
    points: Vec<Vec<f64>>,
    weights: Vec<f64>,
    pub lengthscales: Vec<f64>,
    pub ridge: f64,
    mean: f64,
    scale: f64,
    /// Mean squared leave-one-out error in output units.
    pub loo_mse: f64,
}

fn kernel(a: &[f64], b: &[f64], ls: &[f64]) -> f64 {
    let r2: f64 = a.iter().zip(b).zip(ls).map(|((x, y), l)| ((x - y) / l).powi(2)).sum();
    (-0.5 * r2).exp()
}

fn gram(points: &[Vec<f64>], ls: &[f64], ridge: f64) -> DMatrix<f64> {
    let n = points.len();
    let mut k = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let v = kernel(&points[i], &points[j], ls);
            k[(i, j)] = v;
            k[(j, i)] = v;
        }
        k[(i, i)] += ridge;
    }
    k
}

/// Cholesky of the regularized Gram matrix, raising the ridge tenfold until
/// it factors.
fn factor(points: &[Vec<f64>], ls: &[f64], mut ridge: f64) -> Result<(Cholesky<f64, Dyn>, f64)> {
    for _ in 0..12 {
        if let Some(c) = gram(points, ls, ridge).cholesky() {
            return Ok((c, ridge));
        }
        log::warn!("surrogate Gram matrix is rank deficient at ridge {ridge:e}; increasing");
        ridge = (ridge * 10.0).max(1e-12);
    }
    Err(Error::LinearAlgebra("surrogate Gram matrix could not be factored".into()))
}

/// Closed-form leave-one-out residuals `alpha_i / (K^-1)_ii` on standardized outputs.
fn loo_mse(points: &[Vec<f64>], y: &DVector<f64>, ls: &[f64], ridge: f64) -> Option<f64> {
    let (chol, _) = factor(points, ls, ridge).ok()?;
    let alpha = chol.solve(y);
    let inv = chol.inverse();
    let n = y.len();
    let mse = (0..n).map(|i| (alpha[i] / inv[(i, i)]).powi(2)).sum::<f64>() / n as f64;
    mse.is_finite().then_some(mse)
}

impl Surrogate {
    /// Fits with fixed hyperparameters.
    pub fn fit_fixed(points: &[Vec<f64>], outputs: &[f64], lengthscales: &[f64], ridge: f64) -> Result<Self> {
        let p = check(points, outputs)?;
        if lengthscales.len() != p || lengthscales.iter().any(|l| !(*l > 0.0)) {
            return Err(invalid("need one positive length-scale per coordinate"));
        }
        if !(ridge >= 0.0) {
            return Err(invalid("ridge must be >= 0"));
        }
        let n = outputs.len() as f64;
        let mean = outputs.iter().sum::<f64>() / n;
        let sd = (outputs.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
        let scale = if sd > 0.0 { sd } else { 1.0 };
        let y = DVector::from_iterator(outputs.len(), outputs.iter().map(|v| (v - mean) / scale));
        let (weights, ridge, loo) = if sd == 0.0 {
            (vec![0.0; outputs.len()], ridge, 0.0)
        } else {
            let (chol, ridge) = factor(points, lengthscales, ridge)?;
            let w = chol.solve(&y);
            let loo = loo_mse(points, &y, lengthscales, ridge).unwrap_or(f64::NAN) * scale * scale;
            (w.iter().copied().collect(), ridge, loo)
        };
        Ok(Surrogate { points: points.to_vec(), weights, lengthscales: lengthscales.to_vec(), ridge, mean, scale, loo_mse: loo })
    }

    /// Chooses the ridge and per-coordinate length-scales by coordinate
    /// descent on the leave-one-out error, then fits.
    pub fn fit(points: &[Vec<f64>], outputs: &[f64], opts: &SurrogateOptions) -> Result<Self> {
        let p = check(points, outputs)?;
        if outputs.len() < p + 1 {
            return Err(Error::InsufficientData(format!("{} design points for {p} parameters", outputs.len())));
        }
        if opts.lengthscales.is_empty() || opts.ridges.is_empty() {
            return Err(invalid("surrogate hyperparameter grids must be non-empty"));
        }
        let n = outputs.len() as f64;
        let mean = outputs.iter().sum::<f64>() / n;
        let sd = (outputs.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
        let start = opts.lengthscales[opts.lengthscales.len() / 2];
        if sd == 0.0 {
            return Self::fit_fixed(points, outputs, &vec![start; p], opts.ridges[0]);
        }
        let y = DVector::from_iterator(outputs.len(), outputs.iter().map(|v| (v - mean) / sd));
        let mut ls = vec![start; p];
        let mut ridge = opts.ridges[0];
        let mut best = f64::INFINITY;
        let mut improve = |ls: &mut Vec<f64>, ridge: &mut f64, coord: Option<usize>| {
            let cands: Vec<(Vec<f64>, f64)> = match coord {
                Some(a) => opts.lengthscales.iter().map(|&l| {
                    let mut c = ls.clone();
                    c[a] = l;
                    (c, *ridge)
                }).collect(),
                None => opts.ridges.iter().map(|&r| (ls.clone(), r)).collect(),
            };
            for (c, r) in cands {
                if let Some(m) = loo_mse(points, &y, &c, r) {
                    if m < best {
                        best = m;
                        *ls = c;
                        *ridge = r;
                    }
                }
            }
        };
        for _ in 0..opts.sweeps.max(1) {
            improve(&mut ls, &mut ridge, None);
            for a in 0..p {
                improve(&mut ls, &mut ridge, Some(a));
            }
        }
        Self::fit_fixed(points, outputs, &ls, ridge)
    }

    pub fn predict(&self, x: &[f64]) -> f64 {
        let s: f64 = self.points.iter().zip(&self.weights).map(|(p, w)| w * kernel(p, x, &self.lengthscales)).sum();
        self.mean + self.scale * s
    }
}

fn check(points: &[Vec<f64>], outputs: &[f64]) -> Result<usize> {
    if points.is_empty() || points.len() != outputs.len() {
        return Err(invalid("design points and outputs must be non-empty and of equal length"));
    }
    let p = points[0].len();
    if p == 0 || points.iter().any(|x| x.len() != p) {
        return Err(invalid("design points must share a positive dimension"));
    }
    if points.iter().flatten().chain(outputs).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("surrogate training data".into()));
    }
    Ok(p)
}
