//! Kernel ridge regression (the posterior mean of a Gaussian process) with a
//! squared-exponential kernel in time, hyperparameters chosen by k-fold
//! cross-validation.
//!
//! Kernel entries below 1e-16 are dropped, so the Gram matrix of a
//! time-ordered series is banded and factorizes in `O(n b^2)`.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{unwrap_direction, wrap_direction, SeriesKind, WindRecord, WindSeries};
use crate::error::{invalid, Error, Result};

/// Kernel support in units of the lengthscale: `exp(-8.6^2 / 2) < 1e-16`.
const SUPPORT: f64 = 8.6;

#[derive(Debug, Clone, PartialEq)]
pub struct RegularizeOptions {
    /// Candidate kernel lengthscales, seconds.
    pub lengthscales: Vec<f64>,
    /// Candidate ridge parameters, relative to the data variance.
    pub noises: Vec<f64>,
    pub folds: usize,
    pub seed: u64,
}

impl Default for RegularizeOptions {
    fn default() -> Self {
        RegularizeOptions {
            lengthscales: vec![600.0, 1800.0, 3600.0, 7200.0, 14400.0],
            noises: vec![1e-2, 1e-1, 1.0, 10.0],
            folds: 10,
            seed: 0,
        }
    }
}

impl RegularizeOptions {
    pub fn validate(&self) -> Result<()> {
        if self.lengthscales.is_empty() || self.noises.is_empty() {
            return Err(invalid("hyperparameter grids must be non-empty"));
        }
        if self.lengthscales.iter().any(|&l| !(l > 0.0) || !l.is_finite()) || self.noises.iter().any(|&n| !(n >= 0.0) || !n.is_finite()) {
            return Err(invalid("lengthscales must be > 0 and noises >= 0"));
        }
        if self.folds < 2 {
            return Err(invalid("cross-validation needs at least 2 folds"));
        }
        Ok(())
    }
}

/// Selected hyperparameters for one regressed quantity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Selection {
    pub lengthscale: f64,
    pub noise: f64,
    /// Mean squared cross-validation error at the selected point.
    pub cv_mse: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegularizeReport {
    pub speed: Selection,
    pub direction: Selection,
}

/// Symmetric positive definite banded matrix, lower Cholesky factor stored
/// row-wise with `bw + 1` slots per row.
struct BandedCholesky {
    n: usize,
    bw: usize,
    l: Vec<f64>,
}

impl BandedCholesky {
    /// `entry(i, j)` is queried for `i - bw <= j <= i` only.
    fn factor(n: usize, bw: usize, entry: impl Fn(usize, usize) -> f64) -> Result<Self> {
        let w = bw + 1;
        let mut l = vec![0.0; n * w];
        // slot of (i, j) is i * w + (j + bw - i)
        for i in 0..n {
            let j0 = i.saturating_sub(bw);
            for j in j0..=i {
                let mut sum = entry(i, j);
                let k0 = j0.max(j.saturating_sub(bw));
                for k in k0..j {
                    sum -= l[i * w + (k + bw - i)] * l[j * w + (k + bw - j)];
                }
                if i == j {
                    if !(sum > 0.0) {
                        return Err(Error::LinearAlgebra(format!(
                            "kernel matrix not positive definite at row {i}"
                        )));
                    }
                    l[i * w + bw] = sum.sqrt();
                } else {
                    l[i * w + (j + bw - i)] = sum / l[j * w + bw];
                }
            }
        }
        Ok(BandedCholesky { n, bw, l })
    }

    fn solve(&self, b: &[f64]) -> Vec<f64> {
        let (n, bw, w) = (self.n, self.bw, self.bw + 1);
        let mut y = b.to_vec();
        for i in 0..n {
            let mut s = y[i];
            for k in i.saturating_sub(bw)..i {
                s -= self.l[i * w + (k + bw - i)] * y[k];
            }
            y[i] = s / self.l[i * w + bw];
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in (i + 1)..n.min(i + bw + 1) {
                s -= self.l[k * w + (i + bw - k)] * y[k];
            }
            y[i] = s / self.l[i * w + bw];
        }
        y
    }
}

/// One-dimensional kernel ridge regressor on sorted sample times.
#[derive(Debug, Clone)]
pub struct KernelRidge1d {
    times: Vec<f64>,
    weights: Vec<f64>,
    lengthscale: f64,
    mean: f64,
    scale: f64,
}

impl KernelRidge1d {
    /// Fit to `(times, values)`; `noise` is the ridge added to the unit-amplitude
    /// kernel after standardizing the values.
    pub fn fit(times: &[f64], values: &[f64], lengthscale: f64, noise: f64) -> Result<Self> {
        if times.len() != values.len() || times.is_empty() {
            return Err(invalid("kernel ridge needs equal-length, non-empty inputs"));
        }
        if !(lengthscale > 0.0) || !(noise >= 0.0) {
            return Err(invalid("kernel ridge needs lengthscale > 0 and noise >= 0"));
        }
        if times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(invalid("kernel ridge needs strictly increasing times"));
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        let scale = var.sqrt();
        if scale == 0.0 || !scale.is_finite() {
            return Ok(KernelRidge1d {
                times: times.to_vec(),
                weights: vec![0.0; times.len()],
                lengthscale,
                mean,
                scale: 1.0,
            });
        }
        let y: Vec<f64> = values.iter().map(|v| (v - mean) / scale).collect();
        let cutoff = SUPPORT * lengthscale;
        let mut bw = 0;
        for i in 0..times.len() {
            let end = times.partition_point(|&t| t - times[i] <= cutoff);
            bw = bw.max(end - 1 - i);
        }
        let inv2l2 = 0.5 / (lengthscale * lengthscale);
        let chol = BandedCholesky::factor(times.len(), bw, |i, j| {
            let d = times[i] - times[j];
            let k = if d.abs() > cutoff { 0.0 } else { (-d * d * inv2l2).exp() };
            if i == j {
                k + noise
            } else {
                k
            }
        })?;
        let weights = chol.solve(&y);
        Ok(KernelRidge1d { times: times.to_vec(), weights, lengthscale, mean, scale })
    }

    pub fn predict(&self, t: f64) -> f64 {
        let cutoff = SUPPORT * self.lengthscale;
        let lo = self.times.partition_point(|&s| s < t - cutoff);
        let hi = self.times.partition_point(|&s| s <= t + cutoff);
        let inv2l2 = 0.5 / (self.lengthscale * self.lengthscale);
        let s: f64 = (lo..hi)
            .map(|j| {
                let d = t - self.times[j];
                (-d * d * inv2l2).exp() * self.weights[j]
            })
            .sum();
        self.mean + self.scale * s
    }
}

fn cv_error(times: &[f64], values: &[f64], folds: &[Vec<usize>], lengthscale: f64, noise: f64) -> Result<f64> {
    let n = times.len();
    let mut sse = 0.0;
    let mut in_test = vec![false; n];
    for fold in folds {
        in_test.iter_mut().for_each(|b| *b = false);
        for &i in fold {
            in_test[i] = true;
        }
        let (mut tt, mut tv) = (Vec::with_capacity(n), Vec::with_capacity(n));
        for i in 0..n {
            if !in_test[i] {
                tt.push(times[i]);
                tv.push(values[i]);
            }
        }
        let model = KernelRidge1d::fit(&tt, &tv, lengthscale, noise)?;
        sse += fold.iter().map(|&i| (model.predict(times[i]) - values[i]).powi(2)).sum::<f64>();
    }
    Ok(sse / n as f64)
}

/// Grid search over `(lengthscale, noise)` by k-fold CV, then refit on all data.
fn select_and_fit(times: &[f64], values: &[f64], opts: &RegularizeOptions, folds: &[Vec<usize>]) -> Result<(KernelRidge1d, Selection)> {
    let combos: Vec<(f64, f64)> = opts
        .lengthscales
        .iter()
        .flat_map(|&l| opts.noises.iter().map(move |&nu| (l, nu)))
        .collect();
    let errors: Vec<Result<f64>> = combos
        .par_iter()
        .map(|&(l, nu)| cv_error(times, values, folds, l, nu))
        .collect();
    let mut best: Option<Selection> = None;
    for ((l, nu), e) in combos.iter().zip(errors) {
        let e = e?;
        if best.is_none_or(|b| e < b.cv_mse) {
            best = Some(Selection { lengthscale: *l, noise: *nu, cv_mse: e });
        }
    }
    let best = best.ok_or_else(|| invalid("empty hyperparameter grid"))?;
    let model = KernelRidge1d::fit(times, values, best.lengthscale, best.noise)?;
    Ok((model, best))
}

/// Smooth speed and (unwrapped) direction independently, returning a
/// regularized series on the original timestamps.
pub fn regularize_wind(raw: &WindSeries, opts: &RegularizeOptions) -> Result<(WindSeries, RegularizeReport)> {
    opts.validate()?;
    if raw.len() < 2 * opts.folds {
        return Err(Error::InsufficientData(format!(
            "{} records for {}-fold cross-validation (need at least {})",
            raw.len(),
            opts.folds,
            2 * opts.folds
        )));
    }
    let times = raw.times();
    let mut perm: Vec<usize> = (0..times.len()).collect();
    perm.shuffle(&mut ChaCha8Rng::seed_from_u64(opts.seed));
    let mut folds = vec![Vec::new(); opts.folds];
    for (m, i) in perm.into_iter().enumerate() {
        folds[m % opts.folds].push(i);
    }

    let speeds = raw.speeds();
    let dirs = unwrap_direction(&raw.directions());
    let (speed_model, speed_sel) = select_and_fit(&times, &speeds, opts, &folds)?;
    let (dir_model, dir_sel) = select_and_fit(&times, &dirs, opts, &folds)?;

    let records = times
        .iter()
        .map(|&t| WindRecord {
            time: t,
            speed: speed_model.predict(t).max(0.0),
            direction: wrap_direction(dir_model.predict(t)),
        })
        .collect();
    let mut series = WindSeries::new(records, SeriesKind::Regularized)?;
    series.station = raw.station.clone();
    Ok((series, RegularizeReport { speed: speed_sel, direction: dir_sel }))
}
