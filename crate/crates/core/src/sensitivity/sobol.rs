//! Monte Carlo estimates of main-effect and total-effect Sobol indices.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::design::uniform_design;
use crate::error::{invalid, Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SobolResult {
    /// Main effects.
    pub first: Vec<f64>,
    /// Total effects.
    pub total: Vec<f64>,
    pub first_stderr: Vec<f64>,
    pub total_stderr: Vec<f64>,
    pub n_base: usize,
    pub evaluations: usize,
}

impl SobolResult {
    /// Index of the parameter with the largest total effect.
    pub fn dominant_total(&self) -> usize {
        (0..self.total.len()).max_by(|&a, &b| self.total[a].total_cmp(&self.total[b])).unwrap_or(0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SobolOptions {
    pub n_base: usize,
    pub bootstrap: usize,
    pub seed: u64,
}

impl SobolOptions {
    pub fn new(n_base: usize, seed: u64) -> Self {
        SobolOptions { n_base, bootstrap: 200, seed }
    }
}

/// Function values on the paired matrices: `f(A)`, `f(B)` and `f(A_B^i)`
/// where `A_B^i` is `A` with column `i` taken from `B`.
struct Evaluations {
    fa: Vec<f64>,
    fb: Vec<f64>,
    fab: Vec<Vec<f64>>,
}

fn estimate(ev: &Evaluations, rows: &[usize]) -> Option<(Vec<f64>, Vec<f64>)> {
    let n = rows.len() as f64;
    let all = rows.iter().flat_map(|&r| [ev.fa[r], ev.fb[r]]);
    let mean = all.clone().sum::<f64>() / (2.0 * n);
    let var = all.map(|v| (v - mean).powi(2)).sum::<f64>() / (2.0 * n - 1.0);
    if !(var > 0.0) {
        return None;
    }
    let mut first = Vec::with_capacity(ev.fab.len());
    let mut total = Vec::with_capacity(ev.fab.len());
    for fab in &ev.fab {
        let (mut s1, mut st) = (0.0, 0.0);
        for &r in rows {
            s1 += (ev.fb[r] - fab[r]).powi(2);
            st += (ev.fa[r] - fab[r]).powi(2);
        }
        first.push((var - 0.5 * s1 / n) / var);
        total.push(0.5 * st / n / var);
    }
    Some((first, total))
}

fn std_dev(x: &[f64]) -> f64 {
    let n = x.len() as f64;
    let m = x.iter().sum::<f64>() / n;
    (x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
}

/// Jansen estimators on a Saltelli pair of uniform matrices, with bootstrap
/// standard errors. `f` maps a point of `[0, 1)^p` to a scalar.
pub fn sobol_indices<F>(f: F, p: usize, opts: &SobolOptions) -> Result<SobolResult>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    if opts.n_base < 100 {
        return Err(invalid(format!("n_base must be at least 100, got {}", opts.n_base)));
    }
    if p == 0 {
        return Err(invalid("need at least one parameter"));
    }
    if opts.bootstrap < 2 {
        return Err(invalid("need at least two bootstrap replicates"));
    }
    let n = opts.n_base;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let a = uniform_design(n, p, &mut rng);
    let b = uniform_design(n, p, &mut rng);
    let eval = |m: &[Vec<f64>]| -> Vec<f64> { m.par_iter().map(|x| f(x)).collect() };
    let mut fa = eval(&a);
    let mut fb = eval(&b);
    let mut fab: Vec<Vec<f64>> = (0..p)
        .map(|i| {
            let m: Vec<Vec<f64>> = a
                .iter()
                .zip(&b)
                .map(|(ra, rb)| {
                    let mut r = ra.clone();
                    r[i] = rb[i];
                    r
                })
                .collect();
            eval(&m)
        })
        .collect();
    if fa.iter().chain(&fb).chain(fab.iter().flatten()).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("model output".into()));
    }
    // centre on the empirical mean
    let mean = (fa.iter().sum::<f64>() + fb.iter().sum::<f64>()) / (2 * n) as f64;
    for v in fa.iter_mut().chain(fb.iter_mut()).chain(fab.iter_mut().flatten()) {
        *v -= mean;
    }
    let ev = Evaluations { fa, fb, fab };
    let rows: Vec<usize> = (0..n).collect();
    let (first, total) = estimate(&ev, &rows).ok_or(Error::ZeroVariance)?;

    let seeds: Vec<u64> = (0..opts.bootstrap).map(|_| rng.random()).collect();
    let reps: Vec<(Vec<f64>, Vec<f64>)> = seeds
        .par_iter()
        .filter_map(|&s| {
            let mut r = ChaCha8Rng::seed_from_u64(s);
            let idx: Vec<usize> = (0..n).map(|_| r.random_range(0..n)).collect();
            estimate(&ev, &idx)
        })
        .collect();
    if reps.len() < 2 {
        return Err(Error::ZeroVariance);
    }
    let se = |which: fn(&(Vec<f64>, Vec<f64>)) -> &Vec<f64>| -> Vec<f64> {
        (0..p).map(|i| std_dev(&reps.iter().map(|r| which(r)[i]).collect::<Vec<_>>())).collect()
    };
    Ok(SobolResult {
        first,
        total,
        first_stderr: se(|r| &r.0),
        total_stderr: se(|r| &r.1),
        n_base: n,
        evaluations: n * (p + 2),
    })
}
