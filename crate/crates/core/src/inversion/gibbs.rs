//! Normal-Gamma hierarchical posterior and its block Gibbs sampler.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// `q | lambda ~ N(q_eng, I / lambda)`, `lambda ~ Gamma(alpha0, rate beta0)`,
/// `d | q ~ N(G q, sigma^2 I)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriorSpec {
    pub q_eng: Vec<f64>,
    pub alpha0: f64,
    pub beta0: f64,
    pub sigma: f64,
}

impl PriorSpec {
    pub fn new(q_eng: Vec<f64>, sigma: f64) -> Self {
        PriorSpec { q_eng, alpha0: 1.0, beta0: 1e-4, sigma }
    }

    pub fn validate(&self, n_sources: usize) -> Result<()> {
        if self.q_eng.len() != n_sources {
            return Err(invalid(format!("prior has {} rates for {} sources", self.q_eng.len(), n_sources)));
        }
        if !(self.alpha0 > 0.0 && self.beta0 > 0.0) || !self.alpha0.is_finite() || !self.beta0.is_finite() {
            return Err(invalid("alpha0 and beta0 must be positive and finite"));
        }
        if !(self.sigma > 0.0) || !self.sigma.is_finite() {
            return Err(invalid(format!("noise std must be positive, got {}", self.sigma)));
        }
        if self.q_eng.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("engineering estimates".into()));
        }
        Ok(())
    }
}

fn check_finite(g: &DMatrix<f64>, d: &[f64]) -> Result<()> {
    if g.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("observation map".into()));
    }
    if d.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("observations".into()));
    }
    if g.nrows() != d.len() {
        return Err(invalid(format!("observation map has {} rows but {} observations", g.nrows(), d.len())));
    }
    Ok(())
}

/// Mean and covariance of `q` given `lambda`:
/// `C = (lambda I + G^T G / sigma^2)^-1`, `q = q_eng + C G^T (d - G q_eng) / sigma^2`.
pub fn conditional_moments(
    g: &DMatrix<f64>,
    d_obs: &[f64],
    sigma: f64,
    lambda: f64,
    q_eng: &[f64],
) -> Result<(DVector<f64>, DMatrix<f64>)> {
    check_finite(g, d_obs)?;
    if !(lambda > 0.0 && sigma > 0.0) || !lambda.is_finite() || !sigma.is_finite() || q_eng.iter().any(|v| !v.is_finite())
    {
        return Err(Error::NonFinite("conditional moment inputs".into()));
    }
    let nq = g.ncols();
    let s2 = sigma * sigma;
    let q0 = DVector::from_column_slice(q_eng);
    let precision = DMatrix::identity(nq, nq) * lambda + g.transpose() * g / s2;
    let chol = precision
        .cholesky()
        .ok_or_else(|| Error::LinearAlgebra("conditional precision is not positive definite".into()))?;
    let mut cov = chol.inverse();
    cov = (&cov + cov.transpose()) * 0.5;
    let resid = DVector::from_column_slice(d_obs) - g * &q0;
    let mean = &q0 + chol.solve(&(g.transpose() * resid / s2));
    Ok((mean, cov))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PosteriorSamples {
    /// `K x Nq` draws of the emission rates.
    pub q: Vec<Vec<f64>>,
    pub lambda: Vec<f64>,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct GibbsOptions {
    /// Holds `lambda` at this value instead of sampling it.
    pub fixed_lambda: Option<f64>,
}

/// Block Gibbs sampler alternating `q | lambda` and `lambda | q`, started at
/// `lambda = alpha0 / beta0`.
pub fn gibbs_sample(
    g: &DMatrix<f64>,
    d_obs: &[f64],
    prior: &PriorSpec,
    k: usize,
    seed: u64,
    opts: GibbsOptions,
) -> Result<PosteriorSamples> {
    check_finite(g, d_obs)?;
    let nq = g.ncols();
    prior.validate(nq)?;
    if k == 0 {
        return Err(invalid("need at least one Gibbs iteration"));
    }
    if let Some(l) = opts.fixed_lambda {
        if !(l > 0.0) || !l.is_finite() {
            return Err(invalid(format!("fixed lambda must be positive, got {l}")));
        }
    }
    let s2 = prior.sigma * prior.sigma;
    let q0 = DVector::from_column_slice(&prior.q_eng);
    // G^T G / sigma^2 = V diag(e) V^T, so every conditional is diagonal in V
    let eig = SymmetricEigen::new(g.transpose() * g / s2);
    let v = eig.eigenvectors;
    let e: Vec<f64> = eig.eigenvalues.iter().map(|x| x.max(0.0)).collect();
    let b = v.transpose() * (g.transpose() * (DVector::from_column_slice(d_obs) - g * &q0) / s2);
    let shape = prior.alpha0 + 0.5 * nq as f64;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut lambda = opts.fixed_lambda.unwrap_or(prior.alpha0 / prior.beta0);
    let mut qs = Vec::with_capacity(k);
    let mut lambdas = Vec::with_capacity(k);
    let mut y = DVector::zeros(nq);
    for _ in 0..k {
        for m in 0..nq {
            let z: f64 = StandardNormal.sample(&mut rng);
            let p = lambda + e[m];
            y[m] = b[m] / p + z / p.sqrt();
        }
        let q = &q0 + &v * &y;
        if let Some(l) = opts.fixed_lambda {
            lambda = l;
        } else {
            let rate = prior.beta0 + 0.5 * (&q - &q0).norm_squared();
            let gamma = Gamma::new(shape, 1.0 / rate).map_err(|e| Error::LinearAlgebra(format!("gamma draw: {e}")))?;
            lambda = gamma.sample(&mut rng);
            if !(lambda > 0.0) {
                lambda = f64::MIN_POSITIVE;
            }
        }
        qs.push(q.iter().copied().collect());
        lambdas.push(lambda);
    }
    Ok(PosteriorSamples { q: qs, lambda: lambdas, seed })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourceSummary {
    pub mean: f64,
    pub std: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    /// Share of kept draws below zero.
    pub negative_fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PosteriorSummary {
    pub sources: Vec<SourceSummary>,
    pub total: SourceSummary,
    pub covariance: Vec<Vec<f64>>,
    pub lambda_mean: f64,
    pub lambda_std: f64,
    pub lambda_ess: f64,
    pub kept: usize,
    pub burn_in: usize,
}

impl PosteriorSummary {
    pub fn means(&self) -> Vec<f64> {
        self.sources.iter().map(|s| s.mean).collect()
    }

    pub fn covariance_matrix(&self) -> DMatrix<f64> {
        let n = self.covariance.len();
        DMatrix::from_fn(n, n, |i, j| self.covariance[i][j])
    }
}

/// Linear-interpolated sample quantile of sorted data.
fn quantile(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

fn summarize(x: &[f64]) -> SourceSummary {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let var = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
    let mut s = x.to_vec();
    s.sort_by(f64::total_cmp);
    SourceSummary {
        mean,
        std: var.sqrt(),
        ci_lo: quantile(&s, 0.025),
        ci_hi: quantile(&s, 0.975),
        negative_fraction: x.iter().filter(|&&v| v < 0.0).count() as f64 / n,
    }
}

/// Effective sample size from the initial positive sequence of
/// autocorrelation pairs.
pub fn effective_sample_size(x: &[f64]) -> f64 {
    let n = x.len();
    if n < 4 {
        return n as f64;
    }
    let mean = x.iter().sum::<f64>() / n as f64;
    let c0 = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64;
    if c0 == 0.0 {
        return n as f64;
    }
    let rho = |lag: usize| -> f64 {
        (0..n - lag).map(|t| (x[t] - mean) * (x[t + lag] - mean)).sum::<f64>() / (n as f64 * c0)
    };
    let mut sum = 0.0;
    let mut lag = 0;
    while lag + 1 < n {
        let pair = rho(lag) + rho(lag + 1);
        if pair <= 0.0 {
            break;
        }
        sum += pair;
        lag += 2;
    }
    let tau = (2.0 * sum - 1.0).max(1e-12);
    (n as f64 / tau).min(n as f64)
}

pub fn posterior_summary(samples: &PosteriorSamples, burn_in_fraction: f64) -> Result<PosteriorSummary> {
    if !(0.0..1.0).contains(&burn_in_fraction) {
        return Err(invalid(format!("burn-in fraction must lie in [0, 1), got {burn_in_fraction}")));
    }
    let k = samples.q.len();
    let burn = (burn_in_fraction * k as f64).floor() as usize;
    let kept = k - burn;
    if kept < 100 {
        return Err(Error::InsufficientData(format!("{kept} draws after burn-in; need at least 100")));
    }
    let draws = &samples.q[burn..];
    let nq = draws[0].len();
    let sources: Vec<SourceSummary> =
        (0..nq).map(|j| summarize(&draws.iter().map(|q| q[j]).collect::<Vec<_>>())).collect();
    let totals: Vec<f64> = draws.iter().map(|q| q.iter().sum()).collect();
    let means: Vec<f64> = sources.iter().map(|s| s.mean).collect();
    let mut cov = vec![vec![0.0; nq]; nq];
    for q in draws {
        for a in 0..nq {
            for b in 0..nq {
                cov[a][b] += (q[a] - means[a]) * (q[b] - means[b]);
            }
        }
    }
    for row in &mut cov {
        for v in row.iter_mut() {
            *v /= (kept - 1) as f64;
        }
    }
    let lam = &samples.lambda[burn..];
    let ls = summarize(lam);
    Ok(PosteriorSummary {
        sources,
        total: summarize(&totals),
        covariance: cov,
        lambda_mean: ls.mean,
        lambda_std: ls.std,
        lambda_ess: effective_sample_size(lam),
        kept,
        burn_in: burn,
    })
}

/// Mean `F q` and per-cell standard deviation `sqrt(diag(F C F^T))`.
pub fn push_forward(f: &DMatrix<f64>, q_pm: &[f64], c_post: &DMatrix<f64>) -> Result<(Vec<f64>, Vec<f64>)> {
    let nq = f.ncols();
    if q_pm.len() != nq || c_post.nrows() != nq || c_post.ncols() != nq {
        return Err(invalid("push_forward dimensions disagree"));
    }
    let mean = f * DVector::from_column_slice(q_pm);
    let fc = f * c_post;
    let std = (0..f.nrows())
        .map(|r| fc.row(r).dot(&f.row(r)).max(0.0).sqrt())
        .collect();
    Ok((mean.iter().copied().collect(), std))
}

/// `d = G q + eps`, `eps ~ N(0, sigma^2 I)` with `sigma = rms(G q) / snr`.
/// Returns the data and `sigma`.
pub fn synthesize_data(g: &DMatrix<f64>, q_true: &[f64], snr: f64, seed: u64) -> Result<(Vec<f64>, f64)> {
    if !(snr > 0.0) {
        return Err(invalid(format!("SNR must be positive, got {snr}")));
    }
    if q_true.len() != g.ncols() {
        return Err(invalid("q_true length does not match the observation map"));
    }
    let clean = g * DVector::from_column_slice(q_true);
    let rms = (clean.norm_squared() / clean.len().max(1) as f64).sqrt();
    let sigma = if snr.is_infinite() { 0.0 } else { rms / snr };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = clean
        .iter()
        .map(|c| {
            let z: f64 = StandardNormal.sample(&mut rng);
            c + sigma * z
        })
        .collect();
    Ok((d, sigma))
}
