use dustfall::inversion::{
    conditional_moments, effective_sample_size, gibbs_sample, posterior_summary, synthesize_data, GibbsOptions, PriorSpec,
};
use nalgebra::DMatrix;

fn toy() -> (DMatrix<f64>, Vec<f64>, Vec<f64>) {
    let g = DMatrix::from_row_slice(2, 2, &[1.0, 0.4, 0.2, 0.8]);
    let d = vec![1.3, 0.9];
    (g, d, vec![0.5, 0.5])
}

#[test]
fn fixed_lambda_chain_matches_conditional_moments() {
    let (g, d, q_eng) = toy();
    let sigma = 0.3;
    let lambda = 2.0;
    let prior = PriorSpec { q_eng: q_eng.clone(), alpha0: 1.0, beta0: 1.0, sigma };
    let k = 100_000;
    let s = gibbs_sample(&g, &d, &prior, k, 17, GibbsOptions { fixed_lambda: Some(lambda) }).unwrap();
    let (mean, cov) = conditional_moments(&g, &d, sigma, lambda, &q_eng).unwrap();
    let n = k as f64;
    for j in 0..2 {
        let x: Vec<f64> = s.q.iter().map(|q| q[j]).collect();
        let m = x.iter().sum::<f64>() / n;
        let v = x.iter().map(|a| (a - m).powi(2)).sum::<f64>() / (n - 1.0);
        assert!((m - mean[j]).abs() < 3.0 * (cov[(j, j)] / n).sqrt(), "mean {j}: {m} vs {}", mean[j]);
        assert!((v - cov[(j, j)]).abs() < 3.0 * cov[(j, j)] * (2.0 / (n - 1.0)).sqrt(), "var {j}: {v} vs {}", cov[(j, j)]);
    }
    let c01 = s.q.iter().map(|q| (q[0] - mean[0]) * (q[1] - mean[1])).sum::<f64>() / n;
    assert!((c01 - cov[(0, 1)]).abs() < 0.02 * (cov[(0, 0)] * cov[(1, 1)]).sqrt());
}

#[test]
fn data_never_inflates_prior_variance() {
    let (g, d, q_eng) = toy();
    for lambda in [1e-3, 0.1, 1.0, 50.0] {
        let (_, cov) = conditional_moments(&g, &d, 0.2, lambda, &q_eng).unwrap();
        let gap = DMatrix::identity(2, 2) / lambda - cov;
        let eig = gap.symmetric_eigenvalues();
        assert!(eig.iter().all(|&e| e >= -1e-12 / lambda), "lambda {lambda}: {eig}");
    }
}

#[test]
fn identical_seeds_reproduce_chains() {
    let (g, d, q_eng) = toy();
    let prior = PriorSpec { q_eng, alpha0: 2.0, beta0: 0.5, sigma: 0.2 };
    let a = gibbs_sample(&g, &d, &prior, 500, 9, GibbsOptions::default()).unwrap();
    let b = gibbs_sample(&g, &d, &prior, 500, 9, GibbsOptions::default()).unwrap();
    let c = gibbs_sample(&g, &d, &prior, 500, 10, GibbsOptions::default()).unwrap();
    assert_eq!(a, b);
    assert_ne!(a, c);
}

#[test]
fn lambda_chain_mixes_on_synthetic_benchmark() {
    let g = DMatrix::from_fn(9, 4, |r, c| 1e-3 * (1.0 + ((r * 7 + c * 3) % 5) as f64) / (1.0 + (r as f64 - 2.0 * c as f64).abs()));
    let q_true = [35.0, 80.0, 5.0, 5.0];
    let (d, sigma) = synthesize_data(&g, &q_true, 10.0, 3).unwrap();
    let prior = PriorSpec { q_eng: q_true.to_vec(), alpha0: 1.0, beta0: 1e-4, sigma };
    let k = 20_000;
    let s = gibbs_sample(&g, &d, &prior, k, 4, GibbsOptions::default()).unwrap();
    let ess = effective_sample_size(&s.lambda);
    assert!(ess > 0.1 * k as f64, "lambda ESS {ess}");
    let sum = posterior_summary(&s, 0.2).unwrap();
    assert_eq!(sum.kept + sum.burn_in, k);
}
