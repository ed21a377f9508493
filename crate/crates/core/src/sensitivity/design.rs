//! Space-filling designs on the unit hypercube.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DesignKind {
    LatinHypercube,
    Uniform,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Design {
    /// `K x p` points in `[0, 1)^p`.
    pub points: Vec<Vec<f64>>,
    pub seed: u64,
    pub kind: DesignKind,
}

impl Design {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.points.first().map_or(0, Vec::len)
    }
}

/// Latin hypercube: each column is a random permutation of the `K` strata
/// with a uniform offset inside each stratum.
pub fn lhs_design(k: usize, p: usize, seed: u64) -> Result<Design> {
    if k == 0 || p == 0 {
        return Err(invalid("design needs K >= 1 and p >= 1"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut points = vec![vec![0.0; p]; k];
    let mut strata: Vec<usize> = (0..k).collect();
    for col in 0..p {
        strata.shuffle(&mut rng);
        for (row, &s) in strata.iter().enumerate() {
            let u: f64 = rng.random();
            // keep the point strictly inside its stratum even after rounding
            points[row][col] = ((s as f64 + u) / k as f64).min((s + 1) as f64 / k as f64 - f64::EPSILON);
        }
    }
    Ok(Design { points, seed, kind: DesignKind::LatinHypercube })
}

/// Independent uniform points.
pub fn uniform_design(k: usize, p: usize, rng: &mut impl Rng) -> Vec<Vec<f64>> {
    (0..k).map(|_| (0..p).map(|_| rng.random::<f64>()).collect()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn single_point() {
        let d = lhs_design(1, 3, 0).unwrap();
        assert_eq!(d.len(), 1);
        assert!(d.points[0].iter().all(|&v| (0.0..1.0).contains(&v)));
    }

    #[test]
    fn seeded_design_is_reproducible() {
        let a = lhs_design(32, 5, 11).unwrap();
        let b = lhs_design(32, 5, 11).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, lhs_design(32, 5, 12).unwrap());
    }

    proptest! {
        #[test]
        fn one_point_per_stratum(k in 1usize..200, p in 1usize..6, seed in any::<u64>()) {
            let d = lhs_design(k, p, seed).unwrap();
            for col in 0..p {
                let mut hit = vec![0u32; k];
                for row in &d.points {
                    let v = row[col];
                    prop_assert!((0.0..1.0).contains(&v));
                    hit[(v * k as f64).floor() as usize] += 1;
                }
                prop_assert!(hit.iter().all(|&h| h == 1));
            }
        }
    }
}
