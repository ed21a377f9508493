//! First-order upwind advection along one grid line.

use crate::error::{Error, Result};

/// Courant numbers up to 1 are accepted; above that the update is unstable.
const COURANT_LIMIT: f64 = 1.0 + 1e-12;

/// What happens at the low end of the line.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LowerFace {
    /// Outflow only: the ghost value is zero, nothing enters.
    Outflow,
    /// No flux crosses the face.
    Reflecting,
}

/// Mass per unit face area leaving through each end during the step.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct LineOutflow {
    pub lo: f64,
    pub hi: f64,
}

/// Largest Courant number `|U| dt / dx` over the faces.
pub fn courant_number(edge_velocities: &[f64], dt: f64, dx: f64) -> f64 {
    edge_velocities.iter().fold(0.0f64, |m, u| m.max(u.abs())) * dt / dx
}

/// Conservative upwind update of `row` in place.
///
/// `edge_velocities` holds the `N + 1` face velocities; face `f` separates
/// cells `f - 1` and `f`. Ghost values outside the row are zero, so the
/// boundary faces only let mass out.
pub fn advect_1d_step(row: &mut [f64], edge_velocities: &[f64], dt: f64, dx: f64) -> Result<LineOutflow> {
    advect_line(row, edge_velocities, dt, dx, LowerFace::Outflow)
}

pub fn advect_line(row: &mut [f64], edge_velocities: &[f64], dt: f64, dx: f64, lower: LowerFace) -> Result<LineOutflow> {
    let n = row.len();
    assert_eq!(edge_velocities.len(), n + 1, "need N + 1 face velocities");
    if n == 0 {
        return Ok(LineOutflow::default());
    }
    let courant = courant_number(edge_velocities, dt, dx);
    if !(courant <= COURANT_LIMIT) {
        return Err(Error::CflViolation { courant });
    }
    let c = dt / dx;
    let flux = |u: f64, left: f64, right: f64| u.max(0.0) * left + u.min(0.0) * right;

    let mut f_lo = match lower {
        LowerFace::Outflow => flux(edge_velocities[0], 0.0, row[0]),
        LowerFace::Reflecting => 0.0,
    };
    let out_lo = -f_lo * dt;
    for i in 0..n {
        let right = if i + 1 < n { row[i + 1] } else { 0.0 };
        let f_hi = flux(edge_velocities[i + 1], row[i], right);
        row[i] -= c * (f_hi - f_lo);
        f_lo = f_hi;
    }
    Ok(LineOutflow { lo: out_lo, hi: f_lo * dt })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn zero_velocity_is_identity() {
        let mut row = vec![0.3, 1.0, 2.0, 0.0];
        let before = row.clone();
        advect_1d_step(&mut row, &[0.0; 5], 10.0, 1.0).unwrap();
        assert_eq!(row, before);
    }

    #[test]
    fn unit_courant_shifts_exactly() {
        let mut row = vec![1.0, 2.0, 3.0, 4.0];
        let out = advect_1d_step(&mut row, &[2.0; 5], 0.5, 1.0).unwrap();
        assert_eq!(row, vec![0.0, 1.0, 2.0, 3.0]);
        assert_eq!(out.hi, 4.0 * 2.0 * 0.5);
        assert_eq!(out.lo, 0.0);
        let mut row = vec![1.0, 2.0, 3.0, 4.0];
        advect_1d_step(&mut row, &[-2.0; 5], 0.5, 1.0).unwrap();
        assert_eq!(row, vec![2.0, 3.0, 4.0, 0.0]);
    }

    #[test]
    fn hand_stencil() {
        let mut row = vec![0.0, 1.0, 0.0];
        advect_1d_step(&mut row, &[1.0; 4], 0.5, 1.0).unwrap();
        assert_eq!(row, vec![0.0, 0.5, 0.5]);
    }

    #[test]
    fn cfl_violation_rejected() {
        let mut row = vec![1.0; 3];
        assert!(matches!(advect_1d_step(&mut row, &[3.0; 4], 1.0, 1.0), Err(Error::CflViolation { .. })));
    }

    #[test]
    fn reflecting_floor_keeps_mass() {
        let mut row = vec![0.0, 1.0, 2.0];
        let out = advect_line(&mut row, &[-0.5; 4], 1.0, 1.0, LowerFace::Reflecting).unwrap();
        assert_eq!(out.lo, 0.0);
        assert!((row.iter().sum::<f64>() - 3.0).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn conservative_and_positive(
            row in proptest::collection::vec(0.0f64..10.0, 1..30),
            seed in proptest::collection::vec(-1.0f64..1.0, 31),
            courant in 0.0f64..0.5,
        ) {
            let n = row.len();
            let u: Vec<f64> = seed[..=n].to_vec();
            let mut r = row.clone();
            let out = advect_1d_step(&mut r, &u, courant, 1.0).unwrap();
            let before: f64 = row.iter().sum();
            let after: f64 = r.iter().sum();
            prop_assert!((before - after - out.lo - out.hi).abs() < 1e-11 * (1.0 + before));
            prop_assert!(r.iter().all(|&v| v >= -1e-12));
        }
    }
}
