//! Backward-Euler diffusion along one grid line with Robin ends.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Boundary relation `alpha c + beta dc/dn = 0` (outward normal), discretized
/// on the ghost cell as `alpha (C_g + C_e)/2 + beta (C_g - C_e)/dx = 0`.
///
/// `transfer` is an extra velocity carrying `transfer * (C_g + C_e)/2` out
/// through the face; it is how settling reaches the ground.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RobinSpec {
    pub alpha: f64,
    pub beta: f64,
    #[serde(default)]
    pub transfer: f64,
}

impl RobinSpec {
    pub const NEUMANN: RobinSpec = RobinSpec { alpha: 0.0, beta: 1.0, transfer: 0.0 };

    pub fn new(alpha: f64, beta: f64) -> Self {
        RobinSpec { alpha, beta, transfer: 0.0 }
    }

    /// Relation that forces the ghost value to zero at spacing `dx`.
    pub fn zero_ghost(dx: f64) -> Self {
        RobinSpec { alpha: 2.0 / dx, beta: 1.0, transfer: 0.0 }
    }

    /// `C_ghost = ratio * C_edge`.
    pub fn ghost_ratio(&self, dx: f64) -> Result<f64> {
        if self.alpha == 0.0 && self.beta == 0.0 {
            return Err(Error::SingularSystem("Robin coefficients alpha = beta = 0".into()));
        }
        let denom = 2.0 * self.beta + self.alpha * dx;
        if !(denom > 0.0) {
            return Err(Error::SingularSystem(format!(
                "Robin relation has no positive ghost ratio (2 beta + alpha dx = {denom})"
            )));
        }
        Ok((2.0 * self.beta - self.alpha * dx) / denom)
    }
}

/// Ground condition balancing settling, turbulent flux and deposition:
/// `(u_dep - u_set) c + s_z dc/dn = 0` with settling carried by `transfer`.
pub fn ground_robin_spec(u_dep: f64, u_set: f64, s_z_ground: f64) -> RobinSpec {
    let alpha = u_dep - u_set;
    if alpha == 0.0 {
        RobinSpec { alpha: 0.0, beta: 1.0, transfer: u_set }
    } else {
        RobinSpec { alpha, beta: s_z_ground.max(0.0), transfer: u_set }
    }
}

/// Mass per unit face area removed through each end, and the ghost values
/// of the updated state.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct LineExchange {
    pub lo: f64,
    pub hi: f64,
    pub ghost_lo: f64,
    pub ghost_hi: f64,
}

/// Scratch space for the tridiagonal solve.
#[derive(Debug, Default, Clone)]
pub struct TridiagWork {
    sub: Vec<f64>,
    diag: Vec<f64>,
    sup: Vec<f64>,
    rhs: Vec<f64>,
}

/// Thomas algorithm. `sub[0]` and `sup[n-1]` are ignored. Overwrites `diag` and `rhs`;
/// the solution is left in `rhs`.
pub fn solve_tridiagonal(sub: &[f64], diag: &mut [f64], sup: &[f64], rhs: &mut [f64]) -> Result<()> {
    let n = diag.len();
    if n == 0 {
        return Ok(());
    }
    for i in 1..n {
        if diag[i - 1] == 0.0 || !diag[i - 1].is_finite() {
            return Err(Error::SingularSystem(format!("zero pivot at row {}", i - 1)));
        }
        let m = sub[i] / diag[i - 1];
        diag[i] -= m * sup[i - 1];
        rhs[i] -= m * rhs[i - 1];
    }
    if diag[n - 1] == 0.0 || !diag[n - 1].is_finite() {
        return Err(Error::SingularSystem(format!("zero pivot at row {}", n - 1)));
    }
    rhs[n - 1] /= diag[n - 1];
    for i in (0..n - 1).rev() {
        rhs[i] = (rhs[i] - sup[i] * rhs[i + 1]) / diag[i];
    }
    Ok(())
}

/// Implicit update of `row` in place.
///
/// `face_diffusivities` has `N + 1` entries; entries 0 and N sit on the
/// boundary faces.
pub fn diffuse_1d_step(
    row: &mut [f64],
    face_diffusivities: &[f64],
    dt: f64,
    dx: f64,
    bc_lo: RobinSpec,
    bc_hi: RobinSpec,
    work: &mut TridiagWork,
) -> Result<LineExchange> {
    let n = row.len();
    assert_eq!(face_diffusivities.len(), n + 1, "need N + 1 face diffusivities");
    if n == 0 {
        return Ok(LineExchange::default());
    }
    if face_diffusivities.iter().any(|s| !(*s >= 0.0)) {
        return Err(Error::InvalidParameter("diffusivities must be >= 0".into()));
    }
    let rho_lo = bc_lo.ghost_ratio(dx)?;
    let rho_hi = bc_hi.ghost_ratio(dx)?;
    let r = dt / (dx * dx);
    // loss rate coefficient of the edge cell through each boundary face
    let k_lo = face_diffusivities[0] * (1.0 - rho_lo) / dx + bc_lo.transfer * 0.5 * (1.0 + rho_lo);
    let k_hi = face_diffusivities[n] * (1.0 - rho_hi) / dx + bc_hi.transfer * 0.5 * (1.0 + rho_hi);

    work.sub.clear();
    work.diag.clear();
    work.sup.clear();
    work.rhs.clear();
    for i in 0..n {
        let s_w = face_diffusivities[i];
        let s_e = face_diffusivities[i + 1];
        let mut d = 1.0;
        let (mut lo, mut up) = (0.0, 0.0);
        if i > 0 {
            d += r * s_w;
            lo = -r * s_w;
        } else {
            d += dt / dx * k_lo;
        }
        if i + 1 < n {
            d += r * s_e;
            up = -r * s_e;
        } else {
            d += dt / dx * k_hi;
        }
        work.sub.push(lo);
        work.diag.push(d);
        work.sup.push(up);
        work.rhs.push(row[i]);
    }
    solve_tridiagonal(&work.sub, &mut work.diag, &work.sup, &mut work.rhs)?;
    row.copy_from_slice(&work.rhs);
    Ok(LineExchange {
        lo: dt * k_lo * row[0],
        hi: dt * k_hi * row[n - 1],
        ghost_lo: rho_lo * row[0],
        ghost_hi: rho_hi * row[n - 1],
    })
}
