//! Closed-form surface-layer closures: Stokes settling, the power-law wind
//! profile, friction velocity, Golder's Monin-Obukhov length, the stability
//! function and the eddy diffusivities.
//!
//! Heights below `z_cut` are clamped to `z_cut` in both the wind profile and
//! the vertical diffusivity, which removes the zero-diffusivity degeneracy at
//! the ground.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

pub const DEFAULT_GRAVITY: f64 = 9.8;
pub const DEFAULT_AIR_VISCOSITY: f64 = 1.8e-5;
pub const DEFAULT_KAPPA: f64 = 0.4;
/// Lateral diffusivity used when the Obukhov length is not negative.
pub const DEFAULT_NEUTRAL_LATERAL_DIFFUSIVITY: f64 = 0.25;

/// Pasquill stability class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum StabilityClass {
    A,
    B,
    C,
    D,
    E,
    F,
}

/// Which branch of the stability function applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StabilityRegime {
    Unstable,
    Neutral,
    Stable,
}

impl StabilityClass {
    pub const ALL: [StabilityClass; 6] = [
        StabilityClass::A,
        StabilityClass::B,
        StabilityClass::C,
        StabilityClass::D,
        StabilityClass::E,
        StabilityClass::F,
    ];

    /// Golder coefficients `(a, b)` in `1/L = a + b log10(z0)`.
    pub fn golder_coefficients(self) -> (f64, f64) {
        match self {
            StabilityClass::A => (-0.096, 0.029),
            StabilityClass::B => (-0.037, 0.029),
            StabilityClass::C => (-0.002, 0.018),
            StabilityClass::D => (0.0, 0.0),
            StabilityClass::E => (0.004, -0.018),
            StabilityClass::F => (0.035, -0.036),
        }
    }

    pub fn regime(self) -> StabilityRegime {
        match self {
            StabilityClass::A | StabilityClass::B | StabilityClass::C => StabilityRegime::Unstable,
            StabilityClass::D => StabilityRegime::Neutral,
            StabilityClass::E | StabilityClass::F => StabilityRegime::Stable,
        }
    }

    pub fn label(self) -> char {
        match self {
            StabilityClass::A => 'A',
            StabilityClass::B => 'B',
            StabilityClass::C => 'C',
            StabilityClass::D => 'D',
            StabilityClass::E => 'E',
            StabilityClass::F => 'F',
        }
    }
}

impl std::str::FromStr for StabilityClass {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "A" | "a" => Ok(StabilityClass::A),
            "B" | "b" => Ok(StabilityClass::B),
            "C" | "c" => Ok(StabilityClass::C),
            "D" | "d" => Ok(StabilityClass::D),
            "E" | "e" => Ok(StabilityClass::E),
            "F" | "f" => Ok(StabilityClass::F),
            other => Err(invalid(format!("unknown stability class {other:?}"))),
        }
    }
}

/// Monin-Obukhov length. `Neutral` stands for an unbounded length, for which
/// the stability function is identically one.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ObukhovLength {
    Finite(f64),
    Neutral,
}

impl ObukhovLength {
    pub fn is_negative(self) -> bool {
        matches!(self, ObukhovLength::Finite(l) if l < 0.0)
    }

    /// `z / L`, zero in the neutral case.
    pub fn scaled_height(self, z: f64) -> f64 {
        match self {
            ObukhovLength::Finite(l) => z / l,
            ObukhovLength::Neutral => 0.0,
        }
    }

    pub fn value(self) -> f64 {
        match self {
            ObukhovLength::Finite(l) => l,
            ObukhovLength::Neutral => f64::INFINITY,
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum ObukhovRepr {
    Number(f64),
    Word(String),
}

impl Serialize for ObukhovLength {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            ObukhovLength::Finite(l) => ObukhovRepr::Number(*l),
            ObukhovLength::Neutral => ObukhovRepr::Word("neutral".into()),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for ObukhovLength {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        match ObukhovRepr::deserialize(d)? {
            ObukhovRepr::Number(l) if l.is_finite() && l != 0.0 => Ok(ObukhovLength::Finite(l)),
            ObukhovRepr::Number(l) if l.is_infinite() => Ok(ObukhovLength::Neutral),
            ObukhovRepr::Number(l) => Err(serde::de::Error::custom(format!(
                "invalid Obukhov length {l}"
            ))),
            ObukhovRepr::Word(w) => match w.to_ascii_lowercase().as_str() {
                "neutral" | "inf" | "+inf" | "-inf" | "infinity" => Ok(ObukhovLength::Neutral),
                _ => Err(serde::de::Error::custom(format!("invalid Obukhov length {w:?}"))),
            },
        }
    }
}

/// Physical properties of the emitted particulate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParticulateParams {
    /// Particle density, kg/m^3.
    pub density: f64,
    /// Particle diameter, m.
    pub diameter: f64,
    /// Molar mass, kg/mol (carried for reporting only).
    pub molar_mass: f64,
    /// Deposition velocity, m/s.
    pub u_dep: f64,
    /// Settling velocity, m/s. `None` derives it from Stokes' law.
    #[serde(default)]
    pub u_set: Option<f64>,
    #[serde(default = "default_gravity")]
    pub gravity: f64,
    #[serde(default = "default_viscosity")]
    pub viscosity: f64,
}

fn default_gravity() -> f64 {
    DEFAULT_GRAVITY
}
fn default_viscosity() -> f64 {
    DEFAULT_AIR_VISCOSITY
}

impl ParticulateParams {
    /// Zinc sulphate values with the settling velocity derived.
    pub fn zinc_sulphate() -> Self {
        ParticulateParams {
            density: 3540.0,
            diameter: 5.0e-6,
            molar_mass: 0.161,
            u_dep: 0.005,
            u_set: None,
            gravity: DEFAULT_GRAVITY,
            viscosity: DEFAULT_AIR_VISCOSITY,
        }
    }

    /// Settling velocity actually used by the solvers.
    pub fn settling(&self) -> Result<f64> {
        match self.u_set {
            Some(v) if v >= 0.0 && v.is_finite() => Ok(v),
            Some(v) => Err(invalid(format!("settling velocity must be >= 0, got {v}"))),
            None => settling_velocity(self),
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("density", self.density),
            ("molar_mass", self.molar_mass),
            ("gravity", self.gravity),
            ("viscosity", self.viscosity),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(invalid(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.diameter >= 0.0 && self.diameter.is_finite()) {
            return Err(invalid(format!("diameter must be >= 0, got {}", self.diameter)));
        }
        if !(self.u_dep >= 0.0 && self.u_dep.is_finite()) {
            return Err(invalid(format!("u_dep must be >= 0, got {}", self.u_dep)));
        }
        self.settling().map(|_| ())
    }
}

/// Site and meteorological parameters shared by the closures.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SiteParams {
    /// Power-law exponent of the wind profile.
    pub gamma: f64,
    /// Roughness length, m.
    pub z0: f64,
    /// Mixing-layer height, m.
    pub z_i: f64,
    /// Monin-Obukhov length, m.
    #[serde(rename = "L")]
    pub obukhov: ObukhovLength,
    /// Cut-off height below which profile and diffusivity are frozen, m.
    pub z_cut: f64,
    /// Anemometer reference height, m.
    #[serde(default = "default_zr")]
    pub z_r: f64,
    #[serde(default = "default_kappa")]
    pub kappa: f64,
    pub stability: StabilityClass,
    /// Lateral diffusivity used when `L >= 0` (the closure needs `L < 0`).
    #[serde(default = "default_neutral_lateral")]
    pub neutral_lateral_diffusivity: f64,
}

fn default_zr() -> f64 {
    10.0
}
fn default_kappa() -> f64 {
    DEFAULT_KAPPA
}
fn default_neutral_lateral() -> f64 {
    DEFAULT_NEUTRAL_LATERAL_DIFFUSIVITY
}

/// Prior box for the five uncertain parameters: `(name, lower, upper)`.
pub const PRIOR_BOX: [(&str, f64, f64); 5] = [
    ("gamma", 0.1, 0.4),
    ("z0", 1e-3, 2.0),
    ("z_i", 1e2, 3e3),
    ("L", -500.0, -1.0),
    ("z_cut", 1.0, 5.0),
];

impl SiteParams {
    /// Best-guess values for the smelter case, stability class A.
    pub fn best_guess() -> Self {
        SiteParams {
            gamma: 0.3,
            z0: 0.1,
            z_i: 100.0,
            obukhov: ObukhovLength::Finite(-8.0),
            z_cut: 2.0,
            z_r: 10.0,
            kappa: DEFAULT_KAPPA,
            stability: StabilityClass::A,
            neutral_lateral_diffusivity: DEFAULT_NEUTRAL_LATERAL_DIFFUSIVITY,
        }
    }

    /// Hard constraints; values outside the prior box are allowed and
    /// reported by [`SiteParams::outside_prior_box`].
    pub fn validate(&self) -> Result<()> {
        let finite = [self.gamma, self.z0, self.z_i, self.z_cut, self.z_r, self.kappa];
        if finite.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("site parameters".into()));
        }
        if self.gamma < 0.0 {
            return Err(invalid(format!("gamma must be >= 0, got {}", self.gamma)));
        }
        if self.z0 <= 0.0 {
            return Err(invalid(format!("z0 must be positive, got {}", self.z0)));
        }
        if self.z_r <= self.z0 {
            return Err(invalid(format!("z_r ({}) must exceed z0 ({})", self.z_r, self.z0)));
        }
        if self.z_i <= 0.0 || self.kappa <= 0.0 {
            return Err(invalid("z_i and kappa must be positive"));
        }
        if !(self.z_cut > 0.0 && self.z_cut < self.z_r) {
            return Err(invalid(format!(
                "z_cut must satisfy 0 < z_cut < z_r, got z_cut = {}, z_r = {}",
                self.z_cut, self.z_r
            )));
        }
        if !(self.neutral_lateral_diffusivity >= 0.0) {
            return Err(invalid("neutral_lateral_diffusivity must be >= 0"));
        }
        Ok(())
    }

    /// Names of parameters lying outside the prior box (a warning, not an error).
    pub fn outside_prior_box(&self) -> Vec<&'static str> {
        let mut out = Vec::new();
        let values = [
            self.gamma,
            self.z0,
            self.z_i,
            match self.obukhov {
                ObukhovLength::Finite(l) => l,
                ObukhovLength::Neutral => f64::NAN,
            },
            self.z_cut,
        ];
        for ((name, lo, hi), v) in PRIOR_BOX.iter().zip(values) {
            if *name == "L" && matches!(self.obukhov, ObukhovLength::Neutral) {
                continue;
            }
            if !(v >= *lo && v <= *hi) {
                out.push(*name);
            }
        }
        out
    }

    fn clamped_height(&self, z: f64) -> f64 {
        z.max(self.z_cut)
    }
}

/// Stokes settling velocity `rho g d^2 / (18 mu)`.
pub fn settling_velocity(p: &ParticulateParams) -> Result<f64> {
    if !(p.density > 0.0 && p.gravity > 0.0 && p.viscosity > 0.0) {
        return Err(invalid("density, gravity and viscosity must be positive"));
    }
    if !(p.diameter >= 0.0) {
        return Err(invalid(format!("diameter must be >= 0, got {}", p.diameter)));
    }
    Ok(p.density * p.gravity * p.diameter * p.diameter / (18.0 * p.viscosity))
}

/// Horizontal wind speed at height `z` from the reference speed `u_r`.
pub fn wind_profile(u_r: f64, z: f64, sp: &SiteParams) -> Result<f64> {
    if !(u_r >= 0.0) || !(z >= 0.0) {
        return Err(invalid(format!("wind_profile needs u_r >= 0 and z >= 0 (u_r = {u_r}, z = {z})")));
    }
    Ok(u_r * (sp.clamped_height(z) / sp.z_r).powf(sp.gamma))
}

/// Friction velocity `kappa u_r / ln(z_r / z0)`.
pub fn friction_velocity(u_r: f64, sp: &SiteParams) -> Result<f64> {
    if !(sp.z0 > 0.0 && sp.z_r > sp.z0) {
        return Err(invalid(format!("friction velocity needs z_r > z0 > 0 (z_r = {}, z0 = {})", sp.z_r, sp.z0)));
    }
    Ok(sp.kappa * u_r / (sp.z_r / sp.z0).ln())
}

/// Golder's relation `1/L = a + b log10(z0)`.
pub fn monin_obukhov_length(sc: StabilityClass, z0: f64) -> Result<ObukhovLength> {
    if !(z0 > 0.0) {
        return Err(invalid(format!("z0 must be positive, got {z0}")));
    }
    let (a, b) = sc.golder_coefficients();
    let inv = a + b * z0.log10();
    if inv == 0.0 {
        Ok(ObukhovLength::Neutral)
    } else {
        Ok(ObukhovLength::Finite(1.0 / inv))
    }
}

/// Stability function evaluated on the branch selected by the class.
pub fn phi(zbar: f64, sc: StabilityClass) -> Result<f64> {
    match sc.regime() {
        StabilityRegime::Unstable => {
            let arg = 1.0 - 15.0 * zbar;
            if arg <= 0.0 {
                Err(Error::PhiDomain { zbar })
            } else {
                Ok(arg.sqrt())
            }
        }
        StabilityRegime::Neutral => Ok(1.0),
        StabilityRegime::Stable => Ok(1.0 + 4.7 * zbar),
    }
}

/// Vertical eddy diffusivity `kappa u* z~ / phi(z~ / L)` with `z~ = max(z, z_cut)`.
pub fn vertical_diffusivity(z: f64, u_star: f64, sp: &SiteParams) -> Result<f64> {
    if !(z >= 0.0) || !(u_star >= 0.0) {
        return Err(invalid(format!("vertical_diffusivity needs z >= 0 and u* >= 0 (z = {z}, u* = {u_star})")));
    }
    if u_star == 0.0 {
        return Ok(0.0);
    }
    let zt = sp.clamped_height(z);
    let ph = match sp.obukhov {
        ObukhovLength::Neutral => 1.0,
        l => phi(l.scaled_height(zt), sp.stability)?,
    };
    Ok(sp.kappa * u_star * zt / ph)
}

/// Height-independent lateral diffusivity `0.1 u* z_i^(3/4) (-kappa L)^(-1/3)`.
pub fn horizontal_diffusivity(u_star: f64, sp: &SiteParams) -> Result<f64> {
    let l = match sp.obukhov {
        ObukhovLength::Finite(l) if l < 0.0 => l,
        _ => return Err(Error::UnsupportedStability),
    };
    if !(sp.z_i > 0.0) || !(u_star >= 0.0) {
        return Err(invalid("horizontal_diffusivity needs z_i > 0 and u* >= 0"));
    }
    Ok(0.1 * u_star * sp.z_i.powf(0.75) * (-sp.kappa * l).powf(-1.0 / 3.0))
}

/// Lateral diffusivity with the configured fallback for `L >= 0`.
pub fn lateral_diffusivity(u_star: f64, sp: &SiteParams) -> Result<f64> {
    match horizontal_diffusivity(u_star, sp) {
        Err(Error::UnsupportedStability) => Ok(sp.neutral_lateral_diffusivity),
        other => other,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn site(class: StabilityClass, l: ObukhovLength) -> SiteParams {
        SiteParams { stability: class, obukhov: l, ..SiteParams::best_guess() }
    }

    #[test]
    fn settling_matches_table_value() {
        let v = settling_velocity(&ParticulateParams::zinc_sulphate()).unwrap();
        assert_eq!(format!("{:.4}", v), "0.0027");
    }

    #[test]
    fn settling_zero_diameter_and_hand_value() {
        let mut p = ParticulateParams::zinc_sulphate();
        p.diameter = 0.0;
        assert_eq!(settling_velocity(&p).unwrap(), 0.0);
        p.density = 1000.0;
        p.diameter = 1e-5;
        // 1000 * 9.8 * 1e-10 / (18 * 1.8e-5) = 9.8e-7 / 3.24e-4
        assert_relative_eq!(settling_velocity(&p).unwrap(), 9.8e-7 / 3.24e-4, max_relative = 1e-14);
        p.density = -1.0;
        assert!(settling_velocity(&p).is_err());
    }

    #[test]
    fn settling_scaling() {
        let p = ParticulateParams::zinc_sulphate();
        let v = settling_velocity(&p).unwrap();
        let mut p2 = p;
        p2.diameter *= 2.0;
        assert_relative_eq!(settling_velocity(&p2).unwrap(), 4.0 * v, max_relative = 1e-14);
        let mut p3 = p;
        p3.density *= 2.0;
        assert_relative_eq!(settling_velocity(&p3).unwrap(), 2.0 * v, max_relative = 1e-14);
    }

    #[test]
    fn wind_profile_examples() {
        let mut sp = SiteParams::best_guess();
        assert_relative_eq!(wind_profile(4.2, sp.z_r, &sp).unwrap(), 4.2);
        sp.gamma = 0.0;
        assert_eq!(wind_profile(3.0, 57.0, &sp).unwrap(), 3.0);
        sp.gamma = 0.3;
        sp.z_cut = 2.0;
        assert_relative_eq!(wind_profile(5.0, 2.5, &sp).unwrap(), 5.0 * 0.25f64.powf(0.3), max_relative = 1e-14);
        assert_relative_eq!(wind_profile(5.0, 2.5, &sp).unwrap(), 3.299, epsilon = 5e-4);
        // clamp below z_cut
        assert_eq!(wind_profile(5.0, 0.0, &sp).unwrap(), wind_profile(5.0, 2.0, &sp).unwrap());
    }

    #[test]
    fn friction_velocity_examples() {
        let mut sp = SiteParams::best_guess();
        assert_eq!(friction_velocity(0.0, &sp).unwrap(), 0.0);
        assert_relative_eq!(friction_velocity(5.0, &sp).unwrap(), 2.0 / 100f64.ln(), max_relative = 1e-14);
        assert_relative_eq!(friction_velocity(5.0, &sp).unwrap(), 0.4343, epsilon = 1e-4);
        sp.z0 = sp.z_r / std::f64::consts::E;
        assert_relative_eq!(friction_velocity(1.0, &sp).unwrap(), 0.4, max_relative = 1e-14);
        sp.z0 = sp.z_r;
        assert!(friction_velocity(1.0, &sp).is_err());
    }

    #[test]
    fn obukhov_examples() {
        match monin_obukhov_length(StabilityClass::A, 0.1).unwrap() {
            ObukhovLength::Finite(l) => assert_relative_eq!(l, -8.0, max_relative = 1e-12),
            _ => panic!("expected finite"),
        }
        assert_eq!(monin_obukhov_length(StabilityClass::D, 0.37).unwrap(), ObukhovLength::Neutral);
        match monin_obukhov_length(StabilityClass::F, 1.0).unwrap() {
            ObukhovLength::Finite(l) => assert_relative_eq!(l, 1.0 / 0.035, max_relative = 1e-12),
            _ => panic!("expected finite"),
        }
    }

    #[test]
    fn golder_sign_matches_regime() {
        for sc in StabilityClass::ALL {
            for z0 in [1e-3, 0.01, 0.05, 0.1, 0.5, 1.0] {
                let l = monin_obukhov_length(sc, z0).unwrap();
                match sc.regime() {
                    StabilityRegime::Unstable => assert!(l.is_negative(), "{sc:?} {z0}"),
                    StabilityRegime::Neutral => assert_eq!(l, ObukhovLength::Neutral),
                    StabilityRegime::Stable => {
                        assert!(matches!(l, ObukhovLength::Finite(v) if v > 0.0), "{sc:?} {z0}")
                    }
                }
            }
        }
    }

    #[test]
    fn phi_examples() {
        for sc in StabilityClass::ALL {
            assert_eq!(phi(0.0, sc).unwrap(), 1.0);
        }
        assert_eq!(phi(7.3, StabilityClass::D).unwrap(), 1.0);
        assert_relative_eq!(phi(1.0, StabilityClass::E).unwrap(), 5.7);
        assert!(matches!(phi(0.1, StabilityClass::A), Err(Error::PhiDomain { .. })));
        assert_relative_eq!(phi(-1.25, StabilityClass::B).unwrap(), 19.75f64.sqrt());
    }

    #[test]
    fn vertical_diffusivity_examples() {
        let sp = site(StabilityClass::D, ObukhovLength::Neutral);
        assert_eq!(vertical_diffusivity(5.0, 0.0, &sp).unwrap(), 0.0);
        assert_relative_eq!(vertical_diffusivity(2.0, 0.5, &sp).unwrap(), 0.4, max_relative = 1e-14);
        let sp = site(StabilityClass::A, ObukhovLength::Finite(-8.0));
        let expect = 0.4 * 0.43429 * 10.0 / 19.75f64.sqrt();
        assert_relative_eq!(vertical_diffusivity(10.0, 0.43429, &sp).unwrap(), expect, max_relative = 1e-14);
        assert_relative_eq!(expect, 0.3909, epsilon = 1e-4);
        // positive L on an unstable class runs out of the domain of phi
        let sp = site(StabilityClass::A, ObukhovLength::Finite(10.0));
        assert!(vertical_diffusivity(10.0, 0.5, &sp).is_err());
    }

    #[test]
    fn vertical_diffusivity_neutral_monotone_and_continuous() {
        let sp = site(StabilityClass::D, ObukhovLength::Neutral);
        let mut prev = 0.0;
        for i in 0..200 {
            let z = i as f64 * 0.25;
            let s = vertical_diffusivity(z, 0.3, &sp).unwrap();
            assert!(s >= prev);
            prev = s;
        }
        let below = vertical_diffusivity(sp.z_cut - 1e-9, 0.3, &sp).unwrap();
        let above = vertical_diffusivity(sp.z_cut + 1e-9, 0.3, &sp).unwrap();
        assert!((below - above).abs() < 1e-9);
    }

    #[test]
    fn horizontal_diffusivity_examples() {
        let sp = site(StabilityClass::A, ObukhovLength::Finite(-8.0));
        assert_eq!(horizontal_diffusivity(0.0, &sp).unwrap(), 0.0);
        let expect = 0.1 * 0.43429 * 100f64.powf(0.75) * 3.2f64.powf(-1.0 / 3.0);
        assert_relative_eq!(horizontal_diffusivity(0.43429, &sp).unwrap(), expect, max_relative = 1e-14);
        assert_relative_eq!(expect, 0.932, epsilon = 1e-3);
        let sp = SiteParams { z_i: 1.0, obukhov: ObukhovLength::Finite(-1.0 / 0.4), ..sp };
        assert_relative_eq!(horizontal_diffusivity(1.0, &sp).unwrap(), 0.1, max_relative = 1e-14);
        let stable = site(StabilityClass::E, ObukhovLength::Finite(50.0));
        assert!(matches!(horizontal_diffusivity(1.0, &stable), Err(Error::UnsupportedStability)));
        assert_eq!(lateral_diffusivity(1.0, &stable).unwrap(), DEFAULT_NEUTRAL_LATERAL_DIFFUSIVITY);
    }

    #[test]
    fn prior_box_flags() {
        let sp = SiteParams::best_guess();
        assert!(sp.outside_prior_box().is_empty());
        let wide = SiteParams { gamma: 0.6, ..sp };
        assert_eq!(wide.outside_prior_box(), vec!["gamma"]);
        let bad = SiteParams { z_cut: 20.0, ..sp };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn obukhov_serde() {
        let sp = SiteParams::best_guess();
        let s = serde_json::to_string(&sp).unwrap();
        let back: SiteParams = serde_json::from_str(&s).unwrap();
        assert_eq!(back, sp);
        let neutral: ObukhovLength = serde_json::from_str("\"neutral\"").unwrap();
        assert_eq!(neutral, ObukhovLength::Neutral);
    }
}
