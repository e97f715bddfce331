//! Problem constants, the controlled plant and the physical-to-dimensionless map.
//!
//! The plant is a point mass on a line, `x1' = x2`, `x2' = alpha * u`, with the
//! control bounded by `|u| <= 1`. Everything downstream works in the
//! dimensionless variables produced by [`nondimensionalize`].

use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::scalar::Scalar;

/// Dimensional description of the plant and its tolerance box.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalParams<T> {
    /// Mass in kg.
    pub mass: T,
    /// Largest applicable force in N.
    pub f_max: T,
    /// Characteristic length `L` in m (half-width of the position tolerance).
    pub char_length: T,
    /// Characteristic velocity `V` in m/s (half-width of the velocity tolerance).
    pub char_velocity: T,
}

/// Dimensionless problem constants.
///
/// `beta` weights velocity against position in the terminal circle; only
/// `beta == 1` is supported and any other value is rejected at construction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Params<T> {
    alpha: T,
    l: T,
    beta: T,
}

impl<T: Scalar> Params<T> {
    pub fn new(alpha: T, l: T) -> Result<Self> {
        Self::with_beta(alpha, l, T::one())
    }

    pub fn with_beta(alpha: T, l: T, beta: T) -> Result<Self> {
        if !(alpha.is_finite() && alpha > T::zero()) {
            return Err(domain(format!("alpha must be positive and finite, got {alpha}")));
        }
        if !(l.is_finite() && l > T::zero()) {
            return Err(domain(format!("l must be positive and finite, got {l}")));
        }
        if beta != T::one() {
            return Err(domain(format!("only beta = 1 is supported, got {beta}")));
        }
        Ok(Self { alpha, l, beta })
    }

    /// Control authority.
    #[inline]
    pub fn alpha(&self) -> T {
        self.alpha
    }

    /// Tolerance radius of the circular target.
    #[inline]
    pub fn l(&self) -> T {
        self.l
    }

    #[inline]
    pub fn beta(&self) -> T {
        self.beta
    }

    /// True when the closed-form trajectory families apply.
    #[inline]
    pub fn is_unit_alpha(&self) -> bool {
        self.alpha == T::one()
    }
}

/// Maps physical constants to `alpha = L * F_max / (m * V^2)`; the tolerance
/// radius `l` is chosen by the caller.
pub fn nondimensionalize<T: Scalar>(p: &PhysicalParams<T>, l: T) -> Result<Params<T>> {
    let fields = [
        ("mass", p.mass),
        ("f_max", p.f_max),
        ("char_length", p.char_length),
        ("char_velocity", p.char_velocity),
    ];
    for (name, v) in fields {
        if !(v.is_finite() && v > T::zero()) {
            return Err(domain(format!("{name} must be positive and finite, got {v}")));
        }
    }
    let alpha = p.char_length * p.f_max / (p.mass * p.char_velocity * p.char_velocity);
    Params::new(alpha, l)
}

/// Point `(x1, x2)` = (position, velocity) in the phase plane.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct State<T> {
    pub x1: T,
    pub x2: T,
}

impl<T: Scalar> State<T> {
    #[inline]
    pub fn new(x1: T, x2: T) -> Self {
        Self { x1, x2 }
    }

    pub fn is_finite(&self) -> bool {
        self.x1.is_finite() && self.x2.is_finite()
    }

    pub fn norm(&self) -> T {
        self.x1.hypot(self.x2)
    }

    pub fn dist(&self, other: &Self) -> T {
        (*self - *other).norm()
    }

    /// Converts to another scalar width.
    pub fn cast<U: Scalar>(&self) -> State<U> {
        State { x1: U::from(self.x1).unwrap_or_else(U::nan), x2: U::from(self.x2).unwrap_or_else(U::nan) }
    }
}

impl<T: Scalar> Neg for State<T> {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.x1, -self.x2)
    }
}

impl<T: Scalar> Add for State<T> {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Self::new(self.x1 + rhs.x1, self.x2 + rhs.x2)
    }
}

impl<T: Scalar> Sub for State<T> {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        Self::new(self.x1 - rhs.x1, self.x2 - rhs.x2)
    }
}

impl<T: Scalar> Mul<T> for State<T> {
    type Output = Self;
    fn mul(self, k: T) -> Self {
        Self::new(self.x1 * k, self.x2 * k)
    }
}

/// Time derivative of a [`State`].
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct StateDerivative<T> {
    pub dx1: T,
    pub dx2: T,
}

/// Admissible control value, `-1 <= u <= 1`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default, Serialize)]
pub struct Control<T>(T);

impl<T: Scalar> Control<T> {
    pub fn new(u: T) -> Result<Self> {
        if u.is_nan() || u.abs() > T::one() {
            return Err(domain(format!("control must satisfy |u| <= 1, got {u}")));
        }
        Ok(Self(u))
    }

    pub fn plus() -> Self {
        Self(T::one())
    }

    pub fn minus() -> Self {
        Self(-T::one())
    }

    /// Bang control with the given sign (`>= 0` maps to `+1`).
    pub fn bang(sign: T) -> Self {
        if sign >= T::zero() {
            Self::plus()
        } else {
            Self::minus()
        }
    }

    #[inline]
    pub fn value(self) -> T {
        self.0
    }

    pub fn is_bang(self) -> bool {
        self.0.abs() == T::one()
    }
}

impl<T: Scalar> Neg for Control<T> {
    type Output = Self;
    fn neg(self) -> Self {
        Self(-self.0)
    }
}

/// Right-hand side of the plant: `(x2, alpha * u)`.
#[inline]
pub fn dynamics<T: Scalar>(s: &State<T>, u: Control<T>, params: &Params<T>) -> StateDerivative<T> {
    StateDerivative { dx1: s.x2, dx2: params.alpha() * u.value() }
}

/// Target shape named in scenario files.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TargetKind {
    Circle,
    Square,
}

impl std::str::FromStr for TargetKind {
    type Err = crate::error::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "circle" => Ok(Self::Circle),
            "square" => Ok(Self::Square),
            other => Err(domain(format!("unknown target '{other}', expected circle|square"))),
        }
    }
}

/// Contents of a JSON scenario file: `{"alpha": .., "l": .., "target": "circle"|"square"}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    #[serde(default)]
    pub alpha: Option<f64>,
    #[serde(default)]
    pub l: Option<f64>,
    #[serde(default)]
    pub target: Option<TargetKind>,
}

impl ScenarioFile {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| domain(format!("invalid scenario file: {e}")))
    }

    /// Validated parameters; missing fields default to 1.
    pub fn params(&self) -> Result<Params<f64>> {
        Params::new(self.alpha.unwrap_or(1.0), self.l.unwrap_or(1.0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn phys(mass: f64, f_max: f64, l: f64, v: f64) -> PhysicalParams<f64> {
        PhysicalParams { mass, f_max, char_length: l, char_velocity: v }
    }

    #[test]
    fn nondimensionalize_examples() {
        let p = nondimensionalize(&phys(1.0, 1.0, 1.0, 1.0), 1.0).unwrap();
        assert_eq!(p.alpha(), 1.0);
        assert_eq!(p.beta(), 1.0);
        let p = nondimensionalize(&phys(2.0, 1.0, 1.0, 1.0), 1.0).unwrap();
        assert_relative_eq!(p.alpha(), 0.5);
        assert!(nondimensionalize(&phys(1.0, 0.0, 1.0, 1.0), 1.0).is_err());
        assert!(nondimensionalize(&phys(1.0, 1.0, -1.0, 1.0), 1.0).is_err());
    }

    #[test]
    fn nondimensionalize_f32() {
        let p = PhysicalParams { mass: 4.0f32, f_max: 2.0, char_length: 3.0, char_velocity: 1.5 };
        let q = nondimensionalize(&p, 0.5).unwrap();
        assert!((q.alpha() - 3.0 * 2.0 / (4.0 * 2.25)).abs() < 1e-6);
    }

    #[test]
    fn params_reject_bad_values() {
        assert!(Params::new(0.0, 1.0).is_err());
        assert!(Params::new(1.0, 0.0).is_err());
        assert!(Params::new(f64::NAN, 1.0).is_err());
        assert!(Params::with_beta(1.0, 1.0, 2.0).is_err());
        assert!(Params::with_beta(1.0, 1.0, 1.0).is_ok());
    }

    #[test]
    fn dynamics_examples() {
        let unit = Params::new(1.0, 1.0).unwrap();
        let d = dynamics(&State::new(0.0, 0.0), Control::new(1.0).unwrap(), &unit);
        assert_eq!((d.dx1, d.dx2), (0.0, 1.0));
        let d = dynamics(&State::new(1.0, 2.0), Control::new(-1.0).unwrap(), &unit);
        assert_eq!((d.dx1, d.dx2), (2.0, -1.0));
        let two = Params::new(2.0, 1.0).unwrap();
        let d = dynamics(&State::new(0.0, 1.0), Control::new(0.5).unwrap(), &two);
        assert_eq!((d.dx1, d.dx2), (1.0, 1.0));
    }

    #[test]
    fn control_bounds() {
        assert!(Control::new(1.0000001).is_err());
        assert!(Control::new(-1.5f32).is_err());
        assert!(Control::new(f64::NAN).is_err());
        assert!(Control::new(-1.0).unwrap().is_bang());
    }

    #[test]
    fn scenario_parsing() {
        let s = ScenarioFile::from_json(r#"{"alpha": 1.0, "l": 2.0, "target": "circle"}"#).unwrap();
        assert_eq!(s.target, Some(TargetKind::Circle));
        assert_eq!(s.params().unwrap().l(), 2.0);
        assert!(ScenarioFile::from_json(r#"{"alpha": 1.0, "beta": 2.0}"#).is_err());
        assert!(ScenarioFile::from_json(r#"{"target": "triangle"}"#).is_err());
    }
}
