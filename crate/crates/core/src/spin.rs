//! Spin observables along arbitrary axes and Born-rule probabilities.
//!
//! All quantities are in half-quantum units: a single measurement yields
//! ±1 (meaning ±ħ/2). Conversion to physical units happens only through
//! [`HbarScale`] when reports are rendered.

use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::SpinError;
use crate::qcore::{inner_product, HermitianOp, Spinor};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NamedAxis {
    X,
    Y,
    Z,
}

/// A measurement direction: one of the coordinate axes, or polar angles
/// (θ from ẑ, φ from x̂ in the xy-plane).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Axis {
    Named(NamedAxis),
    Angles { theta: f64, phi: f64 },
}

impl Axis {
    pub const X: Axis = Axis::Named(NamedAxis::X);
    pub const Y: Axis = Axis::Named(NamedAxis::Y);
    pub const Z: Axis = Axis::Named(NamedAxis::Z);

    pub fn from_angles(theta: f64, phi: f64) -> Result<Self, SpinError> {
        let axis = Axis::Angles { theta, phi };
        axis.validate()?;
        Ok(axis)
    }

    pub fn validate(&self) -> Result<(), SpinError> {
        match *self {
            Axis::Named(_) => Ok(()),
            Axis::Angles { theta, phi } if theta.is_finite() && phi.is_finite() => Ok(()),
            Axis::Angles { theta, phi } => Err(SpinError::InvalidAxis(format!(
                "non-finite angles theta={theta}, phi={phi}"
            ))),
        }
    }

    /// Unit Bloch vector n̂.
    pub fn unit_vector(&self) -> [f64; 3] {
        match *self {
            Axis::Named(NamedAxis::X) => [1.0, 0.0, 0.0],
            Axis::Named(NamedAxis::Y) => [0.0, 1.0, 0.0],
            Axis::Named(NamedAxis::Z) => [0.0, 0.0, 1.0],
            Axis::Angles { theta, phi } => {
                let (st, ct) = theta.sin_cos();
                let (sp, cp) = phi.sin_cos();
                [st * cp, st * sp, ct]
            }
        }
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Axis::Named(NamedAxis::X) => f.write_str("x"),
            Axis::Named(NamedAxis::Y) => f.write_str("y"),
            Axis::Named(NamedAxis::Z) => f.write_str("z"),
            Axis::Angles { theta, phi } => write!(f, "(theta={theta}, phi={phi})"),
        }
    }
}

impl std::str::FromStr for Axis {
    type Err = SpinError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "x" => Ok(Axis::X),
            "y" => Ok(Axis::Y),
            "z" => Ok(Axis::Z),
            other => Err(SpinError::InvalidAxis(format!(
                "{other:?}: expected x, y or z"
            ))),
        }
    }
}

/// A single Stern–Gerlach outcome, ±1 half-quantum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "i64", into = "i64")]
pub enum SpinOutcome {
    Plus,
    Minus,
}

impl SpinOutcome {
    pub fn half_quanta(self) -> i64 {
        match self {
            SpinOutcome::Plus => 1,
            SpinOutcome::Minus => -1,
        }
    }

    pub fn flipped(self) -> Self {
        match self {
            SpinOutcome::Plus => SpinOutcome::Minus,
            SpinOutcome::Minus => SpinOutcome::Plus,
        }
    }
}

impl TryFrom<i64> for SpinOutcome {
    type Error = SpinError;

    fn try_from(value: i64) -> Result<Self, Self::Error> {
        match value {
            1 => Ok(SpinOutcome::Plus),
            -1 => Ok(SpinOutcome::Minus),
            v => Err(SpinError::InvalidOutcome(v)),
        }
    }
}

impl From<SpinOutcome> for i64 {
    fn from(o: SpinOutcome) -> Self {
        o.half_quanta()
    }
}

/// Converts half-quantum values to units of ħ for reporting.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct HbarScale(f64);

impl HbarScale {
    pub fn new(hbar: f64) -> Result<Self, SpinError> {
        if hbar.is_finite() && hbar > 0.0 {
            Ok(Self(hbar))
        } else {
            Err(SpinError::InvalidHbar(hbar))
        }
    }

    pub fn hbar(&self) -> f64 {
        self.0
    }

    /// Half-quantum value → multiples of ħ/2.
    pub fn value(&self, half_quanta: f64) -> f64 {
        half_quanta * self.0 / 2.0
    }

    /// Half-quantum² variance → multiples of ħ²/4.
    pub fn variance(&self, half_quanta_sq: f64) -> f64 {
        half_quanta_sq * self.0 * self.0 / 4.0
    }
}

impl Default for HbarScale {
    fn default() -> Self {
        Self(1.0)
    }
}

impl TryFrom<f64> for HbarScale {
    type Error = SpinError;

    fn try_from(value: f64) -> Result<Self, Self::Error> {
        Self::new(value)
    }
}

impl From<HbarScale> for f64 {
    fn from(s: HbarScale) -> Self {
        s.0
    }
}

/// n̂·σ, with eigenvalues ±1.
pub fn spin_operator(axis: &Axis) -> HermitianOp {
    match axis {
        Axis::Named(NamedAxis::X) => HermitianOp::pauli_x(),
        Axis::Named(NamedAxis::Y) => HermitianOp::pauli_y(),
        Axis::Named(NamedAxis::Z) => HermitianOp::pauli_z(),
        Axis::Angles { .. } => HermitianOp::from_pauli_coefficients(0.0, axis.unit_vector()),
    }
}

/// Eigenvector of [`spin_operator`] for the given sign, first component real
/// and non-negative: (cos θ/2, e^{iφ} sin θ/2) for +1 and
/// (sin θ/2, −e^{iφ} cos θ/2) for −1.
pub fn eigenstate(axis: &Axis, sign: SpinOutcome) -> Spinor {
    let s = match sign {
        SpinOutcome::Plus => 1.0,
        SpinOutcome::Minus => -1.0,
    };
    match *axis {
        Axis::Named(NamedAxis::Z) => match sign {
            SpinOutcome::Plus => Spinor::up(),
            SpinOutcome::Minus => Spinor::down(),
        },
        Axis::Named(NamedAxis::X) => {
            Spinor::from_real(FRAC_1_SQRT_2, s * FRAC_1_SQRT_2).expect("unit spinor")
        }
        Axis::Named(NamedAxis::Y) => Spinor::new(
            Complex64::new(FRAC_1_SQRT_2, 0.0),
            Complex64::new(0.0, s * FRAC_1_SQRT_2),
        )
        .expect("unit spinor"),
        Axis::Angles { theta, phi } => {
            // θ = π is the chart's south pole: keep the phase, zero the cosine.
            let cos_half = if theta == PI { 0.0 } else { (theta / 2.0).cos() };
            let sin_half = (theta / 2.0).sin();
            let phase = Complex64::from_polar(1.0, phi);
            let (a0, a1) = match sign {
                SpinOutcome::Plus => (cos_half, phase * sin_half),
                SpinOutcome::Minus => (sin_half, -phase * cos_half),
            };
            Spinor::new(Complex64::new(a0, 0.0), a1).expect("unit spinor")
        }
    }
}

/// |⟨eigenstate(axis, sign)|state⟩|², clamped to [0, 1].
pub fn born_probability(state: &Spinor, axis: &Axis, sign: SpinOutcome) -> f64 {
    inner_product(&eigenstate(axis, sign), state)
        .norm_sqr()
        .clamp(0.0, 1.0)
}

/// Mean and variance of a single ±1 measurement on `state`.
pub fn state_mean_and_variance(state: &Spinor, axis: &Axis) -> (f64, f64) {
    let mean = born_probability(state, axis, SpinOutcome::Plus)
        - born_probability(state, axis, SpinOutcome::Minus);
    (mean, (1.0 - mean * mean).max(0.0))
}
