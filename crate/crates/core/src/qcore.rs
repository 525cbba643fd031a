//! Closed-form complex 2×2 linear algebra for spin-1/2 states and observables.
//!
//! Everything here is a small `Copy` value type. [`Spinor`] carries a
//! normalized two-component amplitude vector, [`HermitianOp`] stores only the
//! independent entries of a 2×2 Hermitian matrix so Hermiticity cannot be
//! broken, and [`eigensystem`] diagonalizes one in closed form.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::SpinError;

/// A complex probability amplitude.
pub type ComplexAmplitude = Complex64;

/// Tolerance for quantities that are exactly representable up to rounding.
pub const EXACT_TOL: f64 = 1e-12;
/// Tolerance for results composed from several floating-point steps.
pub const COMPOSED_TOL: f64 = 1e-10;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// A normalized pure spin-1/2 state, components in the reference (ẑ) basis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[Complex64; 2]", into = "[Complex64; 2]")]
pub struct Spinor {
    a0: Complex64,
    a1: Complex64,
}

impl Spinor {
    /// Builds a spinor, normalizing it. The zero vector and non-finite
    /// components are rejected.
    ///
    /// Inputs already normalized to within a few ulps are kept bit-for-bit,
    /// so literal constants such as `FRAC_1_SQRT_2` survive unchanged.
    pub fn new(a0: Complex64, a1: Complex64) -> Result<Self, SpinError> {
        if !(a0.is_finite() && a1.is_finite()) {
            return Err(SpinError::NonFinite);
        }
        let norm_sqr = a0.norm_sqr() + a1.norm_sqr();
        if norm_sqr == 0.0 || !norm_sqr.is_finite() {
            return Err(SpinError::ZeroVector);
        }
        if (norm_sqr - 1.0).abs() <= 4.0 * f64::EPSILON {
            return Ok(Self { a0, a1 });
        }
        let norm = norm_sqr.sqrt();
        Ok(Self {
            a0: a0 / norm,
            a1: a1 / norm,
        })
    }

    /// Real-component shorthand for [`Spinor::new`].
    pub fn from_real(a0: f64, a1: f64) -> Result<Self, SpinError> {
        Self::new(Complex64::new(a0, 0.0), Complex64::new(a1, 0.0))
    }

    /// |0⟩ = |S_z,+1⟩.
    pub const fn up() -> Self {
        Self { a0: ONE, a1: ZERO }
    }

    /// |1⟩ = |S_z,−1⟩.
    pub const fn down() -> Self {
        Self { a0: ZERO, a1: ONE }
    }

    pub(crate) const fn from_normalized_parts(a0: Complex64, a1: Complex64) -> Self {
        Self { a0, a1 }
    }

    pub fn a0(&self) -> Complex64 {
        self.a0
    }

    pub fn a1(&self) -> Complex64 {
        self.a1
    }

    pub fn components(&self) -> [Complex64; 2] {
        [self.a0, self.a1]
    }

    pub fn norm_sqr(&self) -> f64 {
        self.a0.norm_sqr() + self.a1.norm_sqr()
    }

    /// Bloch vector (⟨σ_x⟩, ⟨σ_y⟩, ⟨σ_z⟩).
    pub fn bloch_vector(&self) -> [f64; 3] {
        let c = self.a0.conj() * self.a1;
        [
            2.0 * c.re,
            2.0 * c.im,
            self.a0.norm_sqr() - self.a1.norm_sqr(),
        ]
    }

    /// Multiplies by a global phase so the first nonzero component is real
    /// and positive.
    pub fn canonical_phase(self) -> Self {
        let lead = if self.a0.norm() > EXACT_TOL {
            self.a0
        } else {
            self.a1
        };
        let phase = lead.conj() / lead.norm();
        Self {
            a0: self.a0 * phase,
            a1: self.a1 * phase,
        }
    }
}

impl TryFrom<[Complex64; 2]> for Spinor {
    type Error = SpinError;

    fn try_from(value: [Complex64; 2]) -> Result<Self, Self::Error> {
        Self::new(value[0], value[1])
    }
}

impl From<Spinor> for [Complex64; 2] {
    fn from(s: Spinor) -> Self {
        s.components()
    }
}

/// A 2×2 Hermitian matrix `[[m00, m01], [conj(m01), m11]]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HermitianOp {
    pub m00: f64,
    pub m11: f64,
    pub m01: Complex64,
}

impl HermitianOp {
    pub const fn new(m00: f64, m11: f64, m01: Complex64) -> Self {
        Self { m00, m11, m01 }
    }

    pub const fn zero() -> Self {
        Self::new(0.0, 0.0, ZERO)
    }

    pub const fn identity() -> Self {
        Self::new(1.0, 1.0, ZERO)
    }

    pub const fn pauli_x() -> Self {
        Self::new(0.0, 0.0, ONE)
    }

    pub const fn pauli_y() -> Self {
        Self::new(0.0, 0.0, Complex64::new(0.0, -1.0))
    }

    pub const fn pauli_z() -> Self {
        Self::new(1.0, -1.0, ZERO)
    }

    /// `c0·I + c·σ`.
    pub fn from_pauli_coefficients(c0: f64, c: [f64; 3]) -> Self {
        Self::new(c0 + c[2], c0 - c[2], Complex64::new(c[0], -c[1]))
    }

    /// Inverse of [`HermitianOp::from_pauli_coefficients`].
    pub fn pauli_coefficients(&self) -> (f64, [f64; 3]) {
        (
            0.5 * (self.m00 + self.m11),
            [self.m01.re, -self.m01.im, 0.5 * (self.m00 - self.m11)],
        )
    }

    pub fn m10(&self) -> Complex64 {
        self.m01.conj()
    }

    /// Row-major dense form.
    pub fn to_matrix(&self) -> [[Complex64; 2]; 2] {
        [
            [Complex64::new(self.m00, 0.0), self.m01],
            [self.m10(), Complex64::new(self.m11, 0.0)],
        ]
    }

    pub fn trace(&self) -> f64 {
        self.m00 + self.m11
    }

    pub fn determinant(&self) -> f64 {
        self.m00 * self.m11 - self.m01.norm_sqr()
    }

    pub fn is_finite(&self) -> bool {
        self.m00.is_finite() && self.m11.is_finite() && self.m01.is_finite()
    }

    pub fn scale(&self, factor: f64) -> Self {
        Self::new(self.m00 * factor, self.m11 * factor, self.m01 * factor)
    }

    pub fn add(&self, other: &Self) -> Self {
        Self::new(
            self.m00 + other.m00,
            self.m11 + other.m11,
            self.m01 + other.m01,
        )
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(-1.0))
    }

    /// The square `A·A`, which is again Hermitian.
    pub fn square(&self) -> Self {
        let off = self.m01.norm_sqr();
        Self::new(
            self.m00 * self.m00 + off,
            self.m11 * self.m11 + off,
            self.m01 * (self.m00 + self.m11),
        )
    }

    /// ⟨x|A|x⟩, real for Hermitian `A`.
    pub fn expectation(&self, x: &Spinor) -> f64 {
        let ax = apply(self, x);
        (x.a0.conj() * ax[0] + x.a1.conj() * ax[1]).re
    }

    /// Largest absolute entrywise difference.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        let d = self.sub(other);
        d.m00.abs().max(d.m11.abs()).max(d.m01.norm())
    }
}

/// Closed-form eigendecomposition of a [`HermitianOp`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EigenSystem {
    pub eigenvalue_plus: f64,
    pub eigenvalue_minus: f64,
    pub eigvec_plus: Spinor,
    pub eigvec_minus: Spinor,
    /// Set when the two eigenvalues coincide within [`EXACT_TOL`]; the
    /// eigenvectors are then the reference basis.
    pub degenerate: bool,
}

impl EigenSystem {
    /// Σ λ_i |v_i⟩⟨v_i|.
    pub fn reconstruct(&self) -> HermitianOp {
        outer_product(&self.eigvec_plus)
            .scale(self.eigenvalue_plus)
            .add(&outer_product(&self.eigvec_minus).scale(self.eigenvalue_minus))
    }
}

/// ⟨x|y⟩, conjugate-linear in `x`.
pub fn inner_product(x: &Spinor, y: &Spinor) -> ComplexAmplitude {
    x.a0.conj() * y.a0 + x.a1.conj() * y.a1
}

/// The projector |x⟩⟨x|.
pub fn outer_product(x: &Spinor) -> HermitianOp {
    // Diagonal taken from the Bloch z-component so that the two entries sum
    // to one independent of how |a0|² and |a1|² round.
    let z = x.a0.norm_sqr() - x.a1.norm_sqr();
    HermitianOp::new(0.5 * (1.0 + z), 0.5 * (1.0 - z), x.a0 * x.a1.conj())
}

/// Matrix-vector product; the result is not renormalized.
pub fn apply(op: &HermitianOp, x: &Spinor) -> [Complex64; 2] {
    [
        op.m00 * x.a0 + op.m01 * x.a1,
        op.m10() * x.a0 + op.m11 * x.a1,
    ]
}

/// Tr[a·b]. Real for Hermitian operands.
pub fn trace_product(a: &HermitianOp, b: &HermitianOp) -> f64 {
    a.m00 * b.m00 + a.m11 * b.m11 + 2.0 * (a.m01 * b.m01.conj()).re
}

pub fn eigensystem(op: &HermitianOp) -> EigenSystem {
    let mean = 0.5 * (op.m00 + op.m11);
    let half_gap = 0.5 * (op.m00 - op.m11);
    let radius = half_gap.hypot(op.m01.norm());

    if radius <= EXACT_TOL {
        return EigenSystem {
            eigenvalue_plus: mean + radius,
            eigenvalue_minus: mean - radius,
            eigvec_plus: Spinor::up(),
            eigvec_minus: Spinor::down(),
            degenerate: true,
        };
    }

    // Of the two algebraically equivalent eigenvector forms, pick the one
    // whose leading entry is bounded away from cancellation.
    let (v0, v1) = if half_gap >= 0.0 {
        (Complex64::new(half_gap + radius, 0.0), op.m01.conj())
    } else {
        (op.m01, Complex64::new(radius - half_gap, 0.0))
    };
    let plus = Spinor::new(v0, v1)
        .expect("eigenvector of non-degenerate operator is nonzero")
        .canonical_phase();
    let minus = Spinor::from_normalized_parts(-plus.a1.conj(), plus.a0.conj()).canonical_phase();

    EigenSystem {
        eigenvalue_plus: mean + radius,
        eigenvalue_minus: mean - radius,
        eigvec_plus: plus,
        eigvec_minus: minus,
        degenerate: false,
    }
}
