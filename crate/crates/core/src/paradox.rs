//! The state-indexed variance "operator" β ↦ O_β = (σ_x − ⟨β|σ_x|β⟩)².
//!
//! Each member reproduces the single-particle variance on its own source
//! state, but the family is not one fixed linear operator: the members
//! sourced by |S_x,±1⟩ annihilate those states while the member sourced by
//! |S_z,+1⟩ has expectation 1. [`fixed_operator_infeasibility`] quantifies
//! the gap by least-squares fitting a single Hermitian operator to the
//! variance over the Bloch sphere.

use std::f64::consts::PI;

use nalgebra::{Matrix4, Vector4};
use serde::{Deserialize, Serialize};

use crate::error::SpinError;
use crate::montecarlo::SeededSampler;
use crate::qcore::{apply, HermitianOp, Spinor, EXACT_TOL};
use crate::spin::{eigenstate, state_mean_and_variance, Axis, SpinOutcome};

pub const MIN_FIT_SAMPLES: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PseudoOperatorReport {
    pub source_state: Spinor,
    pub operator: HermitianOp,
    /// Norm of O_β|β⟩.
    pub annihilation_residual: f64,
    /// True when O_β|β⟩ vanishes, which happens exactly for the σ_x
    /// eigenstates.
    pub annihilates_sx_eigenstates: bool,
    pub expectation_on_source: f64,
}

impl PseudoOperatorReport {
    pub fn for_state(beta: &Spinor) -> Self {
        let operator = variance_pseudo_operator(beta);
        let image = apply(&operator, beta);
        let residual = (image[0].norm_sqr() + image[1].norm_sqr()).sqrt();
        Self {
            source_state: *beta,
            operator,
            annihilation_residual: residual,
            annihilates_sx_eigenstates: residual < EXACT_TOL,
            expectation_on_source: operator.expectation(beta),
        }
    }
}

/// Witnesses that β ↦ O_β is not a single operator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContradictionWitness {
    pub sx_plus: PseudoOperatorReport,
    pub sx_minus: PseudoOperatorReport,
    pub sz_plus: PseudoOperatorReport,
    /// Largest entrywise difference between O_{|S_x,+1⟩} and O_{|S_z,+1⟩}.
    pub operator_difference: f64,
}

impl ContradictionWitness {
    /// Both σ_x eigenstates are annihilated while |S_z,+1⟩ keeps a unit
    /// expectation.
    pub fn holds(&self) -> bool {
        self.sx_plus.annihilates_sx_eigenstates
            && self.sx_minus.annihilates_sx_eigenstates
            && (self.sz_plus.expectation_on_source - 1.0).abs() <= EXACT_TOL
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitResidual {
    pub samples: usize,
    pub rms_residual: f64,
    pub max_residual: f64,
    /// Best-fit operator c0·I + c·σ.
    pub operator: HermitianOp,
}

/// (σ_x − E·I)² with E = ⟨β|σ_x|β⟩, in half-quantum² units.
pub fn variance_pseudo_operator(beta: &Spinor) -> HermitianOp {
    let sx = HermitianOp::pauli_x();
    let mean = sx.expectation(beta);
    sx.sub(&HermitianOp::identity().scale(mean)).square()
}

pub fn null_operator_contradiction() -> ContradictionWitness {
    let sx_plus = PseudoOperatorReport::for_state(&eigenstate(&Axis::X, SpinOutcome::Plus));
    let sx_minus = PseudoOperatorReport::for_state(&eigenstate(&Axis::X, SpinOutcome::Minus));
    let sz_plus = PseudoOperatorReport::for_state(&eigenstate(&Axis::Z, SpinOutcome::Plus));
    ContradictionWitness {
        operator_difference: sx_plus.operator.max_abs_diff(&sz_plus.operator),
        sx_plus,
        sx_minus,
        sz_plus,
    }
}

/// Uniform (area measure) point on the Bloch sphere as a pure state.
fn sphere_state(sampler: &SeededSampler, index: u64) -> Spinor {
    let z = 2.0 * sampler.uniform(index, 0) - 1.0;
    let phi = 2.0 * PI * sampler.uniform(index, 1);
    eigenstate(
        &Axis::Angles {
            theta: z.clamp(-1.0, 1.0).acos(),
            phi,
        },
        SpinOutcome::Plus,
    )
}

/// Least-squares fit of one Hermitian O to ⟨β|O|β⟩ ≈ Var_β(σ_x) over the
/// given states. Since ⟨β|O|β⟩ = c0 + c·m(β) the fit is linear in the four
/// Pauli coefficients; rank-deficient designs take the minimum-norm solution.
pub fn fit_fixed_operator(states: &[Spinor]) -> FitResidual {
    let rows: Vec<([f64; 4], f64)> = states
        .iter()
        .map(|s| {
            let m = s.bloch_vector();
            let (_, var) = state_mean_and_variance(s, &Axis::X);
            ([1.0, m[0], m[1], m[2]], var)
        })
        .collect();

    let mut gram = Matrix4::<f64>::zeros();
    let mut rhs = Vector4::<f64>::zeros();
    for (row, target) in &rows {
        let r = Vector4::from_column_slice(row);
        gram += r * r.transpose();
        rhs += r * *target;
    }
    let coeffs = gram
        .svd(true, true)
        .solve(&rhs, 1e-12 * gram.norm().max(1.0))
        .expect("SVD was computed with both U and V");

    let (sum_sq, max_abs) = rows.iter().fold((0.0f64, 0.0f64), |(ss, mx), (row, target)| {
        let fit: f64 = row.iter().zip(coeffs.iter()).map(|(a, b)| a * b).sum();
        let r = fit - target;
        (ss + r * r, mx.max(r.abs()))
    });
    let n = rows.len().max(1) as f64;
    FitResidual {
        samples: rows.len(),
        rms_residual: (sum_sq / n).sqrt(),
        max_residual: max_abs,
        operator: HermitianOp::from_pauli_coefficients(coeffs[0], [coeffs[1], coeffs[2], coeffs[3]]),
    }
}

/// [`fit_fixed_operator`] over `samples` uniformly distributed states.
pub fn fixed_operator_infeasibility(samples: usize, seed: u64) -> Result<FitResidual, SpinError> {
    if samples < MIN_FIT_SAMPLES {
        return Err(SpinError::TooFewSamples {
            min: MIN_FIT_SAMPLES,
            got: samples,
        });
    }
    let sampler = SeededSampler::new(seed);
    let states: Vec<Spinor> = (0..samples as u64).map(|i| sphere_state(&sampler, i)).collect();
    Ok(fit_fixed_operator(&states))
}
