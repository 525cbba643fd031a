//! Density operators and trace-formalism predictions.
//!
//! The normalization of a [`DensityOp`] is an explicit tag: a normalized
//! operator is built from particle fractions and has unit trace, an
//! unnormalized one is built from particle counts and has trace N. The tag
//! is never inferred from the trace.

use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::ensemble::EnsembleSpec;
use crate::error::SpinError;
use crate::qcore::{eigensystem, inner_product, outer_product, trace_product, HermitianOp, Spinor, EXACT_TOL};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    Normalized,
    Unnormalized(u64),
}

impl fmt::Display for Normalization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Normalization::Normalized => f.write_str("normalized"),
            Normalization::Unnormalized(n) => write!(f, "unnormalized(N={n})"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DensityOp {
    op: HermitianOp,
    normalization: Normalization,
}

impl DensityOp {
    /// Wraps an operator after checking positivity and that its trace fits
    /// the normalization tag.
    pub fn from_op(op: HermitianOp, normalization: Normalization) -> Result<Self, String> {
        if !op.is_finite() {
            return Err("density operator has non-finite entries".into());
        }
        let eig = eigensystem(&op);
        if eig.eigenvalue_minus < -EXACT_TOL {
            return Err(format!(
                "density operator is not positive semidefinite (eigenvalue {})",
                eig.eigenvalue_minus
            ));
        }
        let (expected, tol) = match normalization {
            Normalization::Normalized => (1.0, EXACT_TOL),
            Normalization::Unnormalized(n) => (n as f64, 1e-10 * (n as f64).max(1.0)),
        };
        if (op.trace() - expected).abs() > tol {
            return Err(format!(
                "trace {} does not match {normalization}",
                op.trace()
            ));
        }
        Ok(Self { op, normalization })
    }

    pub fn op(&self) -> &HermitianOp {
        &self.op
    }

    pub fn normalization(&self) -> Normalization {
        self.normalization
    }

    /// Tr[ρ²] of the unit-trace version of this operator.
    pub fn purity(&self) -> f64 {
        let t = self.op.trace();
        trace_product(&self.op, &self.op) / (t * t)
    }
}

/// A density operator written out in a chosen orthonormal basis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DensityMatrix {
    pub basis: [Spinor; 2],
    pub entries: [[Complex64; 2]; 2],
    pub normalization: Normalization,
}

impl DensityMatrix {
    pub fn trace(&self) -> Complex64 {
        self.entries[0][0] + self.entries[1][1]
    }

    /// The matrix as an operator in its own basis coordinates.
    pub fn as_hermitian(&self) -> HermitianOp {
        HermitianOp::new(self.entries[0][0].re, self.entries[1][1].re, self.entries[0][1])
    }
}

/// Σ w_i |β_i⟩⟨β_i| with w_i = count_i/N (normalized) or count_i.
pub fn density_operator(e: &EnsembleSpec, normalized: bool) -> DensityOp {
    let n = e.total();
    let op = e.components().iter().fold(HermitianOp::zero(), |acc, c| {
        let weight = if normalized {
            c.count as f64 / n as f64
        } else {
            c.count as f64
        };
        acc.add(&outer_product(&c.state).scale(weight))
    });
    DensityOp {
        op,
        normalization: if normalized {
            Normalization::Normalized
        } else {
            Normalization::Unnormalized(n)
        },
    }
}

/// ρ_ij = ⟨b_i|P|b_j⟩.
pub fn density_matrix(p: &DensityOp, basis: [Spinor; 2]) -> Result<DensityMatrix, SpinError> {
    let overlap = inner_product(&basis[0], &basis[1]).norm();
    if overlap > EXACT_TOL {
        return Err(SpinError::NonOrthonormalBasis(overlap));
    }
    let m = p.op.to_matrix();
    let element = |bi: &Spinor, bj: &Spinor| {
        let bj = bj.components();
        let pbj = [m[0][0] * bj[0] + m[0][1] * bj[1], m[1][0] * bj[0] + m[1][1] * bj[1]];
        let bi = bi.components();
        bi[0].conj() * pbj[0] + bi[1].conj() * pbj[1]
    };
    let mut entries = [[Complex64::new(0.0, 0.0); 2]; 2];
    for (i, bi) in basis.iter().enumerate() {
        for (j, bj) in basis.iter().enumerate() {
            entries[i][j] = element(bi, bj);
        }
    }
    Ok(DensityMatrix {
        basis,
        entries,
        normalization: p.normalization,
    })
}

/// Tr[P·O].
pub fn expectation_tr(p: &DensityOp, obs: &HermitianOp) -> f64 {
    trace_product(&p.op, obs)
}

/// Tr[P·O²] − (Tr[P·O])².
pub fn variance_tr(p: &DensityOp, obs: &HermitianOp) -> f64 {
    let mean = expectation_tr(p, obs);
    trace_product(&p.op, &obs.square()) - mean * mean
}

/// Σ W_i ⟨β_i|O|β_i⟩ with W_i the fraction (intensive) or the count
/// (extensive) of each component.
pub fn statistical_average_expectation(e: &EnsembleSpec, obs: &HermitianOp, extensive: bool) -> f64 {
    let n = e.total() as f64;
    e.components()
        .iter()
        .map(|c| {
            let w = if extensive { c.count as f64 } else { c.count as f64 / n };
            w * obs.expectation(&c.state)
        })
        .sum()
}

/// Entrywise comparison with caller-supplied tolerance.
pub fn density_equal(p: &DensityOp, q: &DensityOp, tol: f64) -> Result<bool, SpinError> {
    if p.normalization != q.normalization {
        return Err(SpinError::NormalizationMismatch(
            p.normalization.to_string(),
            q.normalization.to_string(),
        ));
    }
    Ok(p.op.max_abs_diff(&q.op) <= tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensemble::{make_ensemble_a, make_ensemble_b, make_pair_ensemble, Component};
    use crate::spin::{eigenstate, spin_operator, state_mean_and_variance, Axis, SpinOutcome};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_PI_3, PI};

    fn half_identity() -> HermitianOp {
        HermitianOp::identity().scale(0.5)
    }

    fn basis(axis: &Axis) -> [Spinor; 2] {
        [eigenstate(axis, SpinOutcome::Plus), eigenstate(axis, SpinOutcome::Minus)]
    }

    #[test]
    fn presets_are_maximally_mixed() {
        for n in [2, 10, 1000] {
            let ra = density_operator(&make_ensemble_a(n).unwrap(), true);
            let rb = density_operator(&make_ensemble_b(n).unwrap(), true);
            assert!(ra.op().max_abs_diff(&half_identity()) <= EXACT_TOL);
            assert!(rb.op().max_abs_diff(&half_identity()) <= EXACT_TOL);
            assert!(density_equal(&ra, &rb, 1e-12).unwrap());
            assert_abs_diff_eq!(ra.purity(), 0.5, epsilon = EXACT_TOL);
        }
    }

    #[test]
    fn unnormalized_b_is_scaled_identity() {
        let rb = density_operator(&make_ensemble_b(10).unwrap(), false);
        assert_eq!(rb.normalization(), Normalization::Unnormalized(10));
        assert!(rb.op().max_abs_diff(&HermitianOp::identity().scale(5.0)) <= EXACT_TOL);
    }

    #[test]
    fn matrices_in_z_and_x_bases() {
        let mixed = DensityOp::from_op(half_identity(), Normalization::Normalized).unwrap();
        for axis in [Axis::Z, Axis::X] {
            let m = density_matrix(&mixed, basis(&axis)).unwrap();
            assert!((m.entries[0][0] - 0.5).norm() <= EXACT_TOL);
            assert!((m.entries[1][1] - 0.5).norm() <= EXACT_TOL);
            assert!(m.entries[0][1].norm() <= EXACT_TOL);
            assert!(m.entries[1][0].norm() <= EXACT_TOL);
        }

        let up = DensityOp::from_op(outer_product(&Spinor::up()), Normalization::Normalized).unwrap();
        let m = density_matrix(&up, basis(&Axis::X)).unwrap();
        for row in m.entries {
            for v in row {
                assert!((v - 0.5).norm() <= EXACT_TOL);
            }
        }
    }

    #[test]
    fn non_orthonormal_basis_rejected() {
        let mixed = DensityOp::from_op(half_identity(), Normalization::Normalized).unwrap();
        let b = [Spinor::up(), eigenstate(&Axis::X, SpinOutcome::Plus)];
        assert!(matches!(density_matrix(&mixed, b), Err(SpinError::NonOrthonormalBasis(_))));
    }

    #[test]
    fn expectation_examples() {
        let sx = HermitianOp::pauli_x();
        let ra = density_operator(&make_ensemble_a(4).unwrap(), true);
        let rb = density_operator(&make_ensemble_b(4).unwrap(), true);
        assert_eq!(expectation_tr(&ra, &sx), 0.0);
        assert_eq!(expectation_tr(&rb, &sx), 0.0);
        let pure = DensityOp::from_op(
            outer_product(&eigenstate(&Axis::X, SpinOutcome::Plus)),
            Normalization::Normalized,
        )
        .unwrap();
        assert_abs_diff_eq!(expectation_tr(&pure, &sx), 1.0, epsilon = EXACT_TOL);
        assert_abs_diff_eq!(variance_tr(&pure, &sx), 0.0, epsilon = EXACT_TOL);
    }

    #[test]
    fn variance_examples() {
        let sx = HermitianOp::pauli_x();
        let n = 1000;
        for e in [make_ensemble_a(n).unwrap(), make_ensemble_b(n).unwrap()] {
            assert_eq!(variance_tr(&density_operator(&e, true), &sx), 1.0);
            assert_eq!(variance_tr(&density_operator(&e, false), &sx), n as f64);
        }
    }

    #[test]
    fn statistical_average_examples() {
        let sx = HermitianOp::pauli_x();
        assert_eq!(statistical_average_expectation(&make_ensemble_a(6).unwrap(), &sx, false), 0.0);
        assert_eq!(statistical_average_expectation(&make_ensemble_b(6).unwrap(), &sx, true), 0.0);
        let tilted = make_pair_ensemble(&Axis::from_angles(FRAC_PI_3, 0.0).unwrap(), 8).unwrap();
        assert_abs_diff_eq!(
            statistical_average_expectation(&tilted, &HermitianOp::pauli_z(), false),
            0.0,
            epsilon = EXACT_TOL
        );
    }

    #[test]
    fn density_equal_examples() {
        let ra = density_operator(&make_ensemble_a(10).unwrap(), true);
        let rb = density_operator(&make_ensemble_b(10).unwrap(), true);
        let up = DensityOp::from_op(outer_product(&Spinor::up()), Normalization::Normalized).unwrap();
        assert!(density_equal(&ra, &rb, 1e-12).unwrap());
        assert!(!density_equal(&ra, &up, 1e-12).unwrap());
        assert!(density_equal(&ra, &ra, 0.0).unwrap());
        let unnorm = density_operator(&make_ensemble_a(10).unwrap(), false);
        assert!(matches!(
            density_equal(&ra, &unnorm, 1.0),
            Err(SpinError::NormalizationMismatch(_, _))
        ));
    }

    #[test]
    fn from_op_checks_invariants() {
        assert!(DensityOp::from_op(HermitianOp::pauli_z(), Normalization::Normalized).is_err());
        assert!(DensityOp::from_op(HermitianOp::identity(), Normalization::Normalized).is_err());
        assert!(DensityOp::from_op(HermitianOp::identity(), Normalization::Unnormalized(2)).is_ok());
    }

    #[test]
    fn density_matrix_json_dump() {
        let rb = density_operator(&make_ensemble_b(2).unwrap(), true);
        let m = density_matrix(&rb, basis(&Axis::Z)).unwrap();
        let json = serde_json::to_value(m).unwrap();
        assert_eq!(json["entries"][0][0], serde_json::json!([0.5, 0.0]));
        assert_eq!(json["basis"][0], serde_json::json!([[1.0, 0.0], [0.0, 0.0]]));
        assert_eq!(json["normalization"], serde_json::json!("normalized"));
        let back: DensityMatrix = serde_json::from_value(json).unwrap();
        assert_eq!(back, m);
    }

    fn ensemble_strategy() -> impl Strategy<Value = EnsembleSpec> {
        prop::collection::vec((0.0..PI, 0.0..2.0 * PI, 1u64..30), 1..5).prop_map(|parts| {
            let comps = parts
                .into_iter()
                .map(|(t, p, count)| Component {
                    state: eigenstate(&Axis::Angles { theta: t, phi: p }, SpinOutcome::Plus),
                    count,
                })
                .collect();
            EnsembleSpec::new("random", comps).unwrap()
        })
    }

    fn axis_strategy() -> impl Strategy<Value = Axis> {
        (0.0..PI, 0.0..2.0 * PI).prop_map(|(t, p)| Axis::Angles { theta: t, phi: p })
    }

    proptest! {
        #[test]
        fn purity_bounds(e in ensemble_strategy()) {
            let rho = density_operator(&e, true);
            let purity = rho.purity();
            prop_assert!((0.5 - 1e-10..=1.0 + 1e-10).contains(&purity));
            prop_assert!(DensityOp::from_op(*rho.op(), Normalization::Normalized).is_ok());
        }

        #[test]
        fn statistical_average_matches_trace(e in ensemble_strategy(), axis in axis_strategy()) {
            let obs = spin_operator(&axis);
            let intensive = statistical_average_expectation(&e, &obs, false);
            let extensive = statistical_average_expectation(&e, &obs, true);
            prop_assert!((intensive - expectation_tr(&density_operator(&e, true), &obs)).abs() <= 1e-10);
            prop_assert!((extensive - expectation_tr(&density_operator(&e, false), &obs)).abs() <= 1e-10 * e.total() as f64);
        }

        #[test]
        fn trace_variance_dominates_component_average(e in ensemble_strategy(), axis in axis_strategy()) {
            let obs = spin_operator(&axis);
            let rho_var = variance_tr(&density_operator(&e, true), &obs);
            let w = e.weights();
            let stats: Vec<(f64, f64)> = e.components().iter().map(|c| state_mean_and_variance(&c.state, &axis)).collect();
            let avg_var: f64 = w.iter().zip(&stats).map(|(w, (_, v))| w * v).sum();
            prop_assert!(rho_var >= avg_var - 1e-10);

            let mean: f64 = w.iter().zip(&stats).map(|(w, (m, _))| w * m).sum();
            let spread: f64 = w.iter().zip(&stats).map(|(w, (m, _))| w * (m - mean).powi(2)).sum();
            prop_assert!((rho_var - avg_var - spread).abs() <= 1e-10);
        }

        #[test]
        fn matrix_invariants_are_basis_independent(e in ensemble_strategy(), b in axis_strategy()) {
            let rho = density_operator(&e, true);
            let m = density_matrix(&rho, basis(&b)).unwrap();
            prop_assert!((m.trace().re - rho.op().trace()).abs() <= 1e-10);
            prop_assert!((m.entries[0][1] - m.entries[1][0].conj()).norm() <= EXACT_TOL);
            let e1 = eigensystem(rho.op());
            let e2 = eigensystem(&m.as_hermitian());
            prop_assert!((e1.eigenvalue_plus - e2.eigenvalue_plus).abs() <= 1e-10);
            prop_assert!((e1.eigenvalue_minus - e2.eigenvalue_minus).abs() <= 1e-10);
        }
    }
}
