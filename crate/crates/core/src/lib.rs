//! Spin-1/2 ensemble statistics.
//!
//! Predicts the distribution of the total spin of an ensemble measured in an
//! ideal Stern–Gerlach apparatus in three ways: from the full preparation
//! record, by Monte Carlo sampling of every particle, and from the density
//! operator (normalized and unnormalized). Ensembles with equal density
//! matrices can still differ in the variance of the total, which the
//! [`harness`] makes visible.
//!
//! Internally every spin value is in half-quantum units (a single outcome is
//! ±1, meaning ±ħ/2).

pub mod density;
pub mod ensemble;
pub mod error;
pub mod harness;
pub mod montecarlo;
pub mod paradox;
pub mod qcore;
pub mod spin;

pub use density::{DensityMatrix, DensityOp, Normalization};
pub use ensemble::{make_ensemble_a, make_ensemble_b, make_pair_ensemble, Component, EnsembleFile, EnsembleSpec, Preset};
pub use error::SpinError;
pub use montecarlo::{PredictionReport, SeededSampler, TotalSpinDistribution, TrialRecord, TrialStatistics};
pub use qcore::{ComplexAmplitude, EigenSystem, HermitianOp, Spinor};
pub use spin::{Axis, HbarScale, SpinOutcome};
