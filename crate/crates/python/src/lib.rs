use num_complex::Complex64;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use spinstat_core::density::{self, DensityOp};
use spinstat_core::ensemble::{self, EnsembleFile, EnsembleSpec};
use spinstat_core::harness::{self, ExperimentConfig, HarnessError};
use spinstat_core::montecarlo;
use spinstat_core::paradox;
use spinstat_core::qcore::{self, HermitianOp, Spinor};
use spinstat_core::spin::{self, Axis, SpinOutcome};
use spinstat_core::SpinError;

type Matrix = [[Complex64; 2]; 2];

fn value_err(e: SpinError) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn harness_err(e: HarnessError) -> PyErr {
    match e {
        HarnessError::Io { .. } | HarnessError::Read { .. } => PyRuntimeError::new_err(e.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

/// Accepts "x" / "y" / "z" or a `(theta, phi)` tuple.
fn to_axis(obj: &Bound<'_, PyAny>) -> PyResult<Axis> {
    if let Ok(name) = obj.extract::<String>() {
        return name.parse().map_err(value_err);
    }
    let (theta, phi): (f64, f64) = obj
        .extract()
        .map_err(|_| PyValueError::new_err("axis must be 'x', 'y', 'z' or (theta, phi)"))?;
    Axis::from_angles(theta, phi).map_err(value_err)
}

fn to_sign(sign: i64) -> PyResult<SpinOutcome> {
    SpinOutcome::try_from(sign).map_err(value_err)
}

/// A normalized spin-1/2 state.
#[pyclass(name = "Spinor", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PySpinor(Spinor);

#[pymethods]
impl PySpinor {
    #[new]
    fn new(a0: Complex64, a1: Complex64) -> PyResult<Self> {
        Spinor::new(a0, a1).map(Self).map_err(value_err)
    }

    fn components(&self) -> (Complex64, Complex64) {
        (self.0.a0(), self.0.a1())
    }

    fn bloch_vector(&self) -> [f64; 3] {
        self.0.bloch_vector()
    }

    fn inner(&self, other: &PySpinor) -> Complex64 {
        qcore::inner_product(&self.0, &other.0)
    }

    fn projector(&self) -> Matrix {
        qcore::outer_product(&self.0).to_matrix()
    }

    fn __repr__(&self) -> String {
        format!("Spinor({}, {})", self.0.a0(), self.0.a1())
    }
}

/// A preparation record: pure-state components with integer counts.
#[pyclass(name = "Ensemble", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyEnsemble(EnsembleSpec);

#[pymethods]
impl PyEnsemble {
    #[staticmethod]
    fn preset_a(n: u64) -> PyResult<Self> {
        ensemble::make_ensemble_a(n).map(Self).map_err(value_err)
    }

    #[staticmethod]
    fn preset_b(n: u64) -> PyResult<Self> {
        ensemble::make_ensemble_b(n).map(Self).map_err(value_err)
    }

    #[staticmethod]
    fn pair(axis: &Bound<'_, PyAny>, n: u64) -> PyResult<Self> {
        ensemble::make_pair_ensemble(&to_axis(axis)?, n).map(Self).map_err(value_err)
    }

    /// Parses the ensemble JSON file format.
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let file: EnsembleFile = serde_json::from_str(text).map_err(|e| PyValueError::new_err(e.to_string()))?;
        file.build().map(Self).map_err(value_err)
    }

    #[getter]
    fn name(&self) -> String {
        self.0.name().to_string()
    }

    #[getter]
    fn total(&self) -> u64 {
        self.0.total()
    }

    fn components(&self) -> Vec<(PySpinor, u64)> {
        self.0.components().iter().map(|c| (PySpinor(c.state), c.count)).collect()
    }

    fn density_operator(&self, normalized: bool) -> Matrix {
        density::density_operator(&self.0, normalized).op().to_matrix()
    }

    fn __repr__(&self) -> String {
        format!("Ensemble(name={:?}, N={})", self.0.name(), self.0.total())
    }
}

fn rho(e: &PyEnsemble, normalized: bool) -> DensityOp {
    density::density_operator(&e.0, normalized)
}

#[pyfunction]
fn spin_operator(axis: &Bound<'_, PyAny>) -> PyResult<Matrix> {
    Ok(spin::spin_operator(&to_axis(axis)?).to_matrix())
}

#[pyfunction]
fn eigenstate(axis: &Bound<'_, PyAny>, sign: i64) -> PyResult<PySpinor> {
    Ok(PySpinor(spin::eigenstate(&to_axis(axis)?, to_sign(sign)?)))
}

#[pyfunction]
fn born_probability(state: &PySpinor, axis: &Bound<'_, PyAny>, sign: i64) -> PyResult<f64> {
    Ok(spin::born_probability(&state.0, &to_axis(axis)?, to_sign(sign)?))
}

#[pyfunction]
fn state_mean_and_variance(state: &PySpinor, axis: &Bound<'_, PyAny>) -> PyResult<(f64, f64)> {
    Ok(spin::state_mean_and_variance(&state.0, &to_axis(axis)?))
}

#[pyfunction]
#[pyo3(signature = (ensemble, axis, normalized = true))]
fn expectation_tr(ensemble: &PyEnsemble, axis: &Bound<'_, PyAny>, normalized: bool) -> PyResult<f64> {
    Ok(density::expectation_tr(&rho(ensemble, normalized), &spin::spin_operator(&to_axis(axis)?)))
}

#[pyfunction]
#[pyo3(signature = (ensemble, axis, normalized = true))]
fn variance_tr(ensemble: &PyEnsemble, axis: &Bound<'_, PyAny>, normalized: bool) -> PyResult<f64> {
    Ok(density::variance_tr(&rho(ensemble, normalized), &spin::spin_operator(&to_axis(axis)?)))
}

#[pyfunction]
#[pyo3(signature = (ensemble, axis, extensive = false))]
fn statistical_average_expectation(ensemble: &PyEnsemble, axis: &Bound<'_, PyAny>, extensive: bool) -> PyResult<f64> {
    Ok(density::statistical_average_expectation(
        &ensemble.0,
        &spin::spin_operator(&to_axis(axis)?),
        extensive,
    ))
}

/// Density matrix entries in the eigenbasis of `basis`.
#[pyfunction]
#[pyo3(signature = (ensemble, basis = None, normalized = true))]
fn density_matrix(ensemble: &PyEnsemble, basis: Option<&Bound<'_, PyAny>>, normalized: bool) -> PyResult<Matrix> {
    let axis = basis.map(to_axis).transpose()?.unwrap_or(Axis::Z);
    let b = [spin::eigenstate(&axis, SpinOutcome::Plus), spin::eigenstate(&axis, SpinOutcome::Minus)];
    Ok(density::density_matrix(&rho(ensemble, normalized), b).map_err(value_err)?.entries)
}

#[pyfunction]
#[pyo3(signature = (a, b, tol, normalized = true))]
fn density_equal(a: &PyEnsemble, b: &PyEnsemble, tol: f64, normalized: bool) -> PyResult<bool> {
    density::density_equal(&rho(a, normalized), &rho(b, normalized), tol).map_err(value_err)
}

/// `(mean, variance, std_dev)` of the total, half-quantum units.
#[pyfunction]
fn preparation_aware_prediction(ensemble: &PyEnsemble, axis: &Bound<'_, PyAny>) -> PyResult<(f64, f64, f64)> {
    let p = montecarlo::preparation_aware_prediction(&ensemble.0, &to_axis(axis)?);
    Ok((p.mean, p.variance, p.std_dev))
}

/// `(support, probabilities)` of the exact total distribution.
#[pyfunction]
fn exact_total_distribution(ensemble: &PyEnsemble, axis: &Bound<'_, PyAny>) -> PyResult<(Vec<i64>, Vec<f64>)> {
    let d = montecarlo::exact_total_distribution(&ensemble.0, &to_axis(axis)?).map_err(value_err)?;
    Ok((d.support, d.probabilities))
}

/// Returns `(sample_mean, sample_variance, totals)`.
#[pyfunction]
fn run_trials(
    py: Python<'_>,
    ensemble: &PyEnsemble,
    axis: &Bound<'_, PyAny>,
    trials: u64,
    seed: u64,
) -> PyResult<(f64, f64, Vec<i64>)> {
    let axis = to_axis(axis)?;
    let spec = ensemble.0.clone();
    let run = py
        .detach(move || montecarlo::run_trials(&spec, &axis, trials, seed, true))
        .map_err(value_err)?;
    let totals = run.records.unwrap_or_default().iter().map(|r| r.total_half_quanta).collect();
    Ok((run.statistics.sample_mean, run.statistics.sample_variance, totals))
}

#[pyfunction]
fn variance_pseudo_operator(state: &PySpinor) -> Matrix {
    paradox::variance_pseudo_operator(&state.0).to_matrix()
}

/// `(rms_residual, max_residual)` of the best single-operator fit.
#[pyfunction]
fn fixed_operator_infeasibility(samples: usize, seed: u64) -> PyResult<(f64, f64)> {
    let fit = paradox::fixed_operator_infeasibility(samples, seed).map_err(value_err)?;
    Ok((fit.rms_residual, fit.max_residual))
}

/// Runs `spinstat run` on a JSON config string and returns the JSON report.
#[pyfunction]
fn run_experiment(py: Python<'_>, config_json: &str) -> PyResult<String> {
    let cfg = ExperimentConfig::from_json(config_json).map_err(harness_err)?;
    py.detach(move || harness::run_experiment(&cfg).and_then(|r| harness::report_json(&r)))
        .map_err(harness_err)
}

/// JSON form of the variance-operator contradiction and fit residuals.
#[pyfunction]
#[pyo3(signature = (samples = 100_000, seed = 0))]
fn demo_paradox(samples: usize, seed: u64) -> PyResult<String> {
    let report = harness::demo_paradox(samples, seed).map_err(harness_err)?;
    Ok(harness::render_paradox(&report).map_err(harness_err)?.1)
}

#[pyfunction]
fn pauli_x() -> Matrix {
    HermitianOp::pauli_x().to_matrix()
}

#[pymodule]
fn spinstat(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PySpinor>()?;
    m.add_class::<PyEnsemble>()?;
    m.add_function(wrap_pyfunction!(spin_operator, m)?)?;
    m.add_function(wrap_pyfunction!(eigenstate, m)?)?;
    m.add_function(wrap_pyfunction!(born_probability, m)?)?;
    m.add_function(wrap_pyfunction!(state_mean_and_variance, m)?)?;
    m.add_function(wrap_pyfunction!(expectation_tr, m)?)?;
    m.add_function(wrap_pyfunction!(variance_tr, m)?)?;
    m.add_function(wrap_pyfunction!(statistical_average_expectation, m)?)?;
    m.add_function(wrap_pyfunction!(density_matrix, m)?)?;
    m.add_function(wrap_pyfunction!(density_equal, m)?)?;
    m.add_function(wrap_pyfunction!(preparation_aware_prediction, m)?)?;
    m.add_function(wrap_pyfunction!(exact_total_distribution, m)?)?;
    m.add_function(wrap_pyfunction!(run_trials, m)?)?;
    m.add_function(wrap_pyfunction!(variance_pseudo_operator, m)?)?;
    m.add_function(wrap_pyfunction!(fixed_operator_infeasibility, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    m.add_function(wrap_pyfunction!(demo_paradox, m)?)?;
    m.add_function(wrap_pyfunction!(pauli_x, m)?)?;
    Ok(())
}
