//! Experiment runner: predicts the ensemble total three ways, simulates it,
//! and writes a JSON report plus a CSV of per-trial totals.
//!
//! Files always hold half-quantum values together with ħ; conversion to ħ
//! units happens only in [`render_report`].

use std::fmt::Write as _;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::density::{density_equal, density_matrix, density_operator, expectation_tr, variance_tr, DensityMatrix, DensityOp};
use crate::ensemble::{make_ensemble_a, make_ensemble_b, EnsembleFile, EnsembleSpec, Preset};
use crate::error::SpinError;
use crate::montecarlo::{preparation_aware_prediction, run_trials, PredictionMethod, PredictionReport, TrialRecord, TrialStatistics};
use crate::paradox::{fixed_operator_infeasibility, null_operator_contradiction, ContradictionWitness, FitResidual};
use crate::qcore::EXACT_TOL;
use crate::spin::{eigenstate, spin_operator, Axis, HbarScale, SpinOutcome};

/// Half-width of the acceptance band, in relative standard errors.
pub const VERDICT_RSE: f64 = 5.0;

pub const CSV_HEADER: &str = "trial,total_half_quanta,n_plus,n_minus";

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid config field `{field}`: {message}")]
    Config { field: &'static str, message: String },
    #[error("cannot write {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot read {path}: {source}")]
    Read {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Spin(#[from] SpinError),
}

impl HarnessError {
    /// Short category name used in CLI diagnostics.
    pub fn category(&self) -> &'static str {
        match self {
            HarnessError::Config { .. } => "config",
            HarnessError::Io { .. } => "io",
            HarnessError::Read { .. } => "read",
            HarnessError::Json(_) => "json",
            HarnessError::Spin(_) => "physics",
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config { .. } => 3,
            HarnessError::Io { .. } => 4,
            HarnessError::Read { .. } => 5,
            HarnessError::Json(_) => 6,
            HarnessError::Spin(_) => 7,
        }
    }
}

fn config_err(field: &'static str, message: impl ToString) -> HarnessError {
    HarnessError::Config {
        field,
        message: message.to_string(),
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputPaths {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub report: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub totals: Option<PathBuf>,
}

fn default_hbar() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub ensemble: EnsembleFile,
    pub axis: Axis,
    pub trials: u64,
    pub seed: u64,
    #[serde(default = "default_hbar")]
    pub hbar: f64,
    #[serde(default)]
    pub outputs: OutputPaths,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, HarnessError> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = fs::read_to_string(path).map_err(|source| HarnessError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_json(&text)
    }

    /// Checks every field, naming the first invalid one.
    pub fn validate(&self) -> Result<(EnsembleSpec, HbarScale), HarnessError> {
        if self.trials < 2 {
            return Err(config_err("trials", SpinError::TooFewTrials(self.trials)));
        }
        let hbar = HbarScale::new(self.hbar).map_err(|e| config_err("hbar", e))?;
        self.axis.validate().map_err(|e| config_err("axis", e))?;
        let ensemble = self.ensemble.build().map_err(|e| config_err("ensemble", e))?;
        Ok((ensemble, hbar))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Predictions {
    pub preparation_aware: PredictionReport,
    pub density_normalized: PredictionReport,
    pub density_unnormalized: PredictionReport,
}

impl Predictions {
    pub fn iter(&self) -> impl Iterator<Item = &PredictionReport> {
        [&self.preparation_aware, &self.density_normalized, &self.density_unnormalized].into_iter()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub matches_empirical: bool,
    /// Set for exact-zero predictions, which admit no statistical band.
    pub exact_match: Option<bool>,
    /// (empirical − predicted) / (rse · predicted), for nonzero predictions.
    pub z_score: Option<f64>,
}

impl Verdict {
    /// Compares an empirical variance against a predicted one.
    pub fn judge(predicted_variance: f64, empirical: &TrialStatistics) -> Self {
        let observed = empirical.sample_variance;
        if predicted_variance == 0.0 {
            let exact = observed == 0.0;
            return Self {
                matches_empirical: exact,
                exact_match: Some(exact),
                z_score: None,
            };
        }
        if predicted_variance < 0.0 {
            return Self {
                matches_empirical: false,
                exact_match: None,
                z_score: None,
            };
        }
        let z = (observed - predicted_variance) / (empirical.variance_rse() * predicted_variance);
        Self {
            matches_empirical: z.abs() <= VERDICT_RSE,
            exact_match: None,
            z_score: Some(z),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Verdicts {
    pub preparation_aware: Verdict,
    pub density_normalized: Verdict,
    pub density_unnormalized: Verdict,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityCheck {
    /// Normalized density matrix in the ẑ basis.
    pub matrix: DensityMatrix,
    pub purity: f64,
    /// For preset ensembles, the other preset of the same size.
    pub counterpart: Option<Preset>,
    pub equal_to_counterpart: Option<bool>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Units {
    pub hbar: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub config: ExperimentConfig,
    pub ensemble_name: String,
    pub particles: u64,
    pub predictions: Predictions,
    pub empirical: TrialStatistics,
    pub verdicts: Verdicts,
    pub density: DensityCheck,
    pub units: Units,
}

/// Trace-formalism predictions for the total along `axis`.
pub fn density_predictions(e: &EnsembleSpec, axis: &Axis) -> (PredictionReport, PredictionReport) {
    let obs = spin_operator(axis);
    let predict = |rho: &DensityOp, method| {
        PredictionReport::new(method, expectation_tr(rho, &obs), variance_tr(rho, &obs))
    };
    (
        predict(&density_operator(e, true), PredictionMethod::DensityNormalized),
        predict(&density_operator(e, false), PredictionMethod::DensityUnnormalized),
    )
}

fn density_check(cfg: &ExperimentConfig, e: &EnsembleSpec) -> Result<DensityCheck, SpinError> {
    let rho = density_operator(e, true);
    let matrix = density_matrix(
        &rho,
        [eigenstate(&Axis::Z, SpinOutcome::Plus), eigenstate(&Axis::Z, SpinOutcome::Minus)],
    )?;
    let (counterpart, equal_to_counterpart) = match cfg.ensemble {
        EnsembleFile::Preset { preset, n } => {
            let (other, other_spec) = match preset {
                Preset::A => (Preset::B, make_ensemble_b(n)?),
                Preset::B => (Preset::A, make_ensemble_a(n)?),
            };
            let equal = density_equal(&rho, &density_operator(&other_spec, true), EXACT_TOL)?;
            (Some(other), Some(equal))
        }
        EnsembleFile::Explicit { .. } => (None, None),
    };
    Ok(DensityCheck {
        matrix,
        purity: rho.purity(),
        counterpart,
        equal_to_counterpart,
    })
}

/// Computes the comparison without touching the filesystem. Returns the
/// per-trial records alongside the report.
pub fn compute_experiment(cfg: &ExperimentConfig) -> Result<(ComparisonReport, Vec<TrialRecord>), HarnessError> {
    let (ensemble, hbar) = cfg.validate()?;
    let preparation_aware = preparation_aware_prediction(&ensemble, &cfg.axis);
    let (density_normalized, density_unnormalized) = density_predictions(&ensemble, &cfg.axis);
    let run = run_trials(&ensemble, &cfg.axis, cfg.trials, cfg.seed, true)?;
    let empirical = run.statistics;

    let verdicts = Verdicts {
        preparation_aware: Verdict::judge(preparation_aware.variance, &empirical),
        density_normalized: Verdict::judge(density_normalized.variance, &empirical),
        density_unnormalized: Verdict::judge(density_unnormalized.variance, &empirical),
    };
    let report = ComparisonReport {
        config: cfg.clone(),
        ensemble_name: ensemble.name().to_string(),
        particles: ensemble.total(),
        predictions: Predictions {
            preparation_aware,
            density_normalized,
            density_unnormalized,
        },
        empirical,
        verdicts,
        density: density_check(cfg, &ensemble)?,
        units: Units { hbar: hbar.hbar() },
    };
    Ok((report, run.records.unwrap_or_default()))
}

/// Runs the experiment and writes the configured report and totals files.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ComparisonReport, HarnessError> {
    let (report, records) = compute_experiment(cfg)?;
    if let Some(path) = &cfg.outputs.totals {
        write_totals_csv(path, &records)?;
    }
    if let Some(path) = &cfg.outputs.report {
        write_file(path, report_json(&report)?.as_bytes())?;
    }
    Ok(report)
}

pub fn report_json(report: &ComparisonReport) -> Result<String, HarnessError> {
    let mut s = serde_json::to_string_pretty(report)?;
    s.push('\n');
    Ok(s)
}

pub fn parse_report(json: &str) -> Result<ComparisonReport, HarnessError> {
    Ok(serde_json::from_str(json)?)
}

pub fn write_file(path: &Path, bytes: &[u8]) -> Result<(), HarnessError> {
    fs::write(path, bytes).map_err(|source| HarnessError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn write_totals_csv(path: &Path, records: &[TrialRecord]) -> Result<(), HarnessError> {
    let io_err = |source| HarnessError::Io {
        path: path.to_path_buf(),
        source,
    };
    let file = fs::File::create(path).map_err(io_err)?;
    let mut w = BufWriter::new(file);
    write_totals(&mut w, records).map_err(io_err)?;
    w.flush().map_err(io_err)
}

pub fn write_totals(w: &mut impl Write, records: &[TrialRecord]) -> std::io::Result<()> {
    writeln!(w, "{CSV_HEADER}")?;
    for r in records {
        writeln!(w, "{},{},{},{}", r.trial_index, r.total_half_quanta, r.n_plus, r.n_minus)?;
    }
    Ok(())
}

/// Up to two decimals, trailing zeros dropped, no negative zero.
pub fn format_number(x: f64) -> String {
    let s = format!("{x:.2}");
    let s = if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    };
    if s == "-0" {
        "0".into()
    } else {
        s
    }
}

/// `mean ± σ` in units of ħ.
pub fn format_mean_std(mean_half: f64, variance_half_sq: f64, scale: &HbarScale) -> String {
    let sigma = scale.variance(variance_half_sq.max(0.0)).sqrt();
    format!("{} ± {}", format_number(scale.value(mean_half)), format_number(sigma))
}

fn verdict_text(v: &Verdict) -> String {
    let outcome = if v.matches_empirical { "match" } else { "MISMATCH" };
    match (v.exact_match, v.z_score) {
        (Some(_), _) => format!("{outcome} (exact)"),
        (None, Some(z)) => format!("{outcome} (z = {z:.2})"),
        (None, None) => format!("{outcome} (negative variance)"),
    }
}

/// Human-readable summary in units of ħ, plus the JSON archive (which stays
/// in half-quantum units).
pub fn render_report(report: &ComparisonReport, scale: &HbarScale) -> Result<(String, String), HarnessError> {
    let mut t = String::new();
    let cfg = &report.config;
    let _ = writeln!(
        t,
        "ensemble {} (N = {}), axis {}, {} trials, seed {}, hbar = {}",
        report.ensemble_name,
        report.particles,
        cfg.axis,
        cfg.trials,
        cfg.seed,
        format_number(scale.hbar())
    );
    let rows = [
        ("preparation-aware", &report.predictions.preparation_aware, &report.verdicts.preparation_aware),
        ("density (normalized)", &report.predictions.density_normalized, &report.verdicts.density_normalized),
        ("density (unnormalized)", &report.predictions.density_unnormalized, &report.verdicts.density_unnormalized),
    ];
    for (label, p, v) in rows {
        let _ = writeln!(
            t,
            "  {label:<24} S = {:<18} Var = {:<12} {}",
            format_mean_std(p.mean, p.variance, scale),
            format_number(scale.variance(p.variance)),
            verdict_text(v)
        );
    }
    let emp = &report.empirical;
    let _ = writeln!(
        t,
        "  {:<24} S = {:<18} Var = {:<12} range [{}, {}]",
        "empirical",
        format_mean_std(emp.sample_mean, emp.sample_variance, scale),
        format_number(scale.variance(emp.sample_variance)),
        format_number(scale.value(emp.min as f64)),
        format_number(scale.value(emp.max as f64)),
    );
    let m = &report.density.matrix.entries;
    let _ = writeln!(
        t,
        "  density matrix (z basis): [[{}, {}], [{}, {}]], purity {}",
        format_complex(m[0][0]),
        format_complex(m[0][1]),
        format_complex(m[1][0]),
        format_complex(m[1][1]),
        format_number(report.density.purity)
    );
    if let (Some(other), Some(equal)) = (report.density.counterpart, report.density.equal_to_counterpart) {
        let _ = writeln!(
            t,
            "  density matrices of presets {} and {:?} {}",
            report.ensemble_name,
            other,
            if equal { "are EQUAL" } else { "differ" }
        );
    }
    Ok((t, report_json(report)?))
}

fn format_complex(z: num_complex::Complex64) -> String {
    if z.im == 0.0 {
        format_number(z.re)
    } else {
        format!("{}{:+}i", format_number(z.re), format_number(z.im))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParadoxReference {
    pub rms_residual: f64,
    pub max_residual: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParadoxReport {
    pub witness: ContradictionWitness,
    pub fit: FitResidual,
    pub seed: u64,
    /// Closed-form large-sample limits of the fit residuals.
    pub reference: ParadoxReference,
}

pub fn demo_paradox(samples: usize, seed: u64) -> Result<ParadoxReport, HarnessError> {
    Ok(ParadoxReport {
        witness: null_operator_contradiction(),
        fit: fixed_operator_infeasibility(samples, seed)?,
        seed,
        reference: ParadoxReference {
            rms_residual: (4.0f64 / 45.0).sqrt(),
            max_residual: 2.0 / 3.0,
        },
    })
}

pub fn render_paradox(report: &ParadoxReport) -> Result<(String, String), HarnessError> {
    let w = &report.witness;
    let mut t = String::new();
    let _ = writeln!(t, "state-indexed variance operator O_b = (S_x - <b|S_x|b>)^2, half-quantum units");
    for (label, r) in [("|S_x,+1>", &w.sx_plus), ("|S_x,-1>", &w.sx_minus), ("|S_z,+1>", &w.sz_plus)] {
        let _ = writeln!(
            t,
            "  {label}: |O_b b| = {:.3e}, <b|O_b|b> = {}",
            r.annihilation_residual,
            format_number(r.expectation_on_source)
        );
    }
    let _ = writeln!(t, "  max |O_(S_x,+1) - O_(S_z,+1)| = {}", format_number(w.operator_difference));
    let _ = writeln!(t, "  contradiction holds: {}", if w.holds() { "yes" } else { "NO" });
    let _ = writeln!(t, "single-operator least-squares fit over {} Bloch-sphere states (seed {})", report.fit.samples, report.seed);
    let _ = writeln!(t, "  {:<14} {:>10} {:>10}", "residual", "observed", "limit");
    let _ = writeln!(t, "  {:<14} {:>10.4} {:>10.4}", "rms", report.fit.rms_residual, report.reference.rms_residual);
    let _ = writeln!(t, "  {:<14} {:>10.4} {:>10.4}", "max", report.fit.max_residual, report.reference.max_residual);
    let mut json = serde_json::to_string_pretty(report)?;
    json.push('\n');
    Ok((t, json))
}
