//! Ideal Stern–Gerlach measurements on ensembles.
//!
//! Every particle of every trial draws its uniform variate from a
//! counter-addressed ChaCha8 stream keyed by `(seed, trial, particle)`, so the
//! outcome of a given particle never depends on how trials are scheduled
//! across threads. Alongside the sampler this module computes the exact
//! distribution of the ensemble total and the preparation-aware prediction.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ensemble::EnsembleSpec;
use crate::error::SpinError;
use crate::qcore::Spinor;
use crate::spin::{born_probability, state_mean_and_variance, Axis, SpinOutcome};

/// Largest ensemble accepted by [`exact_total_distribution`].
pub const MAX_EXACT_PARTICLES: u64 = 1_000_000;

/// Each draw consumes one 64-bit word, i.e. two 32-bit ChaCha words.
const WORDS_PER_DRAW: u128 = 2;

fn unit_interval(bits: u64) -> f64 {
    (bits >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeededSampler {
    seed: u64,
}

impl SeededSampler {
    pub fn new(seed: u64) -> Self {
        Self { seed }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Uniform draw in [0, 1) for one particle of one trial.
    pub fn uniform(&self, trial_index: u64, particle_index: u64) -> f64 {
        let mut rng = self.trial_stream(trial_index);
        rng.set_word_pos(WORDS_PER_DRAW * particle_index as u128);
        unit_interval(rng.next_u64())
    }

    /// The stream of a whole trial; the k-th `next_u64` is particle k.
    fn trial_stream(&self, trial_index: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(trial_index);
        rng
    }

    pub(crate) fn trial_draws(&self, trial_index: u64) -> impl FnMut() -> f64 {
        let mut rng = self.trial_stream(trial_index);
        move || unit_interval(rng.next_u64())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial_index: u64,
    pub total_half_quanta: i64,
    pub n_plus: u64,
    pub n_minus: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrialStatistics {
    pub trials: u64,
    pub sample_mean: f64,
    /// Unbiased (divides by `trials - 1`).
    pub sample_variance: f64,
    pub min: i64,
    pub max: i64,
}

impl TrialStatistics {
    pub fn from_records(records: &[TrialRecord]) -> Result<Self, SpinError> {
        let n = records.len() as u64;
        if n < 2 {
            return Err(SpinError::TooFewTrials(n));
        }
        let sum: i128 = records.iter().map(|r| r.total_half_quanta as i128).sum();
        let mean = sum as f64 / n as f64;
        let ss: f64 = records
            .iter()
            .map(|r| {
                let d = r.total_half_quanta as f64 - mean;
                d * d
            })
            .sum();
        Ok(Self {
            trials: n,
            sample_mean: mean,
            sample_variance: ss / (n - 1) as f64,
            min: records.iter().map(|r| r.total_half_quanta).min().unwrap_or(0),
            max: records.iter().map(|r| r.total_half_quanta).max().unwrap_or(0),
        })
    }

    /// Relative standard error of the sample variance for near-Gaussian
    /// totals, √(2/(trials−1)).
    pub fn variance_rse(&self) -> f64 {
        (2.0 / (self.trials - 1) as f64).sqrt()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialRun {
    pub statistics: TrialStatistics,
    pub records: Option<Vec<TrialRecord>>,
}

/// Exact PMF of the ensemble total, in half-quantum units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TotalSpinDistribution {
    pub support: Vec<i64>,
    pub probabilities: Vec<f64>,
}

impl TotalSpinDistribution {
    pub fn mean(&self) -> f64 {
        self.support
            .iter()
            .zip(&self.probabilities)
            .map(|(&t, &p)| t as f64 * p)
            .sum()
    }

    pub fn variance(&self) -> f64 {
        let mean = self.mean();
        self.support
            .iter()
            .zip(&self.probabilities)
            .map(|(&t, &p)| p * (t as f64 - mean).powi(2))
            .sum()
    }

    /// Variance of the number of `+1` outcomes. Since total = 2·n₊ − N this
    /// is a quarter of [`TotalSpinDistribution::variance`].
    pub fn count_variance(&self) -> f64 {
        self.variance() / 4.0
    }

    pub fn probability_of(&self, total: i64) -> f64 {
        self.support
            .iter()
            .position(|&t| t == total)
            .map_or(0.0, |i| self.probabilities[i])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PredictionMethod {
    PreparationAware,
    DensityNormalized,
    DensityUnnormalized,
}

/// Predicted mean and variance of the ensemble total, half-quantum units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionReport {
    pub method: PredictionMethod,
    pub mean: f64,
    pub variance: f64,
    pub std_dev: f64,
    pub units: String,
}

pub const HALF_QUANTA: &str = "half_quanta";

impl PredictionReport {
    pub fn new(method: PredictionMethod, mean: f64, variance: f64) -> Self {
        Self {
            method,
            mean,
            variance,
            std_dev: variance.max(0.0).sqrt(),
            units: HALF_QUANTA.to_string(),
        }
    }
}

/// Born-rule threshold sampling: +1 iff `draw < P(+1)`.
pub fn measure_particle(state: &Spinor, axis: &Axis, draw: f64) -> SpinOutcome {
    outcome_for(born_probability(state, axis, SpinOutcome::Plus), draw)
}

fn outcome_for(p_plus: f64, draw: f64) -> SpinOutcome {
    if draw < p_plus {
        SpinOutcome::Plus
    } else {
        SpinOutcome::Minus
    }
}

fn plus_probabilities(e: &EnsembleSpec, axis: &Axis) -> Vec<(f64, u64)> {
    e.components()
        .iter()
        .map(|c| (born_probability(&c.state, axis, SpinOutcome::Plus), c.count))
        .collect()
}

fn measure_with(probs: &[(f64, u64)], sampler: &SeededSampler, trial_index: u64) -> TrialRecord {
    let mut draw = sampler.trial_draws(trial_index);
    let mut n_plus = 0u64;
    let mut n_total = 0u64;
    for &(p, count) in probs {
        for _ in 0..count {
            if outcome_for(p, draw()) == SpinOutcome::Plus {
                n_plus += 1;
            }
        }
        n_total += count;
    }
    let n_minus = n_total - n_plus;
    TrialRecord {
        trial_index,
        total_half_quanta: n_plus as i64 - n_minus as i64,
        n_plus,
        n_minus,
    }
}

/// Measures every particle of `e` once along `axis`. Particles are indexed
/// in component order.
pub fn measure_ensemble_total(
    e: &EnsembleSpec,
    axis: &Axis,
    sampler: &SeededSampler,
    trial_index: u64,
) -> TrialRecord {
    measure_with(&plus_probabilities(e, axis), sampler, trial_index)
}

/// Repeats [`measure_ensemble_total`] over `trials` independent trials in
/// parallel. Output is identical for any thread count.
pub fn run_trials(
    e: &EnsembleSpec,
    axis: &Axis,
    trials: u64,
    seed: u64,
    keep_records: bool,
) -> Result<TrialRun, SpinError> {
    if trials < 2 {
        return Err(SpinError::TooFewTrials(trials));
    }
    axis.validate()?;
    let probs = plus_probabilities(e, axis);
    let sampler = SeededSampler::new(seed);
    let records: Vec<TrialRecord> = (0..trials)
        .into_par_iter()
        .map(|t| measure_with(&probs, &sampler, t))
        .collect();
    let statistics = TrialStatistics::from_records(&records)?;
    Ok(TrialRun {
        statistics,
        records: keep_records.then_some(records),
    })
}

/// Exact distribution of the total, convolving each particle's two-point
/// law into the running distribution of the `+1` count.
pub fn exact_total_distribution(e: &EnsembleSpec, axis: &Axis) -> Result<TotalSpinDistribution, SpinError> {
    let n = e.total();
    if n > MAX_EXACT_PARTICLES {
        return Err(SpinError::DistributionTooLarge(n));
    }
    let mut pmf = Vec::with_capacity(n as usize + 1);
    pmf.push(1.0f64);
    for (p, count) in plus_probabilities(e, axis) {
        let q = 1.0 - p;
        for _ in 0..count {
            pmf.push(0.0);
            for k in (1..pmf.len()).rev() {
                pmf[k] = pmf[k] * q + pmf[k - 1] * p;
            }
            pmf[0] *= q;
        }
    }
    let n = n as i64;
    let (support, probabilities) = pmf
        .into_iter()
        .enumerate()
        .filter(|&(_, prob)| prob != 0.0)
        .map(|(k, prob)| (2 * k as i64 - n, prob))
        .unzip();
    Ok(TotalSpinDistribution {
        support,
        probabilities,
    })
}

/// Mean and variance of the total from the preparation record, treating
/// particles as independent.
pub fn preparation_aware_prediction(e: &EnsembleSpec, axis: &Axis) -> PredictionReport {
    let (mean, variance) = e.components().iter().fold((0.0, 0.0), |(m, v), c| {
        let (sm, sv) = state_mean_and_variance(&c.state, axis);
        (m + c.count as f64 * sm, v + c.count as f64 * sv)
    });
    PredictionReport::new(PredictionMethod::PreparationAware, mean, variance)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensemble::{make_ensemble_a, make_ensemble_b, make_pair_ensemble, Component};
    use crate::spin::eigenstate;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::{FRAC_PI_3, FRAC_PI_4, PI};

    /// Sums the probability of every ±1 outcome string.
    fn enumerate_totals(e: &EnsembleSpec, axis: &Axis) -> Vec<(i64, f64)> {
        let particles: Vec<f64> = e
            .components()
            .iter()
            .flat_map(|c| {
                let p = born_probability(&c.state, axis, SpinOutcome::Plus);
                std::iter::repeat_n(p, c.count as usize)
            })
            .collect();
        let n = particles.len();
        let mut acc = vec![0.0; n + 1];
        for mask in 0u64..(1 << n) {
            let mut prob = 1.0;
            for (i, &p) in particles.iter().enumerate() {
                prob *= if mask >> i & 1 == 1 { p } else { 1.0 - p };
            }
            acc[mask.count_ones() as usize] += prob;
        }
        acc.into_iter()
            .enumerate()
            .map(|(k, p)| (2 * k as i64 - n as i64, p))
            .collect()
    }

    #[test]
    fn measure_particle_examples() {
        let xp = eigenstate(&Axis::X, SpinOutcome::Plus);
        let xm = eigenstate(&Axis::X, SpinOutcome::Minus);
        let zp = eigenstate(&Axis::Z, SpinOutcome::Plus);
        for draw in [0.0, 0.3, 0.5, 0.999_999_999, 1.0 - f64::EPSILON] {
            assert_eq!(measure_particle(&xp, &Axis::X, draw), SpinOutcome::Plus);
            assert_eq!(measure_particle(&xm, &Axis::X, draw), SpinOutcome::Minus);
        }
        assert_eq!(measure_particle(&zp, &Axis::X, 0.3), SpinOutcome::Plus);
        assert_eq!(measure_particle(&zp, &Axis::X, 0.7), SpinOutcome::Minus);
    }

    #[test]
    fn sampler_is_counter_addressed() {
        let s = SeededSampler::new(42);
        let mut draws = s.trial_draws(7);
        let sequential: Vec<f64> = (0..5).map(|_| draws()).collect();
        for (k, v) in sequential.iter().enumerate().rev() {
            assert_eq!(s.uniform(7, k as u64), *v);
        }
        assert_ne!(s.uniform(7, 0), s.uniform(8, 0));
        assert_ne!(s.uniform(7, 0), SeededSampler::new(43).uniform(7, 0));
        assert!(sequential.iter().all(|v| (0.0..1.0).contains(v)));
    }

    #[test]
    fn ensemble_a_total_is_always_zero() {
        let a = make_ensemble_a(1000).unwrap();
        let sampler = SeededSampler::new(3);
        for t in 0..20 {
            let r = measure_ensemble_total(&a, &Axis::X, &sampler, t);
            assert_eq!(r.total_half_quanta, 0);
            assert_eq!((r.n_plus, r.n_minus), (500, 500));
        }
    }

    #[test]
    fn single_particle_is_one_bernoulli_trial() {
        let e = EnsembleSpec::new("one", vec![Component { state: Spinor::up(), count: 1 }]).unwrap();
        let sampler = SeededSampler::new(11);
        let totals: Vec<i64> = (0..200)
            .map(|t| measure_ensemble_total(&e, &Axis::X, &sampler, t).total_half_quanta)
            .collect();
        assert!(totals.iter().all(|t| *t == 1 || *t == -1));
        assert!(totals.contains(&1) && totals.contains(&-1));
    }

    #[test]
    fn records_respect_parity() {
        let e = make_pair_ensemble(&Axis::from_angles(FRAC_PI_3, 0.4).unwrap(), 50).unwrap();
        let run = run_trials(&e, &Axis::X, 200, 9, true).unwrap();
        for r in run.records.unwrap() {
            assert_eq!(r.n_plus + r.n_minus, 50);
            assert_eq!(r.total_half_quanta, r.n_plus as i64 - r.n_minus as i64);
            assert!(r.total_half_quanta.abs() <= 50);
            assert_eq!(r.total_half_quanta.rem_euclid(2), 0);
        }
    }

    #[test]
    fn too_few_trials_rejected() {
        let b = make_ensemble_b(4).unwrap();
        assert_eq!(run_trials(&b, &Axis::X, 1, 0, false), Err(SpinError::TooFewTrials(1)));
    }

    #[test]
    fn run_is_independent_of_thread_count() {
        let b = make_ensemble_b(100).unwrap();
        let run_in = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| run_trials(&b, &Axis::X, 500, 1234, true).unwrap())
        };
        assert_eq!(run_in(1), run_in(7));
    }

    #[test]
    fn exact_distribution_examples() {
        let b2 = exact_total_distribution(&make_ensemble_b(2).unwrap(), &Axis::X).unwrap();
        assert_eq!(b2.support, vec![-2, 0, 2]);
        for (got, want) in b2.probabilities.iter().zip([0.25, 0.5, 0.25]) {
            assert_abs_diff_eq!(*got, want, epsilon = 1e-12);
        }

        for n in [2, 10, 100] {
            let a = exact_total_distribution(&make_ensemble_a(n).unwrap(), &Axis::X).unwrap();
            assert_eq!(a.support, vec![0]);
            assert_eq!(a.probabilities, vec![1.0]);
        }

        for n in [2u64, 16, 1000] {
            let b = exact_total_distribution(&make_ensemble_b(n).unwrap(), &Axis::X).unwrap();
            assert_abs_diff_eq!(b.count_variance(), n as f64 / 4.0, epsilon = 1e-9);
            assert_abs_diff_eq!(b.probabilities.iter().sum::<f64>(), 1.0, epsilon = 1e-10);
            assert!(b.support.iter().all(|t| (t - n as i64).rem_euclid(2) == 0));
        }
    }

    #[test]
    fn exact_distribution_matches_enumeration() {
        let mixed = EnsembleSpec::new(
            "mixed",
            vec![
                Component { state: eigenstate(&Axis::from_angles(0.4, 1.0).unwrap(), SpinOutcome::Plus), count: 3 },
                Component { state: eigenstate(&Axis::from_angles(2.0, 0.2).unwrap(), SpinOutcome::Minus), count: 4 },
                Component { state: eigenstate(&Axis::Y, SpinOutcome::Plus), count: 2 },
            ],
        )
        .unwrap();
        for axis in [Axis::X, Axis::Z, Axis::from_angles(1.1, 2.2).unwrap()] {
            let exact = exact_total_distribution(&mixed, &axis).unwrap();
            for (total, p) in enumerate_totals(&mixed, &axis) {
                assert_abs_diff_eq!(exact.probability_of(total), p, epsilon = 1e-12);
            }
            let pred = preparation_aware_prediction(&mixed, &axis);
            assert_abs_diff_eq!(pred.mean, exact.mean(), epsilon = 1e-9);
            assert_abs_diff_eq!(pred.variance, exact.variance(), epsilon = 1e-9);
        }
    }

    #[test]
    fn total_variance_is_four_count_variances() {
        let b = make_ensemble_b(40).unwrap();
        let exact = exact_total_distribution(&b, &Axis::X).unwrap();
        let counts_mean: f64 = exact.support.iter().zip(&exact.probabilities)
            .map(|(&t, &p)| p * (t + 40) as f64 / 2.0).sum();
        let counts_var: f64 = exact.support.iter().zip(&exact.probabilities)
            .map(|(&t, &p)| p * ((t + 40) as f64 / 2.0 - counts_mean).powi(2)).sum();
        assert_abs_diff_eq!(exact.variance(), 4.0 * counts_var, epsilon = 1e-9);
        assert_abs_diff_eq!(counts_var, 10.0, epsilon = 1e-9);
    }

    #[test]
    fn prediction_examples() {
        let a = preparation_aware_prediction(&make_ensemble_a(1000).unwrap(), &Axis::X);
        assert_eq!((a.mean, a.variance, a.std_dev), (0.0, 0.0, 0.0));
        let b = preparation_aware_prediction(&make_ensemble_b(1000).unwrap(), &Axis::X);
        assert_eq!((b.mean, b.variance), (0.0, 1000.0));
        assert_abs_diff_eq!(b.std_dev, 1000f64.sqrt(), epsilon = 1e-12);

        for theta in [0.0, FRAC_PI_4, 1.0, PI / 2.0] {
            let axis = Axis::from_angles(theta, 0.3).unwrap();
            let nx = axis.unit_vector()[0];
            let p = preparation_aware_prediction(&make_pair_ensemble(&axis, 1000).unwrap(), &Axis::X);
            assert_abs_diff_eq!(p.mean, 0.0, epsilon = 1e-9);
            assert_abs_diff_eq!(p.variance, 1000.0 * (1.0 - nx * nx), epsilon = 1e-9);
        }
    }

    #[test]
    fn guard_rejects_huge_ensembles() {
        let e = EnsembleSpec::new("huge", vec![Component { state: Spinor::up(), count: MAX_EXACT_PARTICLES + 2 }]).unwrap();
        assert_eq!(
            exact_total_distribution(&e, &Axis::X),
            Err(SpinError::DistributionTooLarge(MAX_EXACT_PARTICLES + 2))
        );
    }
}
