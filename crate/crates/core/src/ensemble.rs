//! Ensemble preparation records.
//!
//! An [`EnsembleSpec`] keeps which pure state each group of particles was
//! prepared in and how many particles share it. Particle counts are exact
//! integers; weights are derived on demand.

use serde::{Deserialize, Serialize};

use crate::error::SpinError;
use crate::qcore::Spinor;
use crate::spin::{eigenstate, Axis, SpinOutcome};

/// A group of `count` particles all prepared in `state`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Component {
    pub state: Spinor,
    pub count: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleSpec {
    name: String,
    components: Vec<Component>,
}

impl EnsembleSpec {
    pub fn new(name: impl Into<String>, components: Vec<Component>) -> Result<Self, SpinError> {
        let total: u64 = components.iter().map(|c| c.count).sum();
        if total == 0 {
            return Err(SpinError::EmptyEnsemble);
        }
        Ok(Self {
            name: name.into(),
            components,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn components(&self) -> &[Component] {
        &self.components
    }

    /// Total number of particles N.
    pub fn total(&self) -> u64 {
        self.components.iter().map(|c| c.count).sum()
    }

    /// Fractions count_i / N.
    pub fn weights(&self) -> Vec<f64> {
        let n = self.total() as f64;
        self.components.iter().map(|c| c.count as f64 / n).collect()
    }
}

fn check_even(n: u64) -> Result<u64, SpinError> {
    match n {
        0 => Err(SpinError::EmptyEnsemble),
        n if n % 2 == 1 => Err(SpinError::OddEnsemble(n)),
        n => Ok(n / 2),
    }
}

/// Half the particles in each eigenstate of the spin along `axis`.
pub fn make_pair_ensemble(axis: &Axis, n: u64) -> Result<EnsembleSpec, SpinError> {
    axis.validate()?;
    let half = check_even(n)?;
    EnsembleSpec::new(
        format!("pair[{axis}]"),
        vec![
            Component {
                state: eigenstate(axis, SpinOutcome::Plus),
                count: half,
            },
            Component {
                state: eigenstate(axis, SpinOutcome::Minus),
                count: half,
            },
        ],
    )
}

/// Ensemble A: N/2 particles in |S_x,+1⟩ and N/2 in |S_x,−1⟩.
pub fn make_ensemble_a(n: u64) -> Result<EnsembleSpec, SpinError> {
    let mut e = make_pair_ensemble(&Axis::X, n)?;
    e.name = "A".into();
    Ok(e)
}

/// Ensemble B: N/2 particles in |S_z,+1⟩ and N/2 in |S_z,−1⟩.
pub fn make_ensemble_b(n: u64) -> Result<EnsembleSpec, SpinError> {
    let mut e = make_pair_ensemble(&Axis::Z, n)?;
    e.name = "B".into();
    Ok(e)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Preset {
    A,
    B,
}

impl std::str::FromStr for Preset {
    type Err = SpinError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "A" | "a" => Ok(Preset::A),
            "B" | "b" => Ok(Preset::B),
            other => Err(SpinError::UnknownPreset(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComponentFile {
    pub axis: Axis,
    pub sign: SpinOutcome,
    pub count: u64,
}

/// On-disk ensemble description: either a preset shorthand or an explicit
/// list of `(axis, sign, count)` components.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum EnsembleFile {
    Preset { preset: Preset, n: u64 },
    Explicit {
        name: String,
        components: Vec<ComponentFile>,
    },
}

impl EnsembleFile {
    pub fn build(&self) -> Result<EnsembleSpec, SpinError> {
        match self {
            EnsembleFile::Preset { preset: Preset::A, n } => make_ensemble_a(*n),
            EnsembleFile::Preset { preset: Preset::B, n } => make_ensemble_b(*n),
            EnsembleFile::Explicit { name, components } => {
                let comps = components
                    .iter()
                    .map(|c| {
                        c.axis.validate()?;
                        Ok(Component {
                            state: eigenstate(&c.axis, c.sign),
                            count: c.count,
                        })
                    })
                    .collect::<Result<Vec<_>, SpinError>>()?;
                EnsembleSpec::new(name.clone(), comps)
            }
        }
    }
}
