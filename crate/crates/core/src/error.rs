use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpinError {
    #[error("spinor components must be finite")]
    NonFinite,
    #[error("cannot normalize the zero vector")]
    ZeroVector,
    #[error("invalid axis: {0}")]
    InvalidAxis(String),
    #[error("hbar must be positive and finite, got {0}")]
    InvalidHbar(f64),
    #[error("invalid spin outcome {0}: expected +1 or -1")]
    InvalidOutcome(i64),
    #[error("ensemble size {0} cannot be split into two equal halves")]
    OddEnsemble(u64),
    #[error("ensemble must contain at least one particle")]
    EmptyEnsemble,
    #[error("basis is not orthonormal (deviation {0:e})")]
    NonOrthonormalBasis(f64),
    #[error("normalization tags differ: {0} vs {1}")]
    NormalizationMismatch(String, String),
    #[error("at least 2 trials are required, got {0}")]
    TooFewTrials(u64),
    #[error("at least {min} samples are required, got {got}")]
    TooFewSamples { min: usize, got: usize },
    #[error("ensemble of {0} particles exceeds the exact-distribution guard")]
    DistributionTooLarge(u64),
    #[error("unknown preset {0:?}: expected \"A\" or \"B\"")]
    UnknownPreset(String),
}
