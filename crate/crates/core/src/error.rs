use std::fmt;

use serde::Serialize;
use thiserror::Error;

/// Why a witness coefficient (or a ratio feeding one) has no value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case", tag = "reason")]
pub enum UndefinedReason {
    /// The separability bound in the denominator vanishes, e.g. a pure product
    /// state probed along its own Bloch vectors.
    VanishingDenominator,
    /// A local mean spin vanishes (maximally mixed qubit). `site` is the first
    /// offending qubit when the coefficient needs every site.
    VanishingMeanSpin { site: Option<usize> },
    /// The commutator expectation `<[A, B]>` vanishes.
    VanishingCommutator,
    /// The variance in a denominator vanishes.
    VanishingVariance,
    /// A vector field with zero length.
    ZeroField,
}

impl UndefinedReason {
    /// The value the corresponding inverse squeezing coefficient tends to, if
    /// any. A vanishing mean spin sends `xi^-2` to zero.
    pub fn inverse_squeezing_limit(self) -> Option<f64> {
        match self {
            UndefinedReason::VanishingMeanSpin { .. } | UndefinedReason::VanishingCommutator => {
                Some(0.0)
            }
            _ => None,
        }
    }
}

impl fmt::Display for UndefinedReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            UndefinedReason::VanishingDenominator => write!(f, "vanishing local-variance denominator"),
            UndefinedReason::VanishingMeanSpin { site: Some(i) } => {
                write!(f, "vanishing mean spin at qubit {i}")
            }
            UndefinedReason::VanishingMeanSpin { site: None } => write!(f, "vanishing mean spin"),
            UndefinedReason::VanishingCommutator => write!(f, "vanishing commutator expectation"),
            UndefinedReason::VanishingVariance => write!(f, "vanishing variance"),
            UndefinedReason::ZeroField => write!(f, "zero vector field"),
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("{requested} qubits exceed the configured cap of {cap}")]
    QubitCap { requested: usize, cap: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("dimension {0} is not a power of two")]
    NotQubitDimension(usize),

    #[error("matrix is not Hermitian (max deviation {0:e})")]
    NotHermitian(f64),

    #[error("trace is {0}, expected 1")]
    InvalidTrace(f64),

    #[error("matrix is not positive semidefinite (min eigenvalue {0:e})")]
    NotPositive(f64),

    #[error("state vector is not normalized (squared norm {0})")]
    NotNormalized(f64),

    #[error("invalid qubit index set: {0}")]
    InvalidIndexSet(String),

    #[error("eigensolver failed: {0}")]
    Eigensolver(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("projectors do not sum to the identity (deviation {0:e})")]
    IncompleteMeasurement(f64),

    #[error("undefined: {0}")]
    Undefined(UndefinedReason),

    #[error("integration failed at t = {time}: {reason}")]
    Integration { time: f64, reason: String },
}

pub type Result<T> = std::result::Result<T, Error>;
