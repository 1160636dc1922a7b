use thiserror::Error;

use crate::fermion::Grading;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("mode {0} does not occur in the mode order")]
    ModeNotInOrder(usize),

    #[error("mode {0} occurs more than once")]
    DuplicateMode(usize),

    #[error("target order is not a permutation of the source order")]
    NotAPermutation,

    #[error("swap position {position} out of range for an order of length {len}")]
    PositionOutOfRange { position: usize, len: usize },

    #[error("expected a {expected:?} operator, found {found:?}")]
    GradingViolation { expected: Grading, found: Grading },

    #[error("operator has mixed parity grading")]
    MixedGrading,

    #[error("matrix is not unitary (max deviation {deviation:e})")]
    NotUnitary { deviation: f64 },

    #[error("operators act on different mode sets")]
    ModeSetMismatch,

    #[error("matrix dimension {found} does not match 2^{modes}")]
    DimensionMismatch { modes: usize, found: usize },

    #[error("observable has empty support")]
    EmptySupport,

    #[error("observable is not parity even")]
    OddObservable,

    #[error("operator is not hermitian (max deviation {deviation:e})")]
    NonHermitian { deviation: f64 },

    #[error("contraction width {width} exceeds the cap of {cap} modes")]
    WidthCapExceeded { width: usize, cap: usize },

    #[error("{modes} modes exceed the dense oracle cap of {cap}")]
    OracleCapExceeded { modes: usize, cap: usize },

    #[error("invalid circuit: {0}")]
    InvalidCircuit(String),

    #[error("invalid lattice: {0}")]
    InvalidLattice(String),

    #[error("free-fermion energy requires u = 0, got u = {0}")]
    InteractingModel(f64),

    #[error("energy evaluation produced a non-finite value")]
    NonFiniteEnergy,

    #[error("invalid options: {0}")]
    InvalidOptions(String),
}

impl Error {
    /// Errors raised because a computation would exceed a memory/size cap.
    pub fn is_resource_limit(&self) -> bool {
        matches!(
            self,
            Error::WidthCapExceeded { .. } | Error::OracleCapExceeded { .. }
        )
    }
}
