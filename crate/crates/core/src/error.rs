use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("intersection matrix is not square: {rows} rows but row {row} has {len} entries")]
    NonSquareMatrix { rows: usize, row: usize, len: usize },
    #[error("intersection matrix must be {expected} for n = {n}; entries ({i},{j}) disagree")]
    SymmetryViolation { n: u32, expected: &'static str, i: usize, j: usize },
    #[error("intersection matrix is not unimodular (determinant {0})")]
    NotUnimodular(String),
    #[error("n = {0} is excluded (n must be at least 3 and not 4 or 8); pass --force to override")]
    ExcludedDimension(u32),
    #[error("no nonsingular skew form has odd rank (n = {n}, m = {m})")]
    OddRankSkew { n: u32, m: usize },
    #[error("{0} is not a prime below 2^31")]
    InvalidPrime(i64),
    #[error("unknown preset '{0}'")]
    UnknownPreset(String),
    #[error("preset '{preset}' is not available for n = {n}")]
    ParityMismatch { preset: String, n: u32 },
    #[error("basis change is not unimodular (determinant {0})")]
    NotUnimodularChange(String),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("word length {length} needs {ambient} ambient words, above the cap of {cap}")]
    SizeCapExceeded { length: usize, ambient: u128, cap: u64 },
    #[error("internal inconsistency: the integral quotient at word length {length} has torsion [{}]", factors.join(", "))]
    TorsionInU { length: usize, factors: Vec<String> },
    #[error("internal inconsistency: d∘d' is nonzero at word length {length}, column {column}")]
    CompositionNotZero { length: usize, column: usize },
    #[error("the BV formulas only apply to odd n (got n = {0})")]
    ParityUnsupported(u32),
    #[error("not applicable: {0}")]
    NotApplicable(String),
    #[error("element is not divisible by the fundamental class image: {0}")]
    NotDivisible(String),
    #[error("verification failed: {0}")]
    VerificationFailed(String),
    #[error("internal inconsistency: BV image of a W class is not divisible by beta: {0}")]
    TheoremViolation(String),
}

impl Error {
    /// Stable identifier used in machine-readable error output.
    pub fn code(&self) -> &'static str {
        match self {
            Error::InvalidInput(_) => "InvalidInput",
            Error::NonSquareMatrix { .. } => "NonSquareMatrix",
            Error::SymmetryViolation { .. } => "SymmetryViolation",
            Error::NotUnimodular(_) => "NotUnimodular",
            Error::ExcludedDimension(_) => "ExcludedDimension",
            Error::OddRankSkew { .. } => "OddRankSkew",
            Error::InvalidPrime(_) => "InvalidPrime",
            Error::UnknownPreset(_) => "UnknownPreset",
            Error::ParityMismatch { .. } => "ParityMismatch",
            Error::NotUnimodularChange(_) => "NotUnimodularChange",
            Error::DimensionMismatch { .. } => "DimensionMismatch",
            Error::SizeCapExceeded { .. } => "SizeCapExceeded",
            Error::TorsionInU { .. } => "TorsionInU",
            Error::CompositionNotZero { .. } => "CompositionNotZero",
            Error::ParityUnsupported(_) => "ParityUnsupported",
            Error::NotApplicable(_) => "NotApplicable",
            Error::NotDivisible(_) => "NotDivisible",
            Error::TheoremViolation(_) => "TheoremViolation",
            Error::VerificationFailed(_) => "VerificationFailed",
        }
    }

    /// Process exit status: 2 validation, 3 resource cap, 4 internal inconsistency.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::SizeCapExceeded { .. } => 3,
            Error::TorsionInU { .. }
            | Error::CompositionNotZero { .. }
            | Error::NotDivisible(_)
            | Error::TheoremViolation(_)
            | Error::VerificationFailed(_)
            | Error::DimensionMismatch { .. } => 4,
            _ => 2,
        }
    }
}
