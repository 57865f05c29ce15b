use thiserror::Error;

/// Errors raised by model construction and the escape-rate computations.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("row {row} of the transition matrix sums to {sum}, expected 1")]
    NotRowStochastic { row: usize, sum: f64 },
    #[error("transition entry ({row}, {col}) = {value} is outside [0, 1]")]
    InvalidProbability { row: usize, col: usize, value: f64 },
    #[error("transition matrix must be square and non-empty")]
    NotSquare,
    #[error("support graph of the transition matrix is not strongly connected")]
    NotIrreducible,
    #[error("word {word:?} is not admissible")]
    InadmissibleWord { word: Vec<usize> },
    #[error("word of length {len} is too short: {needed} symbols required")]
    WordTooShort { len: usize, needed: usize },
    #[error("refinement to order {order} needs {size} states, cap is {cap}")]
    RefinementTooLarge { order: usize, size: usize, cap: usize },
    #[error("ceiling is not arithmetic; rationalize it first")]
    NonArithmeticCeiling,
    #[error("ceiling value {value} on word {word:?} is not positive")]
    NonPositiveCeiling { word: Vec<usize>, value: f64 },
    #[error("epsilon {epsilon} must be smaller than inf ceiling = {inf}")]
    EpsilonTooLarge { epsilon: f64, inf: f64 },
    #[error("hole word {word:?} is not reduced")]
    NotReduced { word: Vec<usize> },
    #[error("hole length {hole_len} is shorter than ceiling order {order}")]
    HoleShorterThanCeilingOrder { hole_len: usize, order: usize },
    #[error("no convergence after {iterations} iterations (last {last}, previous {previous})")]
    NoConvergence {
        iterations: usize,
        last: f64,
        previous: f64,
    },
    #[error("matrix dimension {dim} exceeds cap {cap}")]
    DimensionTooLarge { dim: usize, cap: usize },
    #[error("polynomial does not vanish at z = 1 (value {value})")]
    NoZeroAtOne { value: f64 },
    #[error("factorized and direct open zeta polynomials differ by {deviation}")]
    FactorizationMismatch { deviation: f64 },
    #[error("no root of the polynomial in [{lo}, {hi}]")]
    NoSignChange { lo: f64, hi: f64 },
    #[error("rational function has a pole at z = 1")]
    PoleAtOne,
    #[error("word {word:?} does not have prime period {period}")]
    NotPrimePeriod { word: Vec<usize>, period: usize },
    #[error("word {word:?} cannot be repeated periodically")]
    NotCyclicallyAdmissible { word: Vec<usize> },
    #[error("periodic orbit has weight c_o = {c_o}; the holes would not shrink")]
    NonShrinkingFamily { c_o: f64 },
    #[error("linear Taylor coefficient g1'(1) = {value} vanishes")]
    DegenerateLinearTerm { value: f64 },
    #[error("no admissible words in the summation window")]
    WindowEmpty,
    #[error("could not bracket the pressure zero")]
    NoBracket,
    #[error("induced pressure {value} is not negative")]
    PressureNotNegative { value: f64 },
    #[error("all sampled mass escaped before t = {t}")]
    AllMassEscaped { t: usize },
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

impl Error {
    /// Stable machine-readable identifier used in reports.
    pub fn code(&self) -> &'static str {
        match self {
            Error::NotRowStochastic { .. } => "NotRowStochastic",
            Error::InvalidProbability { .. } => "InvalidProbability",
            Error::NotSquare => "NotSquare",
            Error::NotIrreducible => "NotIrreducible",
            Error::InadmissibleWord { .. } => "InadmissibleWord",
            Error::WordTooShort { .. } => "WordTooShort",
            Error::RefinementTooLarge { .. } => "RefinementTooLarge",
            Error::NonArithmeticCeiling => "NonArithmeticCeiling",
            Error::NonPositiveCeiling { .. } => "NonPositiveCeiling",
            Error::EpsilonTooLarge { .. } => "EpsilonTooLarge",
            Error::NotReduced { .. } => "NotReduced",
            Error::HoleShorterThanCeilingOrder { .. } => "HoleShorterThanCeilingOrder",
            Error::NoConvergence { .. } => "NoConvergence",
            Error::DimensionTooLarge { .. } => "DimensionTooLarge",
            Error::NoZeroAtOne { .. } => "NoZeroAtOne",
            Error::FactorizationMismatch { .. } => "FactorizationMismatch",
            Error::NoSignChange { .. } => "NoSignChange",
            Error::PoleAtOne => "PoleAtOne",
            Error::NotPrimePeriod { .. } => "NotPrimePeriod",
            Error::NotCyclicallyAdmissible { .. } => "NotCyclicallyAdmissible",
            Error::NonShrinkingFamily { .. } => "NonShrinkingFamily",
            Error::DegenerateLinearTerm { .. } => "DegenerateLinearTerm",
            Error::WindowEmpty => "WindowEmpty",
            Error::NoBracket => "NoBracket",
            Error::PressureNotNegative { .. } => "PressureNotNegative",
            Error::AllMassEscaped { .. } => "AllMassEscaped",
            Error::InvalidInput(_) => "InvalidInput",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
