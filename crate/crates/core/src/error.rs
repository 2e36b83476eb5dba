use num_complex::Complex64;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("invalid transition matrix: {0}")]
    InvalidChain(String),

    #[error("chain is reducible: states {unreachable:?} cannot be reached from state {from}")]
    Reducible { from: usize, unreachable: Vec<usize> },

    #[error("invalid transform: {0}")]
    InvalidLst(String),

    #[error("evaluation at a pole of the transform (denominator root {root})")]
    Pole { root: Complex64 },

    #[error("point {point} lies outside the analyticity region Re(s) > {bound}")]
    OutsideRegion { point: Complex64, bound: f64 },

    #[error("matrix is singular to working precision (condition estimate {condition:.3e})")]
    Singular { condition: f64 },

    #[error("null space has dimension {dimension} (singular values {singular_values:?}); expected exactly one")]
    RankDeficiency {
        dimension: usize,
        singular_values: Vec<f64>,
    },

    #[error("|f| = {value:.3e} at {point} on the contour; perturb the contour")]
    NearZeroOnContour { point: Complex64, value: f64 },

    #[error("zero count mismatch: found {found}, expected {expected}")]
    ZeroCountMismatch { found: usize, expected: usize },

    #[error("winding number is negative ({winding}); the function has poles inside the contour")]
    PolesInside { winding: i64 },

    #[error("repeated or clustered zeros near {near} (cell winding {winding} at minimum cell size)")]
    RepeatedZero { near: Complex64, winding: i64 },

    #[error("Newton refinement failed near {near}: {reason}")]
    Refinement { near: Complex64, reason: String },

    #[error("series did not converge within {terms} terms (last term norm {last_norm:.3e})")]
    SeriesDiverged { terms: usize, last_norm: f64 },

    #[error("series evaluation point {point} hits a zero of det(I - p1 F(s)); use the null-vector path")]
    SeriesSingular { point: Complex64 },

    #[error("residual check failed: {what} = {value:.3e} exceeds {tolerance:.1e}")]
    Residual {
        what: String,
        value: f64,
        tolerance: f64,
    },

    #[error("unstable: {0}")]
    Unstable(String),

    #[error("invalid model: {0}")]
    InvalidSpec(String),

    #[error("no exponential decay rate within the analyticity region (-{zeta}, 0)")]
    NoDecayRate { zeta: f64 },

    #[error("non-simple pole at s = {point}: |d/ds det G| = {derivative:.3e}")]
    NonSimplePole { point: Complex64, derivative: f64 },

    #[error("moment of order {order} not available for state {state}")]
    MissingMoment { order: usize, state: usize },

    #[error("no sampler for this distribution: {0}")]
    NoSampler(String),

    #[error("invalid simulation config: {0}")]
    InvalidSimConfig(String),

    #[error("insufficient tail mass: {0} samples in the fitting range (need 100)")]
    InsufficientTail(usize),

    #[error("configuration error:\n{}", format_issues(.0))]
    Config(Vec<ConfigIssue>),

    #[error("i/o error: {0}")]
    Io(String),
}

/// One schema violation in an instance config, addressed by its key path.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigIssue {
    pub path: String,
    pub message: String,
}

impl ConfigIssue {
    pub fn new(path: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            path: path.into(),
            message: message.into(),
        }
    }
}

impl std::fmt::Display for ConfigIssue {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

fn format_issues(issues: &[ConfigIssue]) -> String {
    issues
        .iter()
        .map(|i| format!("  - {i}"))
        .collect::<Vec<_>>()
        .join("\n")
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
