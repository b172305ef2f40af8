use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("every weight is zero")]
    AllZero,
    #[error("negative mass {value} at atom {index}")]
    NegativeMass { index: usize, value: f64 },
    #[error("non-finite weight at atom {index}")]
    NonFinite { index: usize },
    #[error("masses sum to {sum}, expected 1")]
    NotNormalized { sum: f64 },
    #[error("duplicate label {0:?}")]
    DuplicateLabel(String),
    #[error("{labels} labels for {weights} weights")]
    LengthMismatch { labels: usize, weights: usize },
    #[error("alphabet mismatch: {left} vs {right} atoms")]
    AlphabetMismatch { left: usize, right: usize },
    #[error("{what} exceeds the configured width")]
    Overflow { what: String },
    #[error("input of size {size} exceeds the limit {limit}")]
    TooLarge { size: u128, limit: u128 },
    #[error("bad parameter: {0}")]
    BadParam(String),
    #[error("generator {0} is linear; its divergence is identically zero")]
    LinearGenerator(String),
    #[error("generator {0} is not convex on the sample grid")]
    NotConvex(String),
    #[error("c_f = lim f(u)/u diverges for {0}")]
    C2PrimeViolated(String),
    #[error("level {level} is outside [0, {limit})")]
    OutOfRange { level: f64, limit: f64 },
    #[error("target {level} is infeasible: it must lie in [0, {limit})")]
    TargetInfeasible { level: f64, limit: f64 },
    #[error("construction set is empty")]
    DegenerateSupport,
    #[error("compliant size bound {bound} is below 1")]
    MTooSmall { bound: f64 },
    #[error("requested size {m} exceeds the compliant bound {bound}")]
    MTooLarge { m: u64, bound: f64 },
    #[error("need at least {need} points, got {got}")]
    TooFewPoints { need: usize, got: usize },
    #[error("construction invariant violated: {0}")]
    Invariant(String),
    #[error("cannot parse source: {0}")]
    Parse(String),
}

impl Error {
    /// Errors that mean the requested level or size cannot be met, as opposed
    /// to malformed input.
    pub fn is_infeasible(&self) -> bool {
        matches!(
            self,
            Error::TargetInfeasible { .. }
                | Error::OutOfRange { .. }
                | Error::MTooSmall { .. }
                | Error::MTooLarge { .. }
                | Error::DegenerateSupport
        )
    }
}
