use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("invalid spin space: {0}")]
    SpinSpace(String),

    #[error("invalid measure: {0}")]
    InvalidMeasure(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("infeasible constraint: c = {c} outside [{lo}, {hi}]")]
    Infeasible { c: f64, lo: f64, hi: f64 },

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("no fixed point converged from {starts} starts (final residuals {residuals:?})")]
    NonConvergence { starts: usize, residuals: Vec<f64> },

    #[error("bracket not monotone on [{lo}, {hi}]; sampled curve {samples:?}")]
    NotMonotone {
        lo: f64,
        hi: f64,
        samples: Vec<(f64, f64)>,
    },

    #[error("branch tracking failed: {0}")]
    Branch(String),

    #[error("state space too large: {states} > {limit}")]
    TooLarge { states: f64, limit: f64 },

    #[error("parity error: n * kappa = {n} * {kappa} is odd")]
    Parity { n: usize, kappa: usize },

    #[error("rejection budget of {0} attempts exhausted")]
    Budget(usize),

    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    /// Stable machine-readable tag for structured error reports.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Dimension { .. } => "dimension",
            Error::SpinSpace(_) => "spin_space",
            Error::InvalidMeasure(_) => "invalid_measure",
            Error::Precondition(_) => "precondition",
            Error::Domain(_) => "domain",
            Error::Infeasible { .. } => "infeasible",
            Error::Degenerate(_) => "degenerate_input",
            Error::NonConvergence { .. } => "non_convergence",
            Error::NotMonotone { .. } => "not_monotone",
            Error::Branch(_) => "branch_tracking",
            Error::TooLarge { .. } => "too_large",
            Error::Parity { .. } => "parity",
            Error::Budget(_) => "budget",
            Error::Parse(_) => "parse",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
