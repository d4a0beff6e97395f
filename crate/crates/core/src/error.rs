use thiserror::Error;

/// Errors raised by model construction, evaluation and the root solvers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid probability {prob} for atom at payoff {payoff}")]
    InvalidAtom { payoff: f64, prob: f64 },

    #[error("probabilities sum to {sum}, expected 1")]
    ProbabilitySum { sum: f64 },

    #[error("lottery has no atoms")]
    EmptyLottery,

    #[error("invalid parameter `{name}` = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("{what}: {value} is outside the domain {domain}")]
    Domain {
        what: &'static str,
        value: f64,
        domain: String,
    },

    #[error("derivative requested at kink p = {at}; use the one-sided derivatives")]
    Kink { at: f64 },

    #[error("no sign change of the indifference function on [{lo}, {hi}]")]
    NoBracket {
        lo: f64,
        hi: f64,
        /// Function values at the scan points, for auditing.
        scanned: Vec<(f64, f64)>,
    },

    #[error("solver at eps1 = {eps1} failed: {source}")]
    SolverAt {
        eps1: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("cannot parse model `{spec}`: {reason}")]
    Parse { spec: String, reason: String },
}

impl Error {
    /// True for failures of a root search rather than of the inputs.
    pub fn is_solver_failure(&self) -> bool {
        match self {
            Error::NoBracket { .. } => true,
            Error::SolverAt { source, .. } => source.is_solver_failure(),
            _ => false,
        }
    }

    pub(crate) fn param(name: &'static str, value: f64, reason: &'static str) -> Self {
        Error::InvalidParameter {
            name,
            value,
            reason,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
