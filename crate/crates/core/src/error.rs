//! Crate-wide error type.

use thiserror::Error;

/// Errors surfaced by model contracts, filters, estimators and experiment plumbing.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument violated a documented precondition.
    #[error("invalid {what}: {why}")]
    Invalid { what: &'static str, why: String },

    /// Two inputs that must agree in size do not.
    #[error("dimension mismatch in {what}: expected {expected}, got {got}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    /// Every particle weight collapsed to zero at one observation time.
    #[error("degenerate filter at time index {time_index}: all particle weights are zero")]
    DegenerateFilter { time_index: usize },

    /// The rejection sampler ran out of attempts.
    #[error("no acceptance after {attempts} attempts (best distance seen: {best_distance})")]
    AcceptanceFailure { attempts: usize, best_distance: f64 },

    /// A closed-form M-step landed outside the parameter domain.
    ///
    /// `partial` carries the components that could still be updated;
    /// `invalid` lists the indices the caller should retain from the
    /// previous iterate.
    #[error("m-step out of domain ({why}); components {invalid:?} not updated")]
    MStepOutOfDomain {
        partial: crate::params::ParameterVector,
        invalid: Vec<usize>,
        why: String,
    },

    /// A statistic that must be non-negative was not: a contract violation.
    #[error("negative statistic {name} = {value}")]
    NegativeStatistic { name: &'static str, value: f64 },

    /// The regression design matrix is numerically singular.
    #[error("singular regression: condition estimate {cond:.3e} exceeds 1e12")]
    SingularRegression { cond: f64 },

    /// The pseudo-marginal chain could not be initialized.
    #[error("pseudo-marginal initialization failed: log-likelihood estimate at the start value is {value}")]
    PmmInitialization { value: f64 },

    #[error("configuration error in field `{field}`: {why}")]
    Config { field: String, why: String },

    /// All replicates of an estimation run failed.
    #[error("estimation failed: all {total} replicates failed (first failure: {first})")]
    AllReplicatesFailed { total: usize, first: String },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(what: &'static str, why: impl Into<String>) -> Self {
        Error::Invalid {
            what,
            why: why.into(),
        }
    }
}
