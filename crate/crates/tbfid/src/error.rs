use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An input is outside its allowed range.
    #[error("invalid {field}: {reason}")]
    Validation { field: String, reason: String },

    /// A numerical procedure did not reach the requested accuracy.
    #[error("{what}: accuracy estimate {estimate:.3e} exceeds {limit:.1e}")]
    Numerical {
        what: String,
        estimate: f64,
        limit: f64,
    },

    /// The postselection probability is zero, so a conditional value is undefined.
    #[error("undefined postselection: {0}")]
    Postselection(String),

    /// Oracle state grew past its amplitude cap.
    #[error("state has {terms} amplitudes, cap is {cap}")]
    Capacity { terms: usize, cap: usize },

    /// A state could not be written in the logical basis.
    #[error("logical mapping failed: {0}")]
    Mapping(String),
}

impl Error {
    pub fn validation(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Validation {
            field: field.into(),
            reason: reason.into(),
        }
    }

    /// Process exit code used by the command-line tool.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Validation { .. } | Error::Mapping(_) => 1,
            Error::Numerical { .. } | Error::Capacity { .. } => 2,
            Error::Postselection(_) => 3,
        }
    }
}
