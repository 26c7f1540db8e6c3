use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid parameter {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error("chain diverged at sweep {sweep}: {detail}")]
    Divergent { sweep: usize, detail: String },

    #[error("input row {row}: {reason}")]
    Input { row: usize, reason: String },

    #[error("missing dependency: {0}")]
    Dependency(String),

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    /// True for errors caused by user input rather than internal failures.
    pub fn is_user_error(&self) -> bool {
        matches!(
            self,
            Error::Domain(_)
                | Error::InvalidParameter { .. }
                | Error::Input { .. }
                | Error::Dependency(_)
                | Error::Config(_)
                | Error::Io(_)
                | Error::Csv(_)
        )
    }
}
