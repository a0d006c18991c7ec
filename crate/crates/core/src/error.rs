use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("truncation guard violated: {0}")]
    Truncation(String),

    /// A closed-form branch is not valid (complex roots, negative rates, ...).
    #[error("domain error: {0}")]
    Domain(String),

    #[error("eigenvector classification failed in block N={block}: max overlap {overlap:.3}")]
    Classification { block: usize, overlap: f64 },

    #[error("index {index} outside the usable range (max {max})")]
    Range { index: usize, max: usize },

    #[error("unphysical parameters: {0}")]
    Physicality(String),

    #[error("step size underflow at t = {t} us (h = {h:e})")]
    Stiffness { t: f64, h: f64 },

    #[error("steady state is not unique: {0}")]
    Degeneracy(String),

    #[error("solver failed: {0}")]
    Solver(String),

    #[error("invalid data: {0}")]
    Data(String),

    #[error("fit failed: {0}")]
    Fit(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Attach a human-readable context prefix, keeping the variant.
    pub fn context(self, ctx: impl std::fmt::Display) -> Self {
        match self {
            Error::Solver(m) => Error::Solver(format!("{ctx}: {m}")),
            Error::Degeneracy(m) => Error::Degeneracy(format!("{ctx}: {m}")),
            Error::Truncation(m) => Error::Truncation(format!("{ctx}: {m}")),
            Error::Domain(m) => Error::Domain(format!("{ctx}: {m}")),
            Error::Stiffness { t, h } => Error::Solver(format!("{ctx}: step size underflow at t = {t} us (h = {h:e})")),
            other => other,
        }
    }
}
