//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Invalid model, grid or command configuration.
    #[error("configuration error: {0}")]
    Config(String),

    /// The iterative eigensolver exhausted its matvec budget.
    #[error("solver error: {0}")]
    Solver(String),

    /// A degenerate level extends past the allowed completion window (k+8).
    #[error("multiplet overflow: {0}")]
    MultipletOverflow(String),

    /// A density matrix violated its tolerances (trace, Hermiticity, PSD).
    #[error("density matrix error: {0}")]
    Data(String),

    /// A vector is not a total-spin eigenstate within tolerance.
    #[error("total-spin classification failed: S(S+1) residue {residue:.3e}")]
    SpinClassification { residue: f64 },

    /// The solved window does not contain the levels a gap definition needs.
    #[error("insufficient levels: {0}")]
    InsufficientLevels(String),

    /// Nonlinear or linear least-squares failure.
    #[error("fit error: {0}")]
    Fit(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    /// Malformed CSV or flag syntax.
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Process exit code for the CLI: 2 config, 3 solver, 4 fit.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Io(_) | Error::Parse(_) => 2,
            Error::Solver(_)
            | Error::MultipletOverflow(_)
            | Error::Data(_)
            | Error::SpinClassification { .. }
            | Error::InsufficientLevels(_) => 3,
            Error::Fit(_) => 4,
        }
    }
}
