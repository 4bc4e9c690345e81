use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("matrix is not Hermitian (max asymmetry {asymmetry:.3e})")]
    NotHermitian { asymmetry: f64 },

    #[error("matrix is indefinite (eigenvalue {eigenvalue:.3e}, largest {largest:.3e})")]
    Indefinite { eigenvalue: f64, largest: f64 },

    #[error("{0} did not converge")]
    NoConvergence(&'static str),

    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error("zero-forcing rejected {rejected} of {total} draws as ill-conditioned")]
    ZfRejection { rejected: usize, total: usize },

    #[error("too few points for slope fit: {0} (need at least 3)")]
    TooFewPoints(usize),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    /// Short machine-readable tag used by the CLI.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Config(_) => "config",
            Error::Dimension(_) => "dimension",
            Error::NotHermitian { .. } => "not_hermitian",
            Error::Indefinite { .. } => "indefinite",
            Error::NoConvergence(_) => "no_convergence",
            Error::Infeasible(_) => "infeasible",
            Error::ZfRejection { .. } => "zf_rejection",
            Error::TooFewPoints(_) => "too_few_points",
            Error::Io(_) => "io",
            Error::Parse(_) => "parse",
        }
    }
}
