use thiserror::Error;

/// Errors raised by the numerical routines and the file/CLI surfaces.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("state is not normalized (sum of squares = {0})")]
    NotNormalized(f64),

    #[error("{what} requires integer j, got j = {twice_j}/2")]
    HalfIntegerSpin { twice_j: u32, what: &'static str },

    #[error(
        "eigendecomposition did not converge (dim {dim}, max |entry| {max_abs:e}, \
         hermiticity residual {hermiticity:e}, diagonal range [{diag_min:e}, {diag_max:e}])"
    )]
    EigenFailure {
        dim: usize,
        max_abs: f64,
        hermiticity: f64,
        diag_min: f64,
        diag_max: f64,
    },

    #[error("density matrix is singular: numerical rank {rank} of {dim} (smallest eigenvalue {min_eigenvalue:e})")]
    Singular {
        rank: usize,
        dim: usize,
        min_eigenvalue: f64,
    },

    #[error("probe amplitude vanishes at m = {m}; the potential -ln phi^2 is undefined there")]
    ZeroAmplitude { m: f64 },

    #[error("diffusion Fisher information diverges: {0}")]
    Divergent(String),

    #[error("grid of {got} points undersamples the phase distribution; need at least {min}")]
    Undersampled { got: usize, min: usize },

    #[error("no sign change of the per-particle QFI difference on ({lo}, {hi})")]
    NoSignChange { lo: f64, hi: f64 },

    #[error("unknown state label `{0}`")]
    UnknownState(String),

    #[error("malformed input: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for errors that originate in the numerics rather than in user input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::EigenFailure { .. }
                | Error::Singular { .. }
                | Error::Divergent(_)
                | Error::NoSignChange { .. }
                | Error::ZeroAmplitude { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
