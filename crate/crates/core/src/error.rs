use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{0} is not a prime >= 5")]
    NotPrime(u64),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("modulus mismatch: {0} vs {1}")]
    ModulusMismatch(u64, u64),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("no residue in [1, p-1] satisfies the Bohr condition")]
    NotFound,

    #[error("rounding rejected after {attempts} attempts (best deviation {best_deviation:.4} vs bound {bound:.4})")]
    RetryExhausted {
        attempts: u32,
        best_deviation: f64,
        bound: f64,
    },

    #[error("no affine pair accepted after {draws} draws")]
    DrawsExhausted { draws: u64 },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("internal consistency failure: {0}")]
    Consistency(String),

    #[error("search space too large: C({p}, {s}) = {combinations} exceeds {limit}; use annealing")]
    SearchTooLarge {
        p: u64,
        s: usize,
        combinations: u128,
        limit: u128,
    },

    #[error("stage `{stage}` failed: {source}")]
    Stage {
        stage: String,
        #[source]
        source: Box<Error>,
    },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn at_stage(stage: &str) -> impl FnOnce(Error) -> Error + '_ {
        move |e| Error::Stage {
            stage: stage.to_string(),
            source: Box::new(e),
        }
    }

    /// True for errors caused by bad user input rather than a failing stage.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::NotPrime(_)
                | Error::InvalidArgument(_)
                | Error::ModulusMismatch(..)
                | Error::Parse(_)
                | Error::Json(_)
                | Error::SearchTooLarge { .. }
        )
    }
}
