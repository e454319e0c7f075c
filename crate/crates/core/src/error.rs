use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("duplicate document id `{0}`")]
    DuplicateDocId(String),

    #[error("document id must be non-empty")]
    EmptyDocId,

    #[error("cannot build an index from an empty document stream")]
    EmptyCorpus,

    #[error("unknown term `{0}`")]
    UnknownTerm(String),

    #[error("length-normalisation parameter b = {0} is outside [0, 1]")]
    InvalidB(f64),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("document length is zero but term frequency is {tf}")]
    ZeroLengthWithTf { tf: u32 },

    #[error("mixture densities both vanish for term `{term}` at tf = {tf}")]
    DegeneratePosterior { term: String, tf: f64 },

    #[error(
        "non-finite log-likelihood for term `{term}` at iteration {iteration} \
         (mu_elite = {mu_elite}, mu_nonelite = {mu_nonelite}, p_elite = {p_elite})"
    )]
    NonFiniteLikelihood {
        term: String,
        iteration: usize,
        mu_elite: f64,
        mu_nonelite: f64,
        p_elite: f64,
    },

    #[error("model does not match index: {0}")]
    ModelMismatch(String),

    #[error("{path}:{line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },

    #[error("nothing to evaluate: {0}")]
    NothingToEvaluate(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(path: impl ToString, line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.to_string(),
            line,
            message: message.into(),
        }
    }
}
