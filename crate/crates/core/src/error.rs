use std::path::PathBuf;

use thiserror::Error;

use crate::game::RuleViolation;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("failed to read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Embedding(#[from] EmbeddingError),

    #[error(transparent)]
    Rule(#[from] RuleViolation),

    #[error(transparent)]
    Game(#[from] GameError),

    #[error(transparent)]
    Spec(#[from] SpecError),

    #[error("invalid config: {0}")]
    Config(String),

    #[error("invalid prior: {0}")]
    Prior(String),

    #[error("replay diverged at line {line}: expected `{expected}`, got `{actual}`")]
    Divergence {
        line: usize,
        expected: String,
        actual: String,
    },

    #[error("malformed transcript line {line}: {message}")]
    Transcript { line: usize, message: String },

    #[error("malformed cache file: {0}")]
    Cache(String),
}

#[derive(Debug, Error, PartialEq)]
pub enum EmbeddingError {
    #[error("embedding file is empty")]
    Empty,
    #[error("line {line}: expected {expected} components, found {found}")]
    DimensionMismatch {
        line: usize,
        expected: usize,
        found: usize,
    },
    #[error("line {line}: non-numeric component `{token}`")]
    NonNumeric { line: usize, token: String },
    #[error("line {line}: non-finite component")]
    NonFinite { line: usize },
    #[error("line {line}: zero vector for `{word}` cannot be normalized")]
    ZeroVector { line: usize, word: String },
    #[error("unknown word `{0}`")]
    UnknownWord(String),
    #[error("vector has {found} components, table dimension is {expected}")]
    WrongDimension { expected: usize, found: usize },
}

#[derive(Debug, Error, PartialEq)]
pub enum GameError {
    #[error("word pool has {available} distinct words, a board needs {needed}")]
    PoolTooSmall { available: usize, needed: usize },
    #[error("board composition sums to {0}, expected 25")]
    BadComposition(usize),
    #[error("game is not over")]
    NotTerminal,
    #[error("game is already over")]
    AlreadyOver,
    #[error("no assignment of the unrevealed cards matches the remaining counts")]
    Inconsistent,
}

#[derive(Debug, Error, PartialEq)]
pub enum SpecError {
    #[error("malformed agent spec `{spec}`: {reason}")]
    Malformed { spec: String, reason: String },
    #[error("agent spec `{spec}` names unknown embedding `{name}`")]
    UnknownEmbedding { spec: String, name: String },
}
