//! Crate-wide error type.
//!
//! Every operation that can fail returns [`Result`]. Variants are grouped by
//! failure class so the CLI can map them onto distinct exit codes (input,
//! parameter, numerical, network, integrity).

use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// Malformed raster header line (names the offending line).
    #[error("header parse error at line {line_no}: {line:?}")]
    HeaderParse { line_no: usize, line: String },

    /// Non-numeric token in a value stream, with its position.
    #[error("lexical error at line {line_no}, token {token_no}: {token:?} is not a number")]
    Lexical {
        line_no: usize,
        token_no: usize,
        token: String,
    },

    /// Value-count mismatch or other structural defect.
    #[error("structural error: {detail}")]
    Structure { detail: String },

    /// A raster value violates the data model (e.g. negative population).
    #[error("invalid value {value} at line {line_no}")]
    InvalidValue { line_no: usize, value: f64 },

    /// GeoJSON feature with a geometry kind outside the supported subset.
    #[error("unsupported geometry {kind:?} in feature {index}")]
    UnsupportedFeature { index: usize, kind: String },

    #[error("geometry error in feature {index}: {detail}")]
    Geometry { index: usize, detail: String },

    #[error("out of bounds: {what}")]
    Bounds { what: String },

    #[error("empty domain: {what}")]
    EmptyDomain { what: String },

    #[error("degenerate classes: {detail}")]
    DegenerateClasses { detail: String },

    #[error("domain error: {detail}")]
    Domain { detail: String },

    #[error("invalid parameters: {detail}")]
    InvalidParams { detail: String },

    #[error("wrong layer kind: expected {expected}, got {got}")]
    WrongKind {
        expected: &'static str,
        got: &'static str,
    },

    /// Numerical failure in an iterative solver, with the failing step.
    #[error("numerical failure at step {step}: {detail}")]
    Numerical { step: usize, detail: String },

    /// Zone-id join failure between two datasets.
    #[error("join error, missing ids: {missing:?}")]
    JoinMismatch { missing: Vec<String> },

    #[error("share {requested} unreachable: only {available} of the total is assigned")]
    UnreachableShare { requested: f64, available: f64 },

    #[error("missing required input: {name}")]
    MissingInput { name: String },

    /// Incompatible projections composed into one scene.
    #[error("projection mismatch: {detail}")]
    Composition { detail: String },

    #[error("network error: {detail}")]
    Network { detail: String },

    #[error("integrity error on {path}: expected sha256 {expected}, got {actual}")]
    Integrity {
        path: PathBuf,
        expected: String,
        actual: String,
    },

    #[error("config error: {detail}")]
    Config { detail: String },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn structure(detail: impl Into<String>) -> Self {
        Error::Structure {
            detail: detail.into(),
        }
    }

    pub fn config(detail: impl Into<String>) -> Self {
        Error::Config {
            detail: detail.into(),
        }
    }

    pub fn invalid_params(detail: impl Into<String>) -> Self {
        Error::InvalidParams {
            detail: detail.into(),
        }
    }
}
