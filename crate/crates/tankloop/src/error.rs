//! Error types shared across the crate.

use thiserror::Error;

/// Anything a simulation, analysis, or tuning entry point can fail with.
#[derive(Debug, Error)]
pub enum Error {
    /// A parameter set violates one of its invariants. Invalid
    /// configurations are rejected, never silently clamped.
    #[error("invalid configuration: {0}")]
    Config(String),

    /// A state or derivative went non-finite during integration.
    #[error("numeric failure at sample {sample}: {detail}")]
    Numeric { sample: usize, detail: String },

    /// A bad argument to an analysis routine (empty window, zero-height
    /// step, and the like).
    #[error("invalid argument: {0}")]
    Argument(String),

    /// The relay experiment did not produce a sustained oscillation.
    #[error("relay identification failed: {0}")]
    Identification(String),

    /// The autotuner could not run (bad budget, empty vary mask, ...).
    #[error("tuning failed: {0}")]
    Tuning(String),

    /// Scenario file could not be parsed.
    #[error(transparent)]
    Scenario(#[from] ScenarioError),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Parse failure for the scenario file format. Every variant names the
/// line or key it is about so the message is actionable.
#[derive(Debug, Error, PartialEq, Eq)]
pub enum ScenarioError {
    #[error("line {line}: expected `key = value` or `[section]`, got `{text}`")]
    Syntax { line: usize, text: String },

    #[error("line {line}: key `{key}` appears outside any [section]")]
    KeyOutsideSection { line: usize, key: String },

    #[error("line {line}: unknown section `[{section}]`")]
    UnknownSection { line: usize, section: String },

    #[error("line {line}: unknown key `{key}` in [{section}]")]
    UnknownKey { line: usize, section: String, key: String },

    #[error("line {line}: duplicate key `{key}` in [{section}]")]
    DuplicateKey { line: usize, section: String, key: String },

    #[error("line {line}: key `{key}`: {detail}")]
    BadValue { line: usize, key: String, detail: String },

    #[error("missing required key `{key}` in [{section}]")]
    MissingKey { section: String, key: String },

    #[error("missing required section [{section}]")]
    MissingSection { section: String },

    #[error("{0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, Error>;
