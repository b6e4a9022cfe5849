//! Crate-wide error type.

use thiserror::Error;

/// Errors surfaced by the pipeline, backends, tools, and evaluation harness.
#[derive(Debug, Error)]
pub enum Error {
    /// Task question is empty after trimming.
    #[error("task question is empty")]
    EmptyQuestion,

    /// A visual reference does not resolve to a readable resource.
    #[error("visual input does not resolve: {0}")]
    UnresolvableVisual(String),

    /// Persisted trace bytes could not be parsed or carry a bad schema.
    #[error("malformed trace: {0}")]
    MalformedTrace(String),

    /// A core type invariant was violated at construction or validation.
    #[error("invariant violation: {0}")]
    InvariantViolation(String),

    /// Agent output did not match the expected grammar.
    #[error("parse error at byte {position}: {reason}")]
    ParseError { position: usize, reason: String },

    /// An execution unit referenced a step with no record.
    #[error("unresolved input reference to step {step}")]
    UnresolvedInputReference { step: usize },

    /// A generated plan contains tool-invocation markup.
    #[error("execution plan contains tool binding markup in step {step}")]
    PlanContainsToolBinding { step: usize },

    /// Template file failed placeholder validation or could not be read.
    #[error("template error: {0}")]
    TemplateError(String),

    /// Tool name registered twice in one catalog.
    #[error("duplicate tool: {0}")]
    DuplicateTool(String),

    /// Tool call named a tool absent from the catalog.
    #[error("unknown tool: {0}")]
    UnknownTool(String),

    /// Tool call arguments failed schema validation.
    #[error("tool argument schema violation: {0}")]
    ArgumentSchemaViolation(String),

    /// Backend transport failure after retries.
    #[error("backend unavailable after {attempts} attempt(s): {message}")]
    BackendUnavailable {
        message: String,
        attempts: u32,
        timeout: bool,
    },

    /// Request modality is incompatible with the backend.
    #[error("modality mismatch: {0}")]
    ModalityMismatch(String),

    /// Per-path backend call cap was hit; indicates a control-flow defect.
    #[error("backend call budget exceeded: {calls} calls, cap {cap}")]
    BudgetExceeded { calls: usize, cap: usize },

    /// Scripted backend had no response for a requested key.
    #[error("script exhausted: no response for {0}")]
    ScriptExhausted(String),

    /// Answer agent returned only whitespace twice.
    #[error("answer agent returned an empty answer")]
    EmptyAnswer,

    /// Candidate selection invoked with no candidates.
    #[error("empty candidate list")]
    EmptyCandidateList,

    /// Scorer transport or parse failure.
    #[error("scorer unavailable: {0}")]
    ScorerUnavailable(String),

    /// Reward breakdown requested for a path without an answer.
    #[error("incomplete path: no answer produced")]
    IncompletePath,

    /// Every parallel path failed.
    #[error("no completed paths")]
    NoCompletedPaths,

    /// Judge metric backend replied with a non-integer or out-of-range score twice.
    #[error("invalid judge reply: {0}")]
    InvalidJudgeReply(String),

    /// Configuration file or value error.
    #[error("config error: {0}")]
    ConfigError(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Shorthand for a [`Error::ParseError`].
    pub fn parse(position: usize, reason: impl Into<String>) -> Self {
        Error::ParseError {
            position,
            reason: reason.into(),
        }
    }

    /// True when the error stems from a backend transport timeout.
    pub fn is_timeout(&self) -> bool {
        matches!(self, Error::BackendUnavailable { timeout: true, .. })
    }
}

pub type Result<T> = std::result::Result<T, Error>;
