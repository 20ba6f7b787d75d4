//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("bit-template length mismatch: {left} vs {right} bits")]
    BitLengthMismatch { left: usize, right: usize },

    #[error("descriptor dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("empty template (zero bits or zero rows)")]
    EmptyTemplate,

    #[error("degenerate template pair: no set bits in either template")]
    DegenerateTemplatePair,

    #[error("descriptor row {row} is all-zero")]
    ZeroRow { row: usize },

    #[error("score {0} outside [0,1]")]
    ScoreOutOfRange(f64),

    #[error("sequence length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("no {label} training scores for user '{user}', matcher '{matcher}'")]
    InsufficientTraining {
        user: String,
        matcher: String,
        label: &'static str,
    },

    #[error("no statistics for user '{user}', matcher '{matcher}'")]
    UnknownPair { user: String, matcher: String },

    #[error("mass functions are defined over different frames")]
    FrameMismatch,

    #[error("invalid mass function: {0}")]
    InvalidMass(String),

    #[error("frame must have 1..={max} hypotheses, got {got}")]
    InvalidFrame { got: usize, max: usize },

    #[error("total conflict (K = 1) while combining mass {index}")]
    TotalConflict { index: usize },

    #[error("focal set must not be empty")]
    EmptyFocalSet,

    #[error("conditioning event must be a nonempty strict subset of the frame")]
    DegenerateConditioning,

    #[error("empty decision set")]
    EmptyDecisions,

    #[error("subject '{subject}' has {count} sample(s); protocol requires at least 2")]
    TooFewSamples { subject: String, count: usize },

    #[error("protocol requires at least 2 subjects, got {0}")]
    TooFewSubjects(usize),

    #[error("need at least one genuine and one imposter score")]
    MissingScoreClass,

    #[error("need at least {need} scores per class, got {got}")]
    TooFewScores { need: usize, got: usize },

    #[error("genuine and imposter score distributions both have zero variance")]
    DegenerateDistributions,

    #[error("unsupported confidence level {0}% (use 90, 95 or 99)")]
    UnsupportedLevel(u32),

    #[error("label '{label}' inconsistent with subjects '{probe}' vs '{gallery}'")]
    LabelMismatch {
        probe: String,
        gallery: String,
        label: String,
    },

    #[error("comparison {probe} vs {gallery} has no score from matcher '{matcher}'")]
    IncompleteComparison {
        probe: String,
        gallery: String,
        matcher: String,
    },

    #[error("no {modality} template for subject '{subject}', sample '{sample}'")]
    MissingTemplate {
        subject: String,
        sample: String,
        modality: &'static str,
    },

    #[error("all {total} probe combinations ended in total conflict")]
    ConflictExhausted { total: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("malformed record at line {line}: {msg}")]
    MalformedRecord { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
