use thiserror::Error;

/// Errors raised by toolkit operations.
///
/// Validation problems that are part of an operation's normal output
/// (record violations, validity reports, parse residue) are returned as
/// values and never surface here.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid record: {0}")]
    InvalidRecord(String),

    #[error("nothing to assemble: request, knowledge and context are all empty")]
    EmptyInput,

    #[error("unresolved template placeholders: {}", .0.join(", "))]
    UnresolvedPlaceholders(Vec<String>),

    #[error("row index {index} out of range for a table with {rows} rows")]
    RowOutOfRange { index: usize, rows: usize },

    #[error("cannot serialize an empty answer list")]
    EmptyAnswers,

    #[error("empty answer at position {0}")]
    EmptyAnswer(usize),

    #[error("slot `{0}` is not part of the ontology")]
    UnknownSlot(String),

    #[error("dialogue states are drawn over different ontologies: {0}")]
    OntologyMismatch(String),

    #[error("gold expression is not valid {language}: {detail}")]
    InvalidGold { language: String, detail: String },

    #[error("prediction/reference length mismatch: {predictions} vs {references}")]
    LengthMismatch { predictions: usize, references: usize },

    #[error("empty corpus")]
    EmptyCorpus,

    #[error("missing prediction for record `{0}`")]
    MissingPrediction(String),

    #[error("duplicate prediction for record `{0}`")]
    DuplicatePrediction(String),

    #[error("prediction `{0}` does not match any record")]
    UnknownPrediction(String),

    #[error("knowledge does not fit the budget: irreducible core needs {needed} tokens, {available} available")]
    BudgetExceeded { needed: usize, available: usize },

    #[error("requested {k} items from a pool of {available}")]
    NotEnoughItems { k: usize, available: usize },

    #[error("zero embedding vector for `{0}`")]
    ZeroEmbedding(String),

    #[error("missing embedding for `{0}`")]
    MissingEmbedding(String),

    #[error("embedding dimension mismatch: expected {expected}, got {got} for `{id}`")]
    DimensionMismatch {
        id: String,
        expected: usize,
        got: usize,
    },

    #[error("invalid mixture: {0}")]
    InvalidMixture(String),

    #[error("invalid weights: {0}")]
    InvalidWeights(String),

    #[error("no examples supplied")]
    NoExamples,

    #[error("query alone needs {needed} tokens but the budget is {budget}")]
    QueryExceedsBudget { needed: usize, budget: usize },

    #[error("invalid budget: {0}")]
    InvalidBudget(String),
}

pub type Result<T> = std::result::Result<T, Error>;
