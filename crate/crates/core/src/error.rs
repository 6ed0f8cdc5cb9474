use thiserror::Error;

/// Errors raised by every fallible operation in the toolkit.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("empty input: {0}")]
    Empty(String),

    #[error("empty identifier field `{field}` in record {index}")]
    EmptyIdentifier { field: &'static str, index: usize },

    #[error("duplicate rating for product `{product}`, reviewer `{reviewer}`, question `{question}`")]
    DuplicateRating {
        product: String,
        reviewer: String,
        question: String,
    },

    #[error("incomplete cell: product `{product}` question `{question}` has {found} of {expected} ratings")]
    IncompleteCell {
        product: String,
        question: String,
        found: usize,
        expected: usize,
    },

    #[error("answer `{answer}` is not in the declared categories of question `{question}`")]
    UndeclaredCategory { question: String, answer: String },

    #[error("unknown question `{0}`")]
    UnknownQuestion(String),

    #[error("need at least 2 raters per subject, found {0}")]
    TooFewRaters(usize),

    #[error("rating matrix is invalid: {0}")]
    InvalidMatrix(String),

    #[error("kappa undefined: all ratings fall in a single category")]
    KappaUndefined,

    #[error("degenerate contingency table: {0}")]
    DegenerateTable(String),

    #[error("domain error in {function}: {detail}")]
    Domain { function: &'static str, detail: String },

    #[error("{function} did not converge within {iterations} iterations")]
    NoConvergence { function: &'static str, iterations: usize },

    #[error("two-sided tail is not defined for the {0} distribution")]
    TwoSidedNotSupported(&'static str),

    #[error("alpha must lie in (0, 1), got {0}")]
    InvalidAlpha(f64),

    #[error("zero variance: {0}")]
    ZeroVariance(String),

    #[error("invalid sample: {0}")]
    InvalidSample(String),

    #[error("design matrix is rank deficient at column {index} (`{name}`)")]
    RankDeficient { index: usize, name: String },

    #[error("logistic regression separation detected: coefficients diverge (max-norm {norm:.3}, bound {bound})")]
    Separation { norm: f64, bound: f64 },

    #[error("missing ground truth for product `{0}`")]
    MissingGroundTruth(String),

    #[error("invalid difference-in-differences panel: {0}")]
    InvalidPanel(String),

    #[error("invalid simulation config: {0}")]
    InvalidConfig(String),

    #[error("missing required column `{0}`")]
    MissingColumn(String),

    #[error("row {row}: {detail}")]
    BadRow { row: usize, detail: String },

    #[error("every audit section failed")]
    AllSectionsFailed,

    #[error("i/o: {0}")]
    Io(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Io(err.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(err: csv::Error) -> Self {
        Error::Io(err.to_string())
    }
}
