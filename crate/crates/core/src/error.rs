use thiserror::Error;

pub type Result<T, E = OtsError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum OtsError {
    #[error("syntax error at line {line}: {message}")]
    Syntax { line: usize, message: String },

    #[error("invalid {element}: {message}")]
    Invalid { element: String, message: String },

    #[error("unknown vertex {0}")]
    UnknownVertex(usize),

    #[error("graph is disconnected")]
    Disconnected,

    #[error("graph with {vertices} vertices exceeds the exhaustive-search budget of {budget}")]
    TooLarge { vertices: usize, budget: usize },

    #[error("missing big-M value for line {0}")]
    MissingBigM(usize),

    #[error("big-M sets disagree: {0}")]
    Coverage(String),

    #[error("model error: {0}")]
    Model(String),

    #[error("solution violates {what} by {magnitude:.3e}")]
    Violation { what: String, magnitude: f64 },

    #[error("solver engine error: {0}")]
    Engine(String),

    #[error("model is infeasible: {0}")]
    Infeasible(String),

    #[error("line {line}: {source}")]
    Line {
        line: usize,
        #[source]
        source: Box<OtsError>,
    },

    #[error("{context}: {source}")]
    Context {
        context: String,
        #[source]
        source: Box<OtsError>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl OtsError {
    pub(crate) fn invalid(element: impl Into<String>, message: impl Into<String>) -> Self {
        OtsError::Invalid {
            element: element.into(),
            message: message.into(),
        }
    }

    pub fn context(self, context: impl Into<String>) -> Self {
        OtsError::Context {
            context: context.into(),
            source: Box::new(self),
        }
    }
}
