use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown problem `{name}`; available: {available}")]
    UnknownProblem { name: String, available: String },

    #[error("invalid problem definition: {0}")]
    InvalidProblem(String),

    #[error("non-finite value from {what} at {point:?}")]
    Evaluation { what: &'static str, point: Vec<f64> },

    #[error("outside the admissible domain: {0}")]
    Domain(String),

    #[error("no node of the search grid lies in dom σ* (radius {radius})")]
    Infeasible { radius: f64 },

    #[error("no characteristic through (t={t}, x={x:?}) in y-window {window:?}; widen the window or refine the search")]
    SearchWindow { t: f64, x: Vec<f64>, window: Vec<(f64, f64)> },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("parse error at byte {pos}: {msg}")]
    Parse { pos: usize, msg: String },

    #[error("at node t={t}, x={x:?}: {source}")]
    AtNode {
        t: f64,
        x: Vec<f64>,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn at_node(self, t: f64, x: &[f64]) -> Self {
        Error::AtNode { t, x: x.to_vec(), source: Box::new(self) }
    }
}
