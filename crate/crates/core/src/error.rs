use thiserror::Error;

use crate::graph::VertexId;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    /// The provider or window violates a weighted-graph axiom.
    #[error("structural error: {0}")]
    Structural(String),

    #[error("config error: {0}")]
    Config(String),

    /// A vertex, time or quantity outside the domain of the object it was
    /// requested from.
    #[error("domain error: {0}")]
    Domain(String),

    /// A ball, cylinder or march would leak outside the materialized window.
    #[error("coverage error: {0}")]
    Coverage(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("resource limit exceeded: {0}")]
    Resource(String),

    #[error("singular system: {0}")]
    Singular(String),

    /// A hierarchy chain whose equation `index` does not hold.
    #[error("hierarchy chain broken at index {index}: {detail}")]
    Assembly { index: usize, detail: String },

    #[error("integration error: {0}")]
    Integration(String),

    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    pub(crate) fn vertex_outside(x: VertexId) -> Self {
        Error::Domain(format!("vertex {x} is not in the window"))
    }
}
