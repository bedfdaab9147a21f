use thiserror::Error;

/// Errors raised by the library.
///
/// Input problems (bad files, invalid arguments, violated preconditions) map to
/// exit code 1, numerical failures to exit code 2.
#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("non-manifold edge ({0}, {1}) shared by more than two triangles")]
    NonManifoldEdge(usize, usize),

    #[error("degenerate triangle {0} (zero or negative area)")]
    DegenerateTriangle(usize),

    #[error("triangle {0} references vertex {1} out of range")]
    VertexOutOfRange(usize, usize),

    #[error("mesh is not orientable")]
    NonOrientable,

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("numerical failure: {msg}")]
    Numerical { msg: String, best_residual: Option<f64> },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::Invalid(msg.into())
    }

    pub fn numerical(msg: impl Into<String>) -> Self {
        Error::Numerical { msg: msg.into(), best_residual: None }
    }

    pub fn numerical_with(msg: impl Into<String>, best_residual: f64) -> Self {
        Error::Numerical { msg: msg.into(), best_residual: Some(best_residual) }
    }

    /// Process exit code for the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Numerical { .. } => 2,
            _ => 1,
        }
    }
}
