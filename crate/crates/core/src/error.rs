use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("operator: {0}")]
    InvalidOperator(String),

    #[error("grid: {0}")]
    InvalidGrid(String),

    #[error("profile: {0}")]
    InvalidProfile(String),

    /// The zero-order coefficient `c + λ` is not bounded away from zero
    /// from below, so the direct Neumann solve has no comparison principle.
    #[error("solver: c + lambda must be negative at every node, violated at nodes {nodes:?}")]
    NotCoercive { nodes: Vec<usize> },

    #[error("solver: {0}")]
    SignCondition(String),

    #[error("solver: inner solve failed at step {step}: {source}")]
    InnerSolve {
        step: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("solver: linear system is singular at row {0}")]
    SingularSystem(usize),

    #[error("solver: iterate left the sandwich [u0 - tol, v0 + tol] at node {node}: {value} not in [{lower}, {upper}]")]
    SandwichViolation {
        node: usize,
        value: f64,
        lower: f64,
        upper: f64,
    },

    #[error("eigen: {0}")]
    EigenConfig(String),

    #[error("eigen: eigenfunction residual {achieved:.3e} exceeds tolerance {tol:.3e}")]
    EigenResidual { achieved: f64, tol: f64 },

    #[error("certify: {0}")]
    Certify(String),

    #[error("config: {0}")]
    Config(String),

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}
