use thiserror::Error;

/// Errors raised by graph construction, file parsing and the numerical routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid graph: {0}")]
    InvalidGraph(String),
    #[error("graph is disconnected ({components} components)")]
    Disconnected { components: usize },
    #[error("vertex {vertex} out of range for graph with {n} vertices")]
    VertexOutOfRange { vertex: usize, n: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("vertex count {requested} exceeds the configured maximum {max}")]
    TooLarge { requested: usize, max: usize },
    #[error("function is identically zero")]
    ZeroFunction,
    #[error("parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("no exterior: the outer ball covers every vertex")]
    NoExterior,
    #[error("weight is not {c}-regulated: {detail}")]
    NotRegulated { c: f64, detail: String },
    #[error("assumption violated: {0}")]
    Assumption(String),
    #[error("statistical failure after {attempts} attempts: {detail}")]
    Statistical { attempts: usize, detail: String },
    #[error("iterative solver did not converge: residual {residual:.3e} after {iterations} iterations")]
    NonConvergence { residual: f64, iterations: usize },
    #[error("invariant violated: {0}")]
    Invariant(String),
    #[error("degenerate annulus: {0}")]
    Degenerate(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_vertex(v: usize, n: usize) -> Result<()> {
    if v < n {
        Ok(())
    } else {
        Err(Error::VertexOutOfRange { vertex: v, n })
    }
}

pub(crate) fn param(cond: bool, msg: impl FnOnce() -> String) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::InvalidParameter(msg()))
    }
}
