use std::io;

/// Errors produced while building meshes, assembling HDG systems or running the solver.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid mesh parameter: {0}")]
    InvalidMesh(String),

    #[error("face {face} is a boundary face and has no right element")]
    NoRightElement { face: usize },

    #[error("unsupported quadrature: {0}")]
    UnsupportedQuadrature(String),

    #[error("element {0} is degenerate (non-positive area)")]
    DegenerateElement(usize),

    #[error("local block `{block}` of element {element} is not positive definite")]
    SingularBlock { element: usize, block: &'static str },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("sparse factorization failed: {0}")]
    Factorization(String),

    #[error("trace system is singular or numerically rank deficient (relative residual {0:.3e})")]
    SingularSystem(f64),

    #[error("root search failed: {0}")]
    RootSearch(String),

    #[error(transparent)]
    Io(#[from] io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
