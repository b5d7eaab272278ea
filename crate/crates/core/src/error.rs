use thiserror::Error;

/// Crate-wide error type. Variants map onto the failure modes of the numeric
/// layers; the CLI translates them into exit codes.
#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("gamma pole at non-positive integer {0}")]
    GammaPole(f64),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("quadrature did not converge: {0}")]
    QuadratureNonconvergence(String),

    #[error("multiplier decay order {got} insufficient for inversion (need > {need})")]
    InsufficientDecay { got: f64, need: f64 },

    #[error("truncation tolerance not met: {0}")]
    TruncationTolerance(String),

    #[error("invalid radial kernel: {0}")]
    InvalidKernel(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("unstable step ratio dt/dr = {0} (limit 0.5)")]
    StabilityViolation(f64),

    #[error("wave support would reach the artificial boundary (need r_max >= {0})")]
    BoundaryContamination(f64),

    #[error("atom count {0} exceeds cap {1}")]
    AtomOverflow(usize, usize),

    #[error("ambiguous coset grouping: {0}")]
    AmbiguousGrouping(String),

    #[error("degenerate configuration: {0}")]
    DegenerateInput(String),

    #[error("target deviation {target} unreachable within polynomial degree {max_degree}")]
    InfeasibleDegree { target: f64, max_degree: usize },

    #[error("construction infeasible: {0}")]
    ConstructionInfeasible(String),

    #[error("tail not certifiable: {0}")]
    TailNotCertifiable(String),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
