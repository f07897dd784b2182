use thiserror::Error;

pub type Result<T> = std::result::Result<T, GeometryError>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("degenerate metric at {point:?} (smallest eigenvalue {min_eigenvalue:e})")]
    DegenerateMetric { point: Vec<f64>, min_eigenvalue: f64 },

    #[error("wind leaves the Randers domain at {point:?}: |W|^2 = {norm_sq}")]
    OutsideRandersDomain { point: Vec<f64>, norm_sq: f64 },

    #[error("degenerate plane (Gram determinant {0:e})")]
    DegeneratePlane(f64),

    #[error("invalid frak s = {0} (must be positive)")]
    InvalidFrakS(f64),

    #[error("degenerate immersion jet: rank {rank} < {expected}")]
    DegenerateJet { rank: usize, expected: usize },

    #[error("operation needs a hypersurface, got codimension {0}")]
    NotHypersurface(usize),

    #[error("zero vector")]
    ZeroVector,

    #[error("wind is not Killing at this point (residual {residual:e} > {tol:e})")]
    NotKilling { residual: f64, tol: f64 },

    #[error("oracle ill-conditioned: {0}")]
    OracleIllConditioned(String),

    #[error("degenerate rotational frame: delta + x1^2 - x1'^2 = {0:e}")]
    DegenerateFrame(f64),

    #[error("degenerate first integral: Phi(frak s) = 0")]
    DegenerateFirstIntegral,

    #[error("profile domain violation: {0}")]
    Domain(String),

    #[error("quadrature did not converge: worst subinterval [{a}, {b}] error {error:e}")]
    Quadrature { a: f64, b: f64, error: f64 },

    #[error("minimal-surface ODE not solvable for x1'' at x1 = {x1}, x1' = {dx1}")]
    Unsolvable { x1: f64, dx1: f64 },

    #[error("no samples in Omega")]
    EmptyOmega,

    #[error("dimension mismatch: {0}")]
    Dimension(String),
}
