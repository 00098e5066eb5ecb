use thiserror::Error;

/// Errors raised by the frame construction and evaluation pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("matrix is not expansive: eigenvalue modulus {modulus} <= 1")]
    NotExpansive { modulus: f64 },

    #[error("scale {j} outside the supported range (|j| <= {max})")]
    ScaleRange { j: i32, max: i32 },

    #[error("spectrum leaves the frequency grid at {frequency:?} (scale {scale})")]
    Aliasing { scale: i32, frequency: Vec<f64> },

    #[error(
        "admissibility violated: gap {gap} * radius {radius} = {product} >= 1/4 \
         (balayage needs rho(Lambda) * r < 1/4)"
    )]
    Admissibility { gap: f64, radius: f64, product: f64 },

    #[error("Calderon sum {min_sum:e} below 1e-8 on the window support: dual is ill-posed")]
    IllPosedDual { min_sum: f64 },

    #[error("balayage infeasible for target {target:?}: best residual {best_residual:e} > tol {tol:e}")]
    InfeasibleBalayage {
        target: Vec<f64>,
        best_residual: f64,
        tol: f64,
    },

    #[error("dual truncation tail {tail:e} exceeds 1e-6 * ||tau||_2; increase R_dual (now {r_dual})")]
    TruncationTooSmall { tail: f64, r_dual: f64 },

    #[error("moment matrix condition number {cond:e} > 1e12; use a different base bump")]
    IllConditioned { cond: f64 },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("no truncation radius met eps = {eps:e}; best was R = {best_r} with eps = {best_eps:e}")]
    Exhausted { eps: f64, best_r: f64, best_eps: f64 },

    #[error("Neumann iteration diverged after {iterations} steps (error {error:e}); choose a smaller eps")]
    ContractionFailure { iterations: usize, error: f64 },

    #[error("construction failed: {0}")]
    Construction(String),

    #[error("invalid space parameters: {0}")]
    InvalidParams(String),

    #[error("internal consistency: {0}")]
    Internal(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    /// Whether the error is a mathematical rejection of the inputs
    /// (as opposed to malformed input or a numerical breakdown).
    pub fn is_rejection(&self) -> bool {
        matches!(
            self,
            Error::NotExpansive { .. }
                | Error::Admissibility { .. }
                | Error::IllPosedDual { .. }
                | Error::Construction(_)
        )
    }

    /// Whether the error is a numerical failure during an otherwise valid run.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Aliasing { .. }
                | Error::InfeasibleBalayage { .. }
                | Error::TruncationTooSmall { .. }
                | Error::IllConditioned { .. }
                | Error::Exhausted { .. }
                | Error::ContractionFailure { .. }
                | Error::Domain(_)
                | Error::Internal(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
