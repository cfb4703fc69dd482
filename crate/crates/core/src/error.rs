use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("distribution weights sum to {total}, expected 1")]
    Unnormalized { total: f64 },

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("window [{lo}, {hi}] is not symmetric about 0")]
    AsymmetricWindow { lo: i64, hi: i64 },

    #[error("path window [{lo}, {hi}] does not cover sites {need_lo}..={need_hi}")]
    WindowTooShort {
        lo: i64,
        hi: i64,
        need_lo: i64,
        need_hi: i64,
    },

    #[error("site {site} outside window [{lo}, {hi}]")]
    SiteOutOfWindow { site: i64, lo: i64, hi: i64 },

    #[error("zero initial vector")]
    ZeroVector,

    #[error("spectral parameter z = {re} + {im}i must have nonzero imaginary part")]
    RealSpectralParameter { re: f64, im: f64 },

    #[error("vector norm {norm} is not 1")]
    NotNormalized { norm: f64 },

    #[error("tridiagonal eigensolver did not converge after {iterations} sweeps; diagonal = {diagonal:?}")]
    EigenNoConvergence { iterations: usize, diagonal: Vec<f64> },

    #[error("decay fit needs at least {needed} usable sites, got {got}")]
    TooFewSites { needed: usize, got: usize },

    #[error("decay fit input contains a non-positive value at index {index}")]
    NonPositive { index: usize },

    #[error("lambda_max = {lambda_max} too small: tail poles reach {pole_radius}; use lambda_max >= {suggested}")]
    TailTooLarge {
        lambda_max: f64,
        pole_radius: f64,
        suggested: f64,
    },

    #[error("quadrature did not reach tolerance {tol} (error estimate {estimate})")]
    QuadratureFailed { tol: f64, estimate: f64 },

    #[error("eigenvector component at site 0 is {value:e}; the change of variables degenerates, re-draw the potential")]
    DegenerateEigenvector { value: f64 },

    #[error("operation requires a single-site distribution with a bounded density")]
    DensityRequired,
}
