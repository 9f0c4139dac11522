use thiserror::Error;

/// Errors raised anywhere in the laboratory pipeline.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("exponent {name} must be strictly positive, got {value}")]
    InvalidExponent { name: String, value: f64 },
    #[error("unit factor must not vanish at the origin (value {value})")]
    InvalidUnit { value: f64 },
    #[error("point ({x}, {y}) is outside the nest domain: oriented factor {index} = {value}")]
    OutOfDomain {
        x: f64,
        y: f64,
        index: usize,
        value: f64,
    },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("Newton iteration for the center did not converge after {steps} steps")]
    NoCenter { steps: usize },
    #[error("critical point ({x}, {y}) is not a center: Hessian of log H is not negative definite")]
    NotACenter { x: f64, y: f64 },
    #[error("level h = {h} is outside the nest range (0, {h_max})")]
    Range { h: f64, h_max: f64 },
    #[error("oval did not close after {steps} steps")]
    NonClosure { steps: usize },
    #[error("quadrature error estimate {achieved:e} exceeds tolerance {tolerance:e}")]
    PrecisionLoss { achieved: f64, tolerance: f64 },
    #[error("Stokes oracle failed: {0}")]
    OracleFailure(String),
    #[error("grid point {index} (h = {h}): {source}")]
    AtGridPoint {
        index: usize,
        h: f64,
        source: Box<Error>,
    },
    #[error("chart domain error: {0}")]
    ChartDomain(String),
    #[error("linearization at {label} is defective")]
    Degeneracy { label: String },
    #[error("model mismatch: residual {residual:e} exceeds threshold {threshold:e}")]
    ModelMismatch { residual: f64, threshold: f64 },
    #[error("ill-conditioned basis (condition number {condition:e}); change the fit window")]
    Conditioning { condition: f64 },
    #[error("unsupported continuation: {0}")]
    UnsupportedContinuation(String),
    #[error("noisy series: indeterminate run covers {fraction:.3} of the grid")]
    NoisySeries { fraction: f64 },
    #[error("sample {index} is (numerically) zero on the contour; perturb the contour radii")]
    OnContourZero { index: usize },
    #[error("model residual {residual:e} too large to trust the argument bound")]
    UntrustedBound { residual: f64 },
    #[error("trajectory escaped: {0}")]
    Escape(String),
    #[error("schema mismatch: {0}")]
    Schema(String),
    #[error("config error in `{field}`: {message}")]
    Config { field: String, message: String },
    #[error("io error: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn at_grid_point(self, index: usize, h: f64) -> Error {
        Error::AtGridPoint {
            index,
            h,
            source: Box::new(self),
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Io(err.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
