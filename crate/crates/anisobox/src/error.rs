use thiserror::Error;

/// Errors produced by shape algebra, the scale solver, the filter engine
/// and the I/O layer.
#[derive(Error, Debug)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("covariance is not positive definite: c11={c11}, c12={c12}, c22={c22}")]
    NotPositiveDefinite { c11: f64, c12: f64, c22: f64 },

    #[error("degenerate scale vector ({0}, {1}, {2}, {3}): more than one zero entry")]
    DegenerateScales(f64, f64, f64, f64),

    #[error("covariance infeasible on basis {basis}: {reason}")]
    InfeasibleCovariance { basis: &'static str, reason: String },

    #[error("covariance split infeasible: elongation bound {bound} is not positive")]
    InfeasibleSplit { bound: f64 },

    #[error("infeasible covariance at pixel ({x}, {y}): {reason}")]
    InfeasiblePixel { x: usize, y: usize, reason: String },

    #[error("raster does not cover the kernel support: {0}")]
    InsufficientSupport(String),

    #[error("rasters have mismatched shape: {0}x{1} vs {2}x{3}")]
    ShapeMismatch(usize, usize, usize, usize),

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("malformed {format} file: {reason}")]
    MalformedFile { format: &'static str, reason: String },
}

pub type Result<T> = std::result::Result<T, Error>;
