use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("chain length must be even and at least 2, got {0}")]
    InvalidLength(usize),

    #[error("site index {site} out of range for {sites} sites")]
    SiteOutOfRange { site: usize, sites: usize },

    #[error("coupling between a site and itself (site {0})")]
    SameSite(usize),

    #[error("{0}")]
    Domain(String),

    #[error("operator is not square: {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("dense diagonalization refused: dimension {dim} exceeds cap {cap}")]
    DimensionCap { dim: usize, cap: usize },

    #[error("{solver} did not converge after {iterations} iterations (residual {residual:.3e})")]
    NotConverged { solver: &'static str, iterations: usize, residual: f64 },

    #[error("triplet energies disagree by {spread:.3e} (tolerance {tol:.3e})")]
    TripletMismatch { spread: f64, tol: f64 },

    #[error("unexpected low-energy structure: {0}")]
    Spectrum(String),

    #[error("integrator step size underflow at t = {t:.6e} (h = {h:.3e})")]
    StepUnderflow { t: f64, h: f64 },

    #[error("spectrum cache: {0}")]
    Cache(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for errors caused by physically inadmissible inputs, as opposed
    /// to numerical breakdowns.
    pub fn is_domain(&self) -> bool {
        matches!(
            self,
            Error::InvalidLength(_)
                | Error::SiteOutOfRange { .. }
                | Error::SameSite(_)
                | Error::Domain(_)
                | Error::TripletMismatch { .. }
        )
    }
}
