use core::fmt;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A vector argument does not have the expected number of components.
    DimensionMismatch { expected: usize, found: usize },
    /// Grid description rejected at construction.
    InvalidGrid(&'static str),
    /// Grid exceeds the configured cell cap.
    TooManyCells { cells: usize, cap: usize },
    /// Integrand parameters rejected at construction.
    InvalidLagrangian(&'static str),
    /// Two fields (or a field and a problem) live on different grids.
    GridMismatch,
    /// A value array does not match the grid layout.
    LayoutMismatch { expected: usize, found: usize },
    /// A field or parameter contains NaN or an infinity.
    NonFinite(&'static str),
    /// Boundary condition inconsistent with the grid.
    InvalidBoundary(&'static str),
    /// Time step must be strictly positive and finite.
    InvalidTimeStep(f64),
    /// Primal/dual step sizes violate `σ·ρ·‖D‖² ≤ 1`.
    InvalidStepSizes { product: f64 },
    /// Solver option out of range.
    InvalidOptions(&'static str),
    /// Step schedule does not reach the horizon or contains a bad step.
    InvalidSchedule(&'static str),
    /// The safeguarded scalar solve behind a proximal map hit its iteration cap.
    ProxNotConverged { iterations: usize },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::DimensionMismatch { expected, found } => {
                write!(f, "dimension mismatch: expected {expected} components, found {found}")
            }
            Error::InvalidGrid(msg) => write!(f, "invalid grid: {msg}"),
            Error::TooManyCells { cells, cap } => {
                write!(f, "grid has {cells} cells, more than the cap of {cap}")
            }
            Error::InvalidLagrangian(msg) => write!(f, "invalid integrand: {msg}"),
            Error::GridMismatch => f.write_str("fields live on different grids"),
            Error::LayoutMismatch { expected, found } => {
                write!(f, "layout mismatch: expected {expected} values, found {found}")
            }
            Error::NonFinite(what) => write!(f, "non-finite value in {what}"),
            Error::InvalidBoundary(msg) => write!(f, "invalid boundary condition: {msg}"),
            Error::InvalidTimeStep(tau) => write!(f, "time step must be positive and finite, got {tau}"),
            Error::InvalidStepSizes { product } => {
                write!(f, "step sizes violate sigma*rho*|D|^2 <= 1 (product {product})")
            }
            Error::InvalidOptions(msg) => write!(f, "invalid solver options: {msg}"),
            Error::InvalidSchedule(msg) => write!(f, "invalid time-step schedule: {msg}"),
            Error::ProxNotConverged { iterations } => {
                write!(f, "proximal scalar solve did not converge in {iterations} iterations")
            }
        }
    }
}

impl core::error::Error for Error {}
