use thiserror::Error;

#[derive(Debug, Error)]
pub enum NlseError {
    /// A wavefunction contains NaN or infinite values.
    #[error("invalid state: field contains non-finite values ({context})")]
    InvalidState { context: String },

    /// An operation that divides by the norm received a zero-norm state.
    #[error("degenerate state: norm is zero or not positive")]
    DegenerateState,

    /// Two fields that must share a grid do not.
    #[error("grid mismatch: {context}")]
    ShapeMismatch { context: String },

    /// Grid construction parameters violate an invariant.
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    /// A region is malformed (overlapping cells, out of range).
    #[error("invalid region: {0}")]
    InvalidRegion(String),

    /// A linear projection spec is not idempotent on the grid.
    #[error("invalid projection: {0}")]
    InvalidProjection(String),

    /// Evolution or experiment parameters are unusable.
    #[error("configuration error: {0}")]
    Configuration(String),

    /// An argument is outside its mathematical domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// A dense operation was asked for on a grid above its size cap.
    #[error("capacity exceeded: {0}")]
    Capacity(String),

    /// The box cannot hold the velocity cone without losing probability mass.
    #[error("box too small: clipping fraction {fraction:.3e} exceeds {limit:.1e} at t = {time}")]
    BoxTooSmall { fraction: f64, limit: f64, time: f64 },

    /// Sample sets for an equivalence check are empty.
    #[error("empty sample set: {0}")]
    EmptySamples(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, NlseError>;
