use thiserror::Error;

/// Errors produced anywhere in the crate.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument is outside the domain an operation is defined on.
    #[error("domain error: {0}")]
    Domain(String),

    /// Analytic derivatives are implemented for n = 1..=3 only.
    #[error("unsupported derivative order {0}; analytic derivatives cover n = 1..=3")]
    UnsupportedOrder(u32),

    /// Dense storage refused for an oversized model.
    #[error("dimension {dim} exceeds the dense-storage cap {cap}")]
    Capacity { dim: usize, cap: usize },

    /// Invalid run configuration (time step, smoothing window, ...).
    #[error("configuration error: {0}")]
    Config(String),

    /// A state failed a consistency requirement (e.g. norm drifted).
    #[error("state integrity error: {0}")]
    Integrity(String),

    /// The reduced spectrum is (numerically) degenerate.
    #[error("degenerate spectrum: {0}")]
    Degeneracy(String),

    /// A grid is too coarse for the requested analysis.
    #[error("insufficient resolution: {0}")]
    Resolution(String),

    /// A sweep point failed; carries the (path, T) context.
    #[error("sweep run failed for path `{path}` at T = {total_time}: {source}")]
    SweepRun {
        path: String,
        total_time: f64,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
