use thiserror::Error;

/// Unified error type for construction, indexing, and verification failures.
///
/// Infeasibility or unboundedness of a linear program is *not* an error; it
/// is reported through [`crate::lp::LpStatus`].
#[derive(Debug, Error)]
pub enum Error {
    /// Mismatched scenarios or index vectors of the wrong length.
    #[error("dimension error: {0}")]
    Dimension(String),

    /// An argument outside its documented domain.
    #[error("invalid argument: {0}")]
    Argument(String),

    /// A marginal requested without a context on a signaling behavior, where
    /// the answer depends on the discarded parties' settings.
    #[error("ambiguous marginal: {0}")]
    AmbiguousMarginal(String),

    /// A canonical box construction failed its own consistency checks.
    #[error("construction error: {0}")]
    Construction(String),

    /// A computation was refused because it exceeds a configured limit.
    #[error("resource limit exceeded: {0}")]
    Resource(String),

    /// Malformed textual input (rationals, JSON payloads).
    #[error("parse error: {0}")]
    Parse(String),
}
