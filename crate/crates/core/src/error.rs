use alloc::string::String;

/// Errors reported by the numerical core.
///
/// `Hypothesis` is reserved for violated structural assumptions on the data
/// (ellipticity, jump condition, symmetry ...). Callers map it to a distinct
/// exit status from plain input errors.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    Input(String),
    #[error("hypothesis {hypothesis} violated: {detail}")]
    Hypothesis {
        hypothesis: &'static str,
        detail: String,
    },
    #[error("point ({x:.6}, {y:.6}) is outside the flattening chart of radius {rho0}")]
    ChartOutOfRange { x: f64, y: f64, rho0: f64 },
    #[error("meshing failed: {reason} (try h <= {suggested_h:.4})")]
    Mesh { reason: String, suggested_h: f64 },
    #[error("linear solve failed: {reason} (pivot ratio {condition_estimate:.3e})")]
    Solver {
        reason: String,
        condition_estimate: f64,
    },
    #[error("region not covered by the mesh: {0}")]
    Coverage(String),
    #[error("geometry error: {0}")]
    Geometry(String),
    #[error("degenerate measurement: {0}")]
    Degenerate(String),
}

pub type Result<T, E = Error> = core::result::Result<T, E>;

impl Error {
    pub(crate) fn input(msg: impl Into<String>) -> Self {
        Error::Input(msg.into())
    }

    pub(crate) fn hypothesis(hypothesis: &'static str, detail: impl Into<String>) -> Self {
        Error::Hypothesis {
            hypothesis,
            detail: detail.into(),
        }
    }
}
