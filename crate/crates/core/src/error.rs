use thiserror::Error;

/// Errors produced by the geometry, media, tracing and verification layers.
#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("radius profile rejected: {0}")]
    InvalidProfile(String),

    #[error("refraction coefficient is not positive: min sampled value {min} at ({x}, {y})")]
    NonPositive { min: f64, x: f64, y: f64 },

    #[error("medium outside the supported class: {0}")]
    OutOfClass(String),

    #[error("ray trapped: Euclidean path length {length} exceeded cap {cap}")]
    Trapped { length: f64, cap: f64 },

    #[error("ray meets the boundary almost tangentially: |<nu|theta>| = {cosine}")]
    TangentExit { cosine: f64 },

    #[error("direction is not incoming at s = {s}, phi = {phi} (<nu|theta> = {cosine})")]
    NotIncoming { s: f64, phi: f64, cosine: f64 },

    #[error("travel-time gradient identity violated: (<d_x tau|theta> + kappa d_phi tau)/n = {ratio}")]
    IdentityViolation { ratio: f64 },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("sin(psi) = {value} outside [-1, 1]; hodograph grid too coarse")]
    OutOfRange { value: f64 },

    #[error("grid too coarse: {0}")]
    GridTooCoarse(String),

    #[error("Gauss-Newton diverged: residual grew on two consecutive iterations ({history:?})")]
    Diverged { history: Vec<f64> },

    #[error("normal equations are singular beyond the regularization")]
    RankDeficient,

    #[error("shooting failed to reach s = {target}: {reason}")]
    ShootingFailed { target: f64, reason: String },

    #[error("at grid cell ({i}, {j}): {source}")]
    AtCell {
        i: usize,
        j: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("io: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn at_cell(self, i: usize, j: usize) -> Error {
        Error::AtCell {
            i,
            j,
            source: Box::new(self),
        }
    }

    /// The innermost error, unwrapping grid-cell context.
    pub fn root(&self) -> &Error {
        match self {
            Error::AtCell { source, .. } => source.root(),
            other => other,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
