use thiserror::Error;

/// Errors raised by the simulation modules.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("grid mismatch: operands are sampled on different grids")]
    GridMismatch,

    #[error("profile has zero energy")]
    ZeroEnergy,

    #[error("invalid focusing parameters: {0}")]
    InvalidFocus(String),

    #[error("invalid bit sequence: {0}")]
    InvalidBits(String),

    #[error("grid [{grid_min:.4e}, {grid_max:.4e}] does not contain the span [{span_min:.4e}, {span_max:.4e}]")]
    GridTooNarrow {
        grid_min: f64,
        grid_max: f64,
        span_min: f64,
        span_max: f64,
    },

    #[error("invalid propagation parameters: {0}")]
    InvalidPropagation(String),

    #[error("invalid pixel array: {0}")]
    InvalidPixels(String),

    #[error("singular pixel geometry: N2 + N4 = 0, gains cannot be solved")]
    SingularGeometry,

    #[error("all gains are zero")]
    ZeroGains,

    #[error("squeezed basis is not orthonormal (max deviation {0:.3e})")]
    NonOrthonormalBasis(f64),

    #[error("mode set has rank zero")]
    RankCollapse,

    #[error("profiles {a} and {b} were expected identical but differ by {distance:.3e} (relative L2)")]
    DegenerateMismatch { a: String, b: String, distance: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("numerical failure at NA = {na}: {source}")]
    AtAperture {
        na: f64,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for errors caused by the inputs rather than by the numerics.
    pub fn is_configuration(&self) -> bool {
        match self {
            Self::InvalidGrid(_)
            | Self::InvalidFocus(_)
            | Self::InvalidBits(_)
            | Self::GridTooNarrow { .. }
            | Self::InvalidPropagation(_)
            | Self::InvalidPixels(_)
            | Self::InvalidParameter(_) => true,
            Self::AtAperture { source, .. } => source.is_configuration(),
            _ => false,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
