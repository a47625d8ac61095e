use crate::grid::Voxel;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("voxel {voxel} is outside the grid {dims:?}")]
    OutOfBounds { voxel: Voxel, dims: [usize; 3] },

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("input model is not stable: voxel {witness} is not connected to the base layer (add a base connection)")]
    Unstable { witness: Voxel },

    #[error("input model is empty")]
    EmptyModel,

    #[error(
        "nullification made no progress on layer {layer} ({remaining} solid voxels left on it, {total} overall)"
    )]
    Stuck {
        layer: usize,
        remaining: usize,
        total: usize,
    },

    #[error("parse error at {location}: {message}")]
    Parse { location: String, message: String },

    #[error("mesh is not watertight: odd number of surface crossings along column ({i}, {j})")]
    NotWatertight { i: usize, j: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn parse(location: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Parse {
            location: location.into(),
            message: message.into(),
        }
    }
}
