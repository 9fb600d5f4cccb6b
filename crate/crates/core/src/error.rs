use thiserror::Error;

/// Errors produced by cage construction, coordinate computation, and deformation.
#[derive(Debug, Error)]
pub enum Error {
    #[error("parameter ({u}, {v}) lies outside the patch domain")]
    OutsideDomain { u: f64, v: f64 },

    #[error("invalid patch: {0}")]
    InvalidPatch(String),

    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("cage failed validation: {0}")]
    InvalidCage(String),

    #[error("quad {index} is degenerate (repeated corner)")]
    DegenerateQuad { index: usize },

    #[error("{count} mesh vertices lie outside the cage; first indices: {head:?}")]
    OutsideCage {
        count: usize,
        head: Vec<usize>,
        /// Every offending vertex index, in ascending order.
        indices: Vec<usize>,
    },

    #[error("constraint matrix has rank {rank}, need 4; the cage geometry is degenerate")]
    RankDeficient { rank: usize },

    #[error(
        "constraint system is numerically singular (condition {condition:.3e}); \
         cage diameter is {diameter:.3e} -- recenter or rescale the cage and recompute"
    )]
    IllConditioned { condition: f64, diameter: f64 },

    #[error("cage structure mismatch at patch {index}: {reason}")]
    StructureMismatch { index: usize, reason: String },

    #[error("degenerate geometry: {0}")]
    Degenerate(String),

    #[error("boundary loop: {0}")]
    InvalidLoop(String),
}

impl Error {
    pub(crate) fn outside_cage(indices: Vec<usize>) -> Self {
        Error::OutsideCage {
            count: indices.len(),
            head: indices.iter().copied().take(8).collect(),
            indices,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
