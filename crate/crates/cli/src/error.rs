use beziercage::Error as CoreError;

/// One error type for the whole pipeline; every variant carries a short
/// machine-parsable category printed as `error: [category] message`.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Io(#[from] std::io::Error),
    #[error("{message}")]
    Format { category: &'static str, message: String },
    #[error("{0}")]
    Core(#[from] CoreError),
}

impl CliError {
    pub fn cage_file(message: impl Into<String>) -> Self {
        CliError::Format { category: "cage-file", message: message.into() }
    }

    pub fn mesh_file(message: impl Into<String>) -> Self {
        CliError::Format { category: "mesh-file", message: message.into() }
    }

    pub fn coords_file(message: impl Into<String>) -> Self {
        CliError::Format { category: "coords-file", message: message.into() }
    }

    pub fn loops_file(message: impl Into<String>) -> Self {
        CliError::Format { category: "loops-file", message: message.into() }
    }

    pub fn quads_file(message: impl Into<String>) -> Self {
        CliError::Format { category: "quads-file", message: message.into() }
    }

    pub fn io(message: impl Into<String>) -> Self {
        CliError::Format { category: "io", message: message.into() }
    }

    pub fn usage(message: impl Into<String>) -> Self {
        CliError::Format { category: "usage", message: message.into() }
    }

    pub fn category(&self) -> &'static str {
        match self {
            CliError::Io(_) => "io",
            CliError::Format { category, .. } => category,
            CliError::Core(e) => match e {
                CoreError::InvalidPatch(_)
                | CoreError::OutsideDomain { .. }
                | CoreError::InvalidCage(_)
                | CoreError::DegenerateQuad { .. }
                | CoreError::StructureMismatch { .. } => "cage",
                CoreError::InvalidMesh(_) | CoreError::OutsideCage { .. } => "mesh",
                CoreError::RankDeficient { .. }
                | CoreError::IllConditioned { .. }
                | CoreError::Degenerate(_) => "numerics",
                CoreError::InvalidLoop(_) => "loops",
            },
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
