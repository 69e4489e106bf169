use thiserror::Error;

/// Every failure the library can report. Variant names double as the
/// machine-readable error name printed by the CLI.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("DegenerateRotation: {0}")]
    DegenerateRotation(String),
    #[error("DegenerateConfiguration: {0}")]
    DegenerateConfiguration(String),
    #[error("BehindCamera: depth {depth}")]
    BehindCamera { depth: f64 },
    #[error("RankDeficient: point {point} has design rank {rank} < {required}")]
    RankDeficient {
        point: usize,
        rank: usize,
        required: usize,
    },
    #[error("InvalidConfig: {0}")]
    InvalidConfig(String),
    #[error("InsufficientTracks: {have} tracks for {required} bases")]
    InsufficientTracks { have: usize, required: usize },
    #[error("EmptyCluster: cluster {cluster} stayed empty after {retries} re-seeds")]
    EmptyCluster { cluster: usize, retries: usize },
    #[error("SingularNormalEquations: curve {curve} channel {channel}")]
    SingularNormalEquations { curve: String, channel: usize },
    #[error("InvalidSpec: {0}")]
    InvalidSpec(String),
    #[error("DegenerateDenominator: correspondence lies at both epipoles")]
    DegenerateDenominator,
    #[error("NoConsensus: best inlier count {inliers} < 8")]
    NoConsensus { inliers: usize },
    #[error("DimensionMismatch: {0}")]
    DimensionMismatch(String),
    #[error("UnknownStrategy: no {kind} registered under '{name}'")]
    UnknownStrategy { kind: &'static str, name: String },
    #[error("Format: {path}: {message}")]
    Format { path: String, message: String },
    #[error("Io: {0}")]
    Io(String),
}

impl Error {
    pub fn format(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Format {
            path: path.into(),
            message: message.into(),
        }
    }

    /// The bare variant name, e.g. `"NoConsensus"`.
    pub fn name(&self) -> &'static str {
        match self {
            Error::DegenerateRotation(_) => "DegenerateRotation",
            Error::DegenerateConfiguration(_) => "DegenerateConfiguration",
            Error::BehindCamera { .. } => "BehindCamera",
            Error::RankDeficient { .. } => "RankDeficient",
            Error::InvalidConfig(_) => "InvalidConfig",
            Error::InsufficientTracks { .. } => "InsufficientTracks",
            Error::EmptyCluster { .. } => "EmptyCluster",
            Error::SingularNormalEquations { .. } => "SingularNormalEquations",
            Error::InvalidSpec(_) => "InvalidSpec",
            Error::DegenerateDenominator => "DegenerateDenominator",
            Error::NoConsensus { .. } => "NoConsensus",
            Error::DimensionMismatch(_) => "DimensionMismatch",
            Error::UnknownStrategy { .. } => "UnknownStrategy",
            Error::Format { .. } => "Format",
            Error::Io(_) => "Io",
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
