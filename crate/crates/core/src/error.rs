use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    /// Tags the error with the pipeline stage that produced it.
    pub fn at(self, stage: &'static str) -> Self {
        match self {
            Self::Stage { .. } => self,
            other => Self::Stage {
                stage,
                source: Box::new(other),
            },
        }
    }
}

/// Adds [`Error::at`] to results.
pub trait StageExt<T> {
    fn stage(self, stage: &'static str) -> Result<T>;
}

impl<T> StageExt<T> for Result<T> {
    fn stage(self, stage: &'static str) -> Result<T> {
        self.map_err(|e| e.at(stage))
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid lattice: {0}")]
    InvalidLattice(String),

    #[error("invalid Hatano region: {0}")]
    InvalidRegion(String),

    #[error("invalid localized gain: {0}")]
    InvalidGain(String),

    #[error("invalid packet: {0}")]
    InvalidPacket(String),

    #[error("state has zero norm (total absorption)")]
    ZeroNorm,

    #[error("state is not normalized: norm = {0}")]
    NotNormalized(f64),

    #[error("non-finite amplitudes at step {step}")]
    NonFinite { step: usize },

    #[error("Krylov expansion did not reach tolerance {tol:e} after {halvings} step halvings (estimate {estimate:e})")]
    KrylovBreakdown {
        tol: f64,
        estimate: f64,
        halvings: u32,
    },

    #[error("dimension {dim} exceeds the dense limit of {limit}")]
    DimensionTooLarge { dim: usize, limit: usize },

    #[error("QR iteration failed to converge: {unconverged} eigenvalues left after {iterations} iterations on the window ending at row {row}")]
    NoConvergence {
        iterations: usize,
        row: usize,
        unconverged: usize,
    },

    #[error("invalid evolution config: {0}")]
    InvalidEvolution(String),

    #[error("fit: {0}")]
    Fit(String),

    #[error("config: {0}")]
    Config(String),

    #[error("empty trajectory")]
    EmptyTrajectory,

    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    TomlDe(#[from] toml::de::Error),

    #[error(transparent)]
    TomlSer(#[from] toml::ser::Error),
}
