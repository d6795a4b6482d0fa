use thiserror::Error;

#[derive(Debug, Error)]
pub enum DifError {
    /// Invalid configuration value or incompatible run settings.
    #[error("config error: {0}")]
    Config(String),

    /// Input data that cannot be used (missing classes, wrong sizes, bad files).
    #[error("data error: {0}")]
    Data(String),

    /// A zero-variance input where a correlation needs spread.
    #[error("degenerate input: {0}")]
    Degenerate(String),

    /// An optimization produced NaN or infinity.
    #[error("diverged at step {step}: {detail}")]
    Diverged { step: usize, detail: String },

    #[error(transparent)]
    Nn(#[from] dif_nn::NnError),

    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("image error on {path}: {detail}")]
    Image { path: String, detail: String },

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = DifError> = std::result::Result<T, E>;

impl DifError {
    pub fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        DifError::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }

    /// True for errors caused by the caller's settings rather than their data.
    pub fn is_config(&self) -> bool {
        matches!(self, DifError::Config(_) | DifError::Nn(dif_nn::NnError::Spec(_)))
    }
}
