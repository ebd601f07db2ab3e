use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid bath parameter: {0}")]
    InvalidBath(String),

    #[error("recurrence time {recurrence:.4} does not exceed the simulation horizon {t_max:.4}")]
    Recurrence { recurrence: f64, t_max: f64 },

    #[error("scenario mismatch: {0}")]
    ScenarioMismatch(String),

    #[error("invalid time step: dt = {dt}, t_max = {t_max}")]
    InvalidStep { dt: f64, t_max: f64 },

    #[error("norm drift {drift:.3e} at t = {t:.4} exceeds 1e-6; reduce dt")]
    NormDrift { drift: f64, t: f64 },

    #[error("mode index {index} out of range for {n} modes")]
    ModeIndex { index: usize, n: usize },

    #[error("decay rate undefined at t = {t:.4} on channel {channel} while the channel is occupied")]
    MaskedRate { t: f64, channel: usize },

    #[error("per-step jump probability {probability:.4} at t = {t:.4} exceeds 0.1; reduce dt")]
    StepTooLarge { probability: f64, t: f64 },

    #[error("{direction} jump on channel {channel} inconsistent with decay rate {decay}")]
    JumpDirection {
        direction: &'static str,
        channel: usize,
        decay: f64,
    },

    #[error("time grids do not match: {0}")]
    GridMismatch(String),

    #[error("configuration: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }
}
