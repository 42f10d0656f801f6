use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("step size underflow at t = {t} (h = {h:e})")]
    StepUnderflow { t: f64, h: f64 },

    #[error("step budget of {budget} exhausted at t = {t}")]
    StepBudget { t: f64, budget: usize },

    #[error("value iteration did not converge after {iters} sweeps (residual {residual:e})")]
    NoConvergence { iters: usize, residual: f64 },

    #[error("horizon {horizon} shorter than layer entry time {entry}")]
    HorizonTooShort { horizon: f64, entry: f64 },

    #[error("restricted control exceeds unit ball by {excess} at t = {t}")]
    ControlExcess { t: f64, excess: f64 },

    #[error("unknown scenario `{0}`")]
    UnknownScenario(String),

    #[error("malformed manifest: {0}")]
    MalformedManifest(String),

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
