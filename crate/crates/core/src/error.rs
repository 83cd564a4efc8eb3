use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("utility argument {0} is outside the capacity-log domain [0, 1)")]
    UtilityDomain(f64),

    #[error("invalid MCS table: {0}")]
    InvalidTable(String),

    #[error("invalid parameter: {0}")]
    InvalidParam(String),

    /// Every (subchannel, user) pair has zero expected gain, so no multiplier
    /// bracket exists.
    #[error("channel dead: every candidate has zero expected squared gain")]
    ChannelDead,

    #[error("power root-solve failed: {0}")]
    RootSolve(String),

    #[error("brute force would enumerate {needed} schedules, cap is {cap}; use the greedy solver")]
    EnumerationCap { needed: f64, cap: usize },

    #[error("config parse error at line {line}: {msg}")]
    ConfigParse { line: usize, msg: String },

    #[error("unknown config key `{0}`")]
    UnknownKey(String),

    #[error("invalid config: {0}")]
    Validation(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
