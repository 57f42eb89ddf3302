use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid network: {0}")]
    InvalidNetwork(String),

    #[error("schedule inconsistent on line {line}: {reason}")]
    ScheduleInconsistent { line: String, reason: String },

    #[error("invalid route {route} of OD {od}: {reason}")]
    InvalidRoute {
        od: String,
        route: String,
        reason: String,
    },

    #[error("no path for OD {od} route {route} starting on run {run}")]
    NoPath { od: String, route: String, run: usize },

    #[error("invalid flow distribution: {0}")]
    InvalidFlow(String),

    #[error("negative waiting time {wait} s (arrival {arrival}, departure {departure}, in-vehicle {in_vehicle})")]
    NegativeWait {
        wait: i64,
        arrival: i64,
        departure: i64,
        in_vehicle: i64,
    },

    #[error("degenerate option costs for OD {od}: mean cost {mean} is not positive")]
    DegenerateCost { od: String, mean: f64 },

    #[error("relative gap undefined: OD {od} has minimum cost {min_cost}")]
    UndefinedSrg { od: String, min_cost: f64 },

    #[error("instance too large for enumeration: {count} distributions exceed the limit of {limit}")]
    TooLarge { count: u128, limit: u128 },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("internal error: {0}")]
    Internal(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
