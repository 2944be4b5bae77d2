use thiserror::Error;

/// Errors produced by simulators, solvers, and analysis operations.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid vertex index {index} for {n} vertices")]
    InvalidVertex { index: usize, n: usize },

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("invalid snapshot schedule: {0}")]
    InvalidSchedule(String),

    #[error("no snapshot recorded at t = {t}")]
    MissingSnapshot { t: f64 },

    #[error("event replay mismatch: {0}")]
    Replay(String),

    #[error("exact convolution pairing requested for {atoms} atoms (cap {cap})")]
    SizeCap { atoms: usize, cap: usize },

    #[error("invalid measure: {0}")]
    InvalidMeasure(String),

    #[error("moments undefined: {0}")]
    UndefinedMoment(String),

    #[error("time step {dt} exceeds stability bound {dt_max}")]
    InvalidTimeStep { dt: f64, dt_max: f64 },

    #[error(
        "instability at t = {t}: value {value} below tolerance {tol} \
         (reduce dt or refine the grid)"
    )]
    Instability { t: f64, value: f64, tol: f64 },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("time grids do not align: {0}")]
    Alignment(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
