use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("series contains a non-finite sample at index {index}")]
    NonFinite { index: usize },
    #[error("series is constant; min-max normalization is undefined")]
    ConstantSeries,
    #[error("invalid series: {0}")]
    InvalidSeries(String),
    #[error("series too short: need at least {needed} samples, got {got}")]
    TooShort { needed: usize, got: usize },
    #[error("not enough extrema to build upper and lower envelopes")]
    InsufficientExtrema,
    #[error("sifting did not converge within {iterations} iterations")]
    NoConvergence { iterations: usize },
    #[error("frequency grid excludes every observed instantaneous frequency")]
    EmptyBins,
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("symbol {symbol} is outside an alphabet of size {alphabet}")]
    UnknownSymbol { symbol: usize, alphabet: usize },
    #[error("insufficient training data: {0}")]
    InsufficientData(String),
    #[error("training loss became non-finite at epoch {epoch}")]
    DivergedLoss { epoch: usize },
    #[error("insufficient history: {0}")]
    InsufficientHistory(String),
    #[error("{excluded} of {total} ensemble trajectories never reached the failure threshold")]
    AllModelsNonCrossing { excluded: usize, total: usize },
    #[error("no samples to estimate a density from")]
    EmptySamples,
    #[error("no evaluation entries")]
    EmptyEntries,
    #[error("true RUL is zero; relative accuracy is undefined")]
    ZeroTrueRul,
    #[error("bad generator spec: {0}")]
    BadSpec(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}
