use thiserror::Error;

/// Errors raised anywhere in the simulator.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid dimension {0}: qudits need d >= 2")]
    InvalidDimension(usize),

    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),

    #[error("state is not normalized (norm^2 = {0})")]
    NotNormalized(f64),

    #[error("amplitude vector has length {len}, expected {dim}")]
    AmplitudeLength { len: usize, dim: usize },

    #[error("invalid density matrix: {0}")]
    InvalidDensity(String),

    #[error("invalid mixture weights: {0}")]
    InvalidWeights(String),

    #[error("sample cannot be embedded: {0}")]
    NonEmbeddable(String),

    #[error("feature length {len} exceeds capacity {capacity} of the embedding map")]
    DimensionOverflow { len: usize, capacity: usize },

    #[error("sample {index}: {source}")]
    Sample {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("invalid clustering configuration: {0}")]
    InvalidClusterConfig(String),

    #[error("cannot cluster an empty memory")]
    EmptyMemory,

    #[error("requested {k} clusters from only {x} states")]
    TooManyClusters { k: usize, x: usize },

    #[error("swap-test distance requires a random number generator")]
    MissingRng,

    #[error("lambda {lambda} outside completely-positive range [{min}, 1] for d = {dim}")]
    InvalidChannel { lambda: f64, dim: usize, min: f64 },

    #[error("probability {0} outside [0, 1]")]
    InvalidProbability(f64),

    #[error("no entangled pairs left on the link")]
    ResourceExhausted,

    #[error("fidelity {fidelity} cannot be raised by the recurrence (d = {dim})")]
    Unpurifiable { fidelity: f64, dim: usize },

    #[error("purification target {0} must be below 1")]
    InvalidTarget(f64),

    #[error("purification failed: reached F = {best} with the available pairs, target {target}")]
    PurificationFailed { best: f64, target: f64 },

    #[error("invalid traffic parameters: {0}")]
    InvalidTraffic(String),

    #[error("traffic model produced {0} consecutive non-positive packet sizes")]
    DegenerateModel(usize),

    #[error("invalid experiment configuration: {0}")]
    InvalidConfig(String),

    #[error("d = {dim}, round {round}: {source}")]
    Cell {
        dim: usize,
        round: usize,
        #[source]
        source: Box<Error>,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
