use alloc::string::String;

/// Errors produced by the analysis core.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("value buffer holds {actual} entries, expected {expected}")]
    ShapeMismatch { expected: usize, actual: usize },
    #[error("non-finite value at flat index {index}")]
    NonFinite { index: usize },
    #[error("at least 2 points are required, got {0}")]
    TooFewPoints(usize),
    #[error("embedding dimension must be at least 1")]
    EmptyDimension,
    #[error("invalid layer reference: index {index} with {count} layers")]
    InvalidLayer { index: usize, count: usize },
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("zero-norm vector at index {index} cannot be used with cosine distance")]
    ZeroVector { index: usize },
    #[error("index {index} out of range for {len} points")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("query and target are the same point ({0})")]
    SameIndex(usize),
    #[error("neighborhood size k={k} must satisfy 1 <= k < {n}")]
    InvalidK { k: usize, n: usize },
    #[error("point count mismatch: {left} vs {right} (are the image orders aligned?)")]
    PointCountMismatch { left: usize, right: usize },
    #[error("series of length {len} is too short, need at least {min}")]
    SeriesTooShort { len: usize, min: usize },
    #[error("sample of {requested} requested from a population of {available}")]
    SampleTooLarge { requested: usize, available: usize },
    #[error("at least {min} trials are required, got {got}")]
    TooFewTrials { got: usize, min: usize },
    #[error("stack has {0} layers, the three-point anchor rule needs at least 3")]
    TooFewLayers(usize),
    #[error("invalid image raster: {0}")]
    InvalidRaster(String),
    #[error("image of {width}x{height} is smaller than the 3x3 filter support")]
    ImageTooSmall { width: usize, height: usize },
    #[error("operation requires an RGB image, got {channels} channel(s)")]
    NotColor { channels: usize },
    #[error("invalid Canny parameters: {0}")]
    InvalidCannyParams(String),
    #[error("{have} values cannot form three disjoint groups of {group_size}")]
    TooFewValues { have: usize, group_size: usize },
    #[error("jaccard index is undefined for two empty sets")]
    EmptyLabelSets,
    #[error("no labels for image `{0}`")]
    MissingLabels(String),
    #[error("training split contains a single class")]
    SingleClass,
    #[error("invalid hyperparameter: {0}")]
    InvalidHyperparams(String),
    #[error("empty input: {0}")]
    EmptyInput(String),
    #[error("{0}")]
    InvalidArgument(String),
}

pub type Result<T, E = Error> = core::result::Result<T, E>;
