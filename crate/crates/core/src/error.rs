use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },

    #[error("unsupported bit depth: maxval {0} (only 8-bit samples are supported)")]
    UnsupportedDepth(u32),

    #[error("invalid raster: {0}")]
    InvalidRaster(String),

    #[error("tile grid: {0}")]
    TileGrid(String),

    #[error("expected {expected} channels, got {actual}")]
    ChannelCount { expected: usize, actual: usize },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("invalid box: {0}")]
    InvalidBox(String),

    #[error("{path}:{line}: unknown class label {label:?}")]
    UnknownClass { path: PathBuf, line: usize, label: String },

    #[error("{path}: {message}")]
    Csv { path: PathBuf, message: String },

    #[error("empty infected set")]
    EmptyInfectedSet,

    #[error("degenerate extent: {0}")]
    DegenerateExtent(String),

    #[error("point ({x}, {y}) lies outside the plot extent")]
    OutsideExtent { x: f64, y: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("ellipse fit needs at least 3 points, got {0}")]
    TooFewPoints(usize),

    #[error("ellipse fit: points are collinear")]
    Collinear,

    #[error("empty input: {0}")]
    Empty(String),

    #[error("infeasible scene: {0}")]
    Infeasible(String),

    #[error("json: {0}")]
    Json(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn format(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        Error::Format {
            path: path.into(),
            message: message.into(),
        }
    }
}
