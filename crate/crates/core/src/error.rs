use std::io;
use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    #[error("unsupported magic {0:?}, expected P5")]
    UnsupportedMagic(String),

    #[error("malformed header: {0}")]
    MalformedHeader(String),

    #[error("truncated payload: expected {expected} bytes, found {found}")]
    TruncatedPayload { expected: usize, found: usize },

    #[error("invalid raster: {0}")]
    InvalidRaster(String),

    #[error("rect {x},{y} {w}x{h} is outside the {width}x{height} raster")]
    RectOutOfBounds {
        x: usize,
        y: usize,
        w: usize,
        h: usize,
        width: usize,
        height: usize,
    },

    #[error("circle of radius {radius} around ({cx},{cy}) leaves the raster")]
    CircleOutOfBounds { cx: usize, cy: usize, radius: u32 },

    #[error("raster {width}x{height} is too small: {reason}")]
    RasterTooSmall {
        width: usize,
        height: usize,
        reason: String,
    },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid descriptor config: {0}")]
    InvalidConfig(String),

    #[error("degenerate distribution: {0}")]
    DegenerateDistribution(String),

    #[error("window at ({cx},{cy}) of side {window} touches the border band")]
    WindowTouchesBorder { cx: usize, cy: usize, window: usize },

    #[error("histogram error: {0}")]
    Histogram(String),

    #[error("layout mismatch: {0}")]
    LayoutMismatch(String),

    #[error("training error: {0}")]
    Training(String),

    #[error("unsupported model format_version {found}, this build reads {supported}")]
    VersionMismatch { found: u32, supported: u32 },

    #[error("corrupt model file: {0}")]
    CorruptModel(String),

    #[error("empty confusion matrix")]
    EmptyMatrix,

    #[error("kappa undefined: chance agreement is 1")]
    UndefinedKappa,

    #[error("invalid recipe: {0}")]
    Recipe(String),

    #[error("invalid benchmark plan: {0}")]
    Plan(String),

    #[error("fast path diverges from naive at pixel ({x},{y}): naive {naive}, fast {fast}")]
    Equivalence {
        x: usize,
        y: usize,
        naive: u8,
        fast: u8,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
