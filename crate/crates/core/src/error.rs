use std::path::PathBuf;

use thiserror::Error;

/// Errors raised anywhere in the railtex pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: file not found")]
    FileMissing { path: PathBuf },

    #[error("{path}: unsupported image format")]
    UnsupportedFormat { path: PathBuf },

    #[error("{path}: corrupt image data: {reason}")]
    CorruptData { path: PathBuf, reason: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("invalid image: {0}")]
    InvalidImage(String),

    #[error("requested dimensions {width}x{height} contain a zero")]
    ZeroDimension { width: usize, height: usize },

    #[error("image has a single gray level; no threshold separates it")]
    DegenerateImage,

    #[error("mask has no foreground pixels")]
    EmptyMask,

    #[error("rectangle {x},{y} {w}x{h} does not fit inside a {width}x{height} image")]
    RectOutOfBounds {
        x: usize,
        y: usize,
        w: usize,
        h: usize,
        width: usize,
        height: usize,
    },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: String, actual: String },

    #[error("window size {0} must be odd")]
    EvenWindow(usize),

    #[error("window size {window} exceeds the smaller image side {side}")]
    WindowTooLarge { window: usize, side: usize },

    #[error("invalid kernel: {0}")]
    InvalidKernel(String),

    #[error("invalid tile grid {0}x{1}")]
    InvalidTileGrid(usize, usize),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("gray level count {0} outside 2..=256")]
    InvalidLevelCount(usize),

    #[error("co-occurrence offset is (0, 0)")]
    ZeroOffset,

    #[error("offset ({dx}, {dy}) leaves no pixel pairs inside a {width}x{height} raster")]
    OffsetExceedsImage {
        dx: i64,
        dy: i64,
        width: usize,
        height: usize,
    },

    #[error("unsupported angle {0} (expected 0, 45, 90 or 135)")]
    UnsupportedAngle(u32),

    #[error("co-occurrence probabilities sum to {0}, expected 1")]
    UnnormalizedGlcm(f64),

    #[error("co-occurrence matrix is empty")]
    EmptyGlcm,

    #[error("correlation requires a symmetric co-occurrence matrix")]
    AsymmetricGlcm,

    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },

    #[error("requested {k} components but at most {max} are available")]
    KTooLarge { k: usize, max: usize },

    #[error("input contains non-finite values")]
    NonFiniteInput,

    #[error("eigen-decomposition did not converge after {0} sweeps")]
    ConvergenceFailure(usize),

    #[error("training set is empty")]
    EmptyTrainingSet,

    #[error("k = {k} exceeds the {n} training rows")]
    KExceedsN { k: usize, n: usize },

    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),

    #[error("label {label} out of range for {classes} classes")]
    LabelOutOfRange { label: usize, classes: usize },

    #[error("confusion matrix holds no samples")]
    EmptyCounts,

    #[error("dataset root {0} does not exist")]
    MissingRoot(PathBuf),

    #[error("class directory {0} holds no supported images")]
    EmptyClass(PathBuf),

    #[error("class '{class}' has {count} images, need at least 2 to split")]
    ClassTooSmall { class: String, count: usize },

    #[error("{} image(s) could not be read:\n{}", .0.len(), .0.join("\n"))]
    UnreadableImages(Vec<String>),

    #[error("config {path}:{line}: {message}")]
    Config {
        path: String,
        line: usize,
        message: String,
    },

    #[error("model file {path}: model-version-mismatch: {reason}")]
    ModelVersion { path: PathBuf, reason: String },

    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error("{path}: {source}")]
    InFile {
        path: PathBuf,
        #[source]
        source: Box<Error>,
    },

    #[error("{0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Wraps an error with the name of the pipeline stage that raised it.
    pub fn at_stage(self, stage: &'static str) -> Error {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }

    pub fn in_file(self, path: impl Into<PathBuf>) -> Error {
        Error::InFile {
            path: path.into(),
            source: Box::new(self),
        }
    }

    /// Strips any stage or file wrappers.
    pub fn root(&self) -> &Error {
        match self {
            Error::Stage { source, .. } | Error::InFile { source, .. } => source.root(),
            other => other,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) trait StageExt<T> {
    fn stage(self, stage: &'static str) -> Result<T>;
}

impl<T> StageExt<T> for Result<T> {
    fn stage(self, stage: &'static str) -> Result<T> {
        self.map_err(|e| e.at_stage(stage))
    }
}
