use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("invalid config field `{field}`: {reason}")]
    InvalidConfig { field: &'static str, reason: String },
    #[error("line {line}: unknown config key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: bad value for `{key}`: {reason}")]
    TypeError {
        line: usize,
        key: String,
        reason: String,
    },
    #[error("line {line}: expected `key=value`")]
    Syntax { line: usize },
}

#[derive(Debug, Error, PartialEq)]
pub enum AppearanceError {
    #[error("cosine distance of a zero vector")]
    ZeroVector,
    #[error("empty embedding gallery")]
    EmptyGallery,
    #[error("EMA proxy requested without an EMA state")]
    MissingEmaState,
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("missing embedding")]
    MissingEmbedding,
}

#[derive(Debug, Error, PartialEq)]
pub enum MotionError {
    #[error("innovation covariance is singular")]
    SingularInnovation,
}

#[derive(Debug, Error)]
pub enum AssocError {
    #[error("frame {got} presented after frame {previous}")]
    OutOfOrderFrame { previous: u32, got: u32 },
    #[error("detection {source_index} of frame {frame} has no embedding but appearance is enabled")]
    MissingEmbedding { frame: u32, source_index: u32 },
    #[error("detection {source_index} of frame {frame} does not belong to this frame")]
    WrongFrame { frame: u32, source_index: u32 },
    #[error(transparent)]
    Appearance(#[from] AppearanceError),
    #[error(transparent)]
    Motion(#[from] MotionError),
    #[error(transparent)]
    Config(#[from] ConfigError),
}

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("bad magic: expected {expected:?}")]
    BadMagic { expected: &'static str },
    #[error("unsupported format version {0}")]
    VersionUnsupported(u32),
    #[error("duplicate record for frame {frame}, index {source_index}")]
    DuplicateRecord { frame: u32, source_index: u32 },
    #[error("file truncated")]
    TruncatedFile,
    #[error("missing key `{0}`")]
    MissingKey(String),
    #[error("record for frame {frame}, index {source_index} has dimension {found}, expected {expected}")]
    DimensionMismatch {
        frame: u32,
        source_index: u32,
        expected: usize,
        found: usize,
    },
    #[error(transparent)]
    Config(#[from] ConfigError),
}

impl IoError {
    pub(crate) fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        IoError::Io {
            path: path.display().to_string(),
            source,
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum SynthError {
    #[error("invalid synthetic parameters: {0}")]
    InvalidParams(String),
}

#[derive(Debug, Error, PartialEq)]
pub enum AnalysisError {
    #[error("result rows carry no track ids")]
    MissingTrackIds,
    #[error("detection {source_index} of frame {frame} has no embedding")]
    MissingEmbedding { frame: u32, source_index: u32 },
    #[error("histogram is empty")]
    EmptyHistogram,
    #[error("histograms use different bin edges")]
    BinMismatch,
    #[error(transparent)]
    Appearance(#[from] AppearanceError),
}

/// Any failure raised by the engine.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Appearance(#[from] AppearanceError),
    #[error(transparent)]
    Motion(#[from] MotionError),
    #[error(transparent)]
    Assoc(#[from] AssocError),
    #[error(transparent)]
    Io(#[from] IoError),
    #[error(transparent)]
    Synth(#[from] SynthError),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
}
