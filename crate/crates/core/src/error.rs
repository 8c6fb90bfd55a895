use std::io;
use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Every failure the toolkit can report.
///
/// Variants are grouped by [`ErrorClass`] so the command line front end can
/// map them onto stable exit codes.
#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("duplicate clip id `{0}`")]
    DuplicateId(String),
    #[error("augmented clip `{id}` references missing parent `{parent}`")]
    DanglingParent { id: String, parent: String },
    #[error("augmented clip `{id}` has a label different from its parent `{parent}`")]
    LabelMismatch { id: String, parent: String },
    #[error("manifest has no original clips")]
    EmptyManifest,
    #[error("invalid train fraction {0}; must lie strictly between 0 and 1")]
    InvalidFraction(f64),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimMismatch { expected: usize, found: usize },
    #[error("non-finite value in {0}")]
    NonFinite(String),
    #[error("corrupt header: {0}")]
    CorruptHeader(String),
    #[error("file is truncated")]
    TruncatedFile,

    #[error("unsupported sample rate {0} Hz (minimum is 8000 Hz)")]
    UnsupportedRate(u32),
    #[error("unsupported channel count {0}")]
    UnsupportedChannels(u16),
    #[error("empty input")]
    EmptyInput,
    #[error("input too short: need {needed}, got {got}")]
    TooShort { needed: usize, got: usize },
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("negative value {0} passed to log compression")]
    NegativeInput(f64),
    #[error("frame sequence is empty")]
    EmptySequence,

    #[error("unknown augmentation op `{0}`")]
    UnknownOp(String),
    #[error("parameter `{param}` of `{op}` out of range: {value}")]
    ParamOutOfRange {
        op: String,
        param: String,
        value: f64,
    },
    #[error("clip `{0}` is already augmented")]
    AlreadyAugmented(String),

    #[error("target is not a valid one-hot vector")]
    InvalidOneHot,
    #[error("forward cache does not match the current network parameters")]
    StaleCache,
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("no {modality} embedding for clip `{clip_id}`")]
    MissingEmbedding { clip_id: String, modality: String },
    #[error("evaluation set is empty")]
    EmptyEvalSet,
    #[error("missing artifacts: {0}")]
    MissingArtifacts(String),
    #[error("search space has a dimension with no values: {0}")]
    EmptySpace(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("{path}: {source}")]
    File {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("wav decode: {0}")]
    Wav(#[from] hound::Error),
    #[error("image decode: {0}")]
    Image(#[from] image::ImageError),
}

/// Coarse error categories with a stable numeric code each.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Manifest,
    EmbeddingStore,
    Signal,
    Augmentation,
    Model,
    Experiment,
    Config,
    Io,
}

impl ErrorClass {
    pub fn exit_code(self) -> i32 {
        match self {
            ErrorClass::Manifest => 10,
            ErrorClass::EmbeddingStore => 11,
            ErrorClass::Signal => 12,
            ErrorClass::Augmentation => 13,
            ErrorClass::Model => 14,
            ErrorClass::Experiment => 15,
            ErrorClass::Config => 16,
            ErrorClass::Io => 17,
        }
    }
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        use Error::*;
        match self {
            Parse { .. }
            | DuplicateId(_)
            | DanglingParent { .. }
            | LabelMismatch { .. }
            | EmptyManifest
            | InvalidFraction(_) => ErrorClass::Manifest,
            DimMismatch { .. } | NonFinite(_) | CorruptHeader(_) | TruncatedFile => {
                ErrorClass::EmbeddingStore
            }
            UnsupportedRate(_)
            | UnsupportedChannels(_)
            | EmptyInput
            | TooShort { .. }
            | ShapeMismatch(_)
            | NegativeInput(_)
            | EmptySequence
            | Wav(_)
            | Image(_) => ErrorClass::Signal,
            UnknownOp(_) | ParamOutOfRange { .. } | AlreadyAugmented(_) => {
                ErrorClass::Augmentation
            }
            InvalidOneHot | StaleCache | EmptyDataset => ErrorClass::Model,
            MissingEmbedding { .. } | EmptyEvalSet | MissingArtifacts(_) | EmptySpace(_) => {
                ErrorClass::Experiment
            }
            InvalidConfig(_) => ErrorClass::Config,
            File { .. } | Io(_) => ErrorClass::Io,
        }
    }

    pub fn file(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::File {
            path: path.into(),
            source,
        }
    }
}
