use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("malformed NIfTI header: {0}")]
    MalformedHeader(String),
    #[error("unsupported NIfTI datatype code {0}")]
    UnsupportedDatatype(i16),
    #[error("dimension mismatch: expected {expected}, found {actual}")]
    DimensionMismatch { expected: String, actual: String },
    #[error("index {index} out of range for axis {axis} of length {len}")]
    IndexOutOfRange {
        axis: usize,
        index: usize,
        len: usize,
    },
    #[error("unsupported format: {0}")]
    UnsupportedFormat(String),
    #[error("decode error: {0}")]
    Decode(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("shape does not fit inside a {width}x{height} image")]
    ShapeOutOfBounds { width: usize, height: usize },
    #[error("gaussian sigma must be positive, got {0}")]
    NonPositiveSigma(f64),
    #[error("region of interest is empty")]
    EmptyRoi,
    #[error("invalid k={k} for {distinct} distinct points")]
    InvalidK { k: usize, distinct: usize },
    #[error("no centroid passed validation")]
    NoValidSeeds,
    #[error("seed ({x}, {y}) lies outside the image")]
    SeedOutOfBounds { x: usize, y: usize },
    #[error("seed set is empty")]
    EmptySeedSet,
    #[error("dilation size {dilate} is smaller than erosion size {erode}")]
    KernelOrderViolation { dilate: usize, erode: usize },
    #[error("parameter grid is empty")]
    EmptyGrid,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("slice {index}: {source}")]
    Slice {
        index: usize,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn dims(expected: impl ToString, actual: impl ToString) -> Self {
        Error::DimensionMismatch {
            expected: expected.to_string(),
            actual: actual.to_string(),
        }
    }

    /// Strips any [`Error::Slice`] wrappers.
    pub fn root(&self) -> &Error {
        match self {
            Error::Slice { source, .. } => source.root(),
            other => other,
        }
    }
}
