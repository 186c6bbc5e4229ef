use crate::float_codec::Precision;

/// Errors produced anywhere in the commitment pipeline.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("{field} = {value} is out of range for {precision}")]
    FieldOutOfRange {
        field: &'static str,
        value: u32,
        precision: Precision,
    },

    #[error("expected {expected} input, got {actual}")]
    WrongPrecision {
        expected: Precision,
        actual: Precision,
    },

    #[error("cannot quantize {value} to {precision}: {reason}")]
    Unrepresentable {
        value: f64,
        precision: Precision,
        reason: &'static str,
    },

    #[error("activation chunk shape {token_count}x{hidden_dim} does not match {len} values")]
    ShapeMismatch {
        token_count: usize,
        hidden_dim: usize,
        len: usize,
    },

    #[error("pattern {pattern:#x} at flat index {index} does not fit in {precision}")]
    PatternTooWide {
        index: usize,
        pattern: u32,
        precision: Precision,
    },

    #[error("non-finite activation at flat index {index}")]
    NonFinite { index: usize },

    #[error("k = {k} is invalid for a chunk of {len} elements")]
    InvalidK { k: usize, len: usize },

    #[error("sketches have different k ({left} vs {right})")]
    KMismatch { left: usize, right: usize },

    #[error("No injective modulus found!")]
    NoInjectiveModulus,

    #[error("{a} has no inverse modulo {modulus}")]
    NotInvertible { a: u64, modulus: u64 },

    #[error("invalid modulus {0}")]
    InvalidModulus(u64),

    #[error("duplicate interpolation point x = {0}")]
    DuplicatePoint(u64),

    #[error("interpolation needs equal, non-empty x and y lists (got {xs} and {ys})")]
    InterpolationArity { xs: usize, ys: usize },

    #[error("coefficient {coefficient} at degree {degree} is not below modulus {modulus}")]
    CoefficientOutOfRange {
        degree: usize,
        coefficient: u64,
        modulus: u64,
    },

    #[error("malformed proof of {len} bytes")]
    MalformedProof { len: usize },

    #[error("invalid threshold: {0}")]
    InvalidThreshold(&'static str),

    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error("chunk {index}: {source}")]
    Chunk {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("commitment holds {proofs} decode proofs but {chunks} decode chunks were supplied")]
    ProofCountMismatch { proofs: usize, chunks: usize },

    #[error("malformed {format} file: {reason}")]
    Format {
        format: &'static str,
        reason: String,
    },

    #[error("invalid perturbation parameter: {0}")]
    InvalidParameter(String),

    #[error("io: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn in_chunk(self, index: usize) -> Self {
        Error::Chunk {
            index,
            source: Box::new(self),
        }
    }

    pub(crate) fn format(format: &'static str, reason: impl Into<String>) -> Self {
        Error::Format {
            format,
            reason: reason.into(),
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Io(err.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
