use std::io;
use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("phenX id {0} does not fit in seven decimal digits")]
    EncodingOverflow(u32),

    #[error("sequence id {0} is out of the decodable range")]
    DecodingOutOfRange(u64),

    #[error("cannot pack a duration bucket into {0} bits (at most 16 allowed)")]
    PackOverflow(u32),

    #[error("missing required column `{0}`")]
    MissingColumn(&'static str),

    #[error("row {row}: malformed date `{text}` (expected YYYY-MM-DD)")]
    MalformedDate { row: u64, text: String },

    #[error("row {row}: {message}")]
    MalformedRow { row: u64, message: String },

    #[error("more than {limit} distinct phenX codes")]
    PhenxOverflow { limit: u32 },

    #[error("more distinct patients than the numeric id space allows")]
    PatientOverflow,

    #[error("unknown {kind} id {id}")]
    UnknownId { kind: &'static str, id: u64 },

    #[error("label `{0}` cannot be stored in a lookup table (contains tab or newline)")]
    InvalidLabel(String),

    #[error("predicted {predicted} sequences exceed addressable memory; split the dbmart into chunks")]
    CapacityExceeded { predicted: u64 },

    #[error("sequence count overflows a 64-bit integer")]
    ArithmeticOverflow,

    #[error("patient {patient} alone yields {predicted} sequences, above the chunk limit {limit}")]
    PatientExceedsLimit {
        patient: u32,
        predicted: u64,
        limit: u64,
    },

    #[error("cohort of {0} patients is too small to compute correlations")]
    DegenerateCohort(usize),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("malformed file {path}: {message}")]
    MalformedFile { path: PathBuf, message: String },

    #[error("i/o failure on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
