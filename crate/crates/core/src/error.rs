use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CtmError {
    #[error("unsupported state count {0} (machine counts overflow 64 bits for n >= 7)")]
    UnsupportedStates(u32),

    #[error("index {index} out of range for ({states},2): there are {count} machines")]
    IndexOutOfRange { states: u32, index: u64, count: u64 },

    #[error("malformed machine: {0}")]
    MalformedMachine(String),

    #[error("max_steps must be at least 1")]
    ZeroStepBound,

    #[error("invalid index range {lo}:{hi} for a space of {count} machines")]
    InvalidRange { lo: u64, hi: u64, count: u64 },

    #[error("invalid shard {shard_id} of {shard_total}")]
    InvalidShard { shard_id: u32, shard_total: u32 },

    #[error("incompatible checkpoints: {0}")]
    IncompatibleCheckpoints(String),

    #[error("overlapping index ranges {0} and {1}")]
    OverlappingRanges(String, String),

    #[error("nothing to merge")]
    EmptyMerge,

    #[error("checkpoint covers {0}, not the full machine space")]
    PartialRange(String),

    #[error("checkpoint is already a dual-blank sweep")]
    AlreadyDual,

    #[error("zero-blank checkpoint must be completed by symmetry before building a distribution")]
    NeedsCompletion,

    #[error("not a binary string: {0:?}")]
    InvalidString(String),

    #[error("string {string:?} not produced in ({states},2)")]
    NotProduced { string: String, states: u32 },

    #[error("no strings of length {0} in the distribution")]
    NoStringsOfLength(usize),

    #[error("the two distributions share no strings")]
    EmptyIntersection,

    #[error("sweeping ({0},2) is a long run; pass --yes-long-run to confirm")]
    LongRunNotConfirmed(u32),

    #[error("invalid comparison: {0}")]
    InvalidComparison(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("corrupted checkpoint {path}: {message}")]
    CorruptCheckpoint { path: PathBuf, message: String },
}

pub type Result<T, E = CtmError> = std::result::Result<T, E>;

impl CtmError {
    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        CtmError::Parse {
            line,
            message: message.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CtmError::Io {
            path: path.into(),
            source,
        }
    }
}
