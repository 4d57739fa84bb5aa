use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("weights {0} and {1} differ; dominance is undefined")]
    IncomparableWeights(u64, u64),
    #[error("invalid partition {0:?}: parts must be weakly decreasing")]
    NotAPartition(Vec<u32>),
    #[error("partition {parts:?} has more than {vars} nonzero parts")]
    TooManyParts { parts: Vec<u32>, vars: usize },
    #[error("invalid strand: {0}")]
    InvalidStrand(String),
    #[error("invalid arguments: {0}")]
    InvalidArgument(String),
    #[error("{0} is not a prime below 2^31")]
    BadPrime(u64),
    #[error("tolerance {0} must be positive and finite")]
    BadTolerance(f64),
    #[error("elimination needs {needed} bytes, limit is {limit}")]
    MemoryLimit { needed: u64, limit: u64 },
    #[error("ranks disagree across primes: {0:?}")]
    RankDisagreement(Vec<(u64, usize)>),
    #[error("corrupt matrix file {path}: {reason}")]
    CorruptMatrix { path: PathBuf, reason: String },
    #[error("integrity violation: {0}")]
    Integrity(String),
    #[error("vanishing table failed validation: {0}")]
    VanishingTable(String),
    #[error("missing data: {0}")]
    Missing(String),
    #[error("parse error in {source_name} line {line}: {reason}")]
    Parse {
        source_name: String,
        line: usize,
        reason: String,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
