use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("invalid partition: {0}")]
    InvalidPartition(String),

    #[error("p must be >= 2 and prime, got {0}")]
    NotPrime(u64),

    #[error("parameter out of range: {0}")]
    OutOfRange(String),

    #[error("size {requested} exceeds the enumeration cap {cap}")]
    EnumerationCap { requested: u32, cap: u32 },

    #[error("partition has {parts} parts but the measure allows at most {r}")]
    TooManyParts { parts: usize, r: u32 },

    #[error("kernel K({a},{b}) is only defined for b <= a")]
    KernelSupport { a: u32, b: u32 },

    #[error("sampled partition exceeded {0} columns")]
    ColumnCap(usize),

    #[error("matrix is singular (graph is disconnected)")]
    SingularMatrix,

    #[error("matrix must be square, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("truncation depth cap of {0} factors reached before meeting the tolerance")]
    DepthCap(u64),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
