use thiserror::Error;

/// Errors produced anywhere in the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid shape: {0}")]
    InvalidShape(String),

    #[error("dimension product overflows the platform index type")]
    DimensionOverflow,

    #[error("too large to materialize: {entries} entries exceeds the cap of {cap}")]
    TooLarge { entries: usize, cap: usize },

    #[error("column count mismatch: expected {expected}, found {found}")]
    ColumnMismatch { expected: usize, found: usize },

    #[error("index {index} out of range for bound {bound}")]
    IndexOutOfRange { index: usize, bound: usize },

    #[error("length mismatch: expected {expected}, found {found}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("length {len} is not a power of two; zero-pad to {padded} first (see pad_pow2)")]
    NotPowerOfTwo { len: usize, padded: usize },

    #[error("invalid sampling distribution: {0}")]
    InvalidDistribution(String),

    #[error("cannot draw {requested} distinct rows from a support of {available}")]
    TooManySamples { requested: usize, available: usize },

    #[error("rank deficient: {0}")]
    RankDeficient(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("consistent system: OPT = 0, so residual ratios are undefined")]
    ConsistentSystem,

    #[error("zero distance between inputs; the relative distortion is undefined")]
    ZeroDistance,

    #[error("bad IDX magic bytes {0:02x?}")]
    BadMagic([u8; 4]),

    #[error("unsupported IDX element type code 0x{0:02x}")]
    UnsupportedType(u8),

    #[error("truncated IDX file: expected {expected} bytes, found {found}")]
    Truncated { expected: usize, found: usize },

    #[error("IDX file has {0} trailing bytes after the payload")]
    TrailingBytes(usize),

    #[error("only {found} images of digit {digit} available, {requested} requested")]
    InsufficientImages {
        digit: u8,
        found: usize,
        requested: usize,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
