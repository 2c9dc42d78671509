use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TensorError {
    #[error("data length {len} does not match shape product {expected}")]
    DataLength { len: usize, expected: usize },

    #[error("shape and axis lists differ in length ({shape} vs {axes})")]
    RankMismatch { shape: usize, axes: usize },

    #[error("zero-length axis '{0}'")]
    ZeroLengthAxis(String),

    #[error("duplicate axis label '{0}'")]
    DuplicateAxis(String),

    #[error("unknown axis label '{0}'")]
    UnknownAxis(String),

    #[error("axis length mismatch on '{a}'/'{b}': {dim_a} vs {dim_b}")]
    AxisLengthMismatch {
        a: String,
        b: String,
        dim_a: usize,
        dim_b: usize,
    },

    #[error("axis groups do not partition the tensor axes")]
    NotAPartition,

    #[error("split record does not match tensor: {0}")]
    SplitMismatch(String),

    #[error("non-finite entry produced by {0}")]
    NonFinite(&'static str),

    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },

    #[error("{0} failed to converge")]
    NoConvergence(&'static str),

    #[error("index {index} out of range for axis '{axis}' of length {len}")]
    IndexOutOfRange {
        axis: String,
        index: usize,
        len: usize,
    },

    #[error("snapshot format error: {0}")]
    Snapshot(String),
}

pub type Result<T> = std::result::Result<T, TensorError>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ZmtError {
    #[error(transparent)]
    Tensor(#[from] TensorError),

    #[error("invalid network: {0}")]
    InvalidNetwork(String),

    #[error("'{0}' is not a bond of the network")]
    NotABond(String),

    #[error("cutting bond '{0}' disconnects its two tensors")]
    InvalidCut(String),

    #[error("kappa = {kappa} exceeds the number of modes {max}")]
    KappaTooLarge { kappa: usize, max: usize },

    #[error("candidate has no real eigenvalue")]
    NoRealEigenvalue,

    #[error("largest real eigenvalue is degenerate (|sum L R| = {0:.3e})")]
    DegenerateEigenvalue(f64),

    #[error("no basis mode yields a usable real eigenvalue")]
    NoUsableMode,

    #[error("bond dimension {0} cannot be reduced")]
    BondTooSmall(usize),

    #[error("full state of dimension {0} exceeds the desk-scale guard")]
    SizeGuard(usize),

    #[error("gauge matrix is singular or ill-conditioned (cond = {0:.3e})")]
    SingularGauge(f64),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

pub type ZmtResult<T> = std::result::Result<T, ZmtError>;
