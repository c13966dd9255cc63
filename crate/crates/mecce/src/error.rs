use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("matrix must be square, got {rows}x{cols}")]
    NonSquare { rows: usize, cols: usize },
    #[error("non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },
    #[error("cluster order {order} exceeds hard cap {cap}")]
    OrderCap { order: usize, cap: usize },
    #[error("bath size {n} exceeds exact-solver cap {cap}")]
    BathCap { n: usize, cap: usize },
    #[error("empty cluster")]
    EmptyCluster,
    #[error("ill-posed initial state: Tr rho01(0) = 0")]
    IllPosedInitialState,
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("missing subcluster contribution for {0:?}")]
    MissingSubcluster(Vec<usize>),
    #[error("propagation failed for cluster {cluster:?}: {reason}")]
    Propagation { cluster: Vec<usize>, reason: String },
}
