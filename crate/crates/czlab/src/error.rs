use thiserror::Error;

/// Errors surfaced by grid construction, operator assembly, and experiment
/// preconditions.
#[derive(Debug, Error)]
pub enum CzError {
    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("scale k = {requested} unresolvable on this grid; max usable k = {max_usable}")]
    UnresolvableScale { requested: i32, max_usable: i32 },

    #[error("function is not para-accretive: {0}")]
    NotParaAccretive(String),

    #[error("smoothed symbol |P_k b| = {value:.3e} < {floor:.3e} at x = {location:.6}")]
    SmoothedSymbolTooSmall {
        value: f64,
        floor: f64,
        location: f64,
    },

    #[error("rank collapse: effective rank {rank:.1} < {required:.1}; widen the scale range or refine the grid")]
    RankCollapse { rank: f64, required: f64 },

    #[error("branch safety violated at (x, y1, y2) = ({x:.6}, {y1:.6}, {y2:.6}): Re(w) = {re:.3e}")]
    BranchSafety { x: f64, y1: f64, y2: f64, re: f64 },

    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, CzError>;
