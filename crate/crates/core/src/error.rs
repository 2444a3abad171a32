use crate::bigreal::Digits;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SolverError {
    #[error("precision exhausted: {reason} (ceiling {precision_ceiling} digits, order ceiling {order_ceiling})")]
    PrecisionExhausted {
        reason: String,
        precision_ceiling: Digits,
        order_ceiling: usize,
    },
    #[error("boundary function has no sign change on [{lo}, {hi}]")]
    NoSignChange { lo: String, hi: String },
    #[error("sign change near x = {x} cannot be separated from numerical noise")]
    AmbiguousNode { x: String },
    #[error("level {level} has {nodes} nodes; a level was missed by the energy scan")]
    MissedLevel { level: usize, nodes: usize },
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T, E = SolverError> = std::result::Result<T, E>;
