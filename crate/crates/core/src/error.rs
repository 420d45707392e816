use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("expected {expected} input bits, got {got}")]
    InputArity { expected: usize, got: usize },
    #[error("netlist contains a cycle through net `{net}`")]
    CyclicNetlist { net: String },
    #[error("net `{0}` is defined more than once")]
    DuplicateNet(String),
    #[error("net `{0}` is referenced but never defined")]
    UndefinedNet(String),
    #[error("gate {kind} driving `{net}` expects {expected} inputs, got {got}")]
    GateArity {
        kind: String,
        net: String,
        expected: usize,
        got: usize,
    },
    #[error("unknown gate kind `{0}`")]
    UnknownGateKind(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("invalid arity: {0}")]
    InvalidArity(String),
    #[error("invalid fault pattern: {0}")]
    InvalidPattern(String),
    #[error("{0}")]
    TooLarge(String),
    #[error("malformed netlist JSON: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
