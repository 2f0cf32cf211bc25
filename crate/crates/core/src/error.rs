use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("input x{0} appears in more than one leaf")]
    DuplicateLeaf(usize),

    #[error("input x{0} is not used by any leaf (inputs must be numbered 1..m without gaps)")]
    MissingLeaf(usize),

    #[error("internal node `{0}` has no children")]
    EmptyChildren(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("parse error at byte {pos}: {msg}")]
    Parse { pos: usize, msg: String },

    #[error("expected {expected} inputs, got {got}")]
    ArityMismatch { expected: usize, got: usize },

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("a sample pool must contain at least one finite value")]
    EmptySample,

    #[error("{what}: {count} terms exceeds the cap of {cap}; {hint}")]
    CapExceeded {
        what: &'static str,
        count: u128,
        cap: u128,
        hint: &'static str,
    },

    #[error("budget {budget} cannot cover the minimum cost {required} (every node needs n >= 1)")]
    Infeasible { required: u64, budget: u64 },

    #[error("block {block} has {size} observations but needs at least {needed} distinct draws")]
    PoolTooSmall {
        block: usize,
        size: usize,
        needed: usize,
    },

    #[error("tied value {0} in pooled samples; rank protocols need distinct values")]
    TiedValues(f64),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("unknown scenario `{name}`; valid names: {valid}")]
    UnknownScenario { name: String, valid: String },

    #[error("arithmetic overflow in {0}")]
    Overflow(&'static str),

    #[error("config: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;
