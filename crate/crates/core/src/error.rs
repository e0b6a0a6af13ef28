use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    /// A stage beyond the explicit prefix was requested from a schedule with no tail.
    #[error(
        "stage {requested} is not resolvable: schedule has {available} explicit stages and no tail"
    )]
    Depth { requested: usize, available: usize },

    #[error("invalid schedule: {0}")]
    InvalidSchedule(String),

    #[error("block of length {required} exceeds the budget of {budget} bits")]
    BudgetExceeded { required: String, budget: u64 },

    #[error("value {value} out of range (expected below {bound})")]
    Range { value: String, bound: String },

    #[error("arithmetic overflow: {0}")]
    Overflow(String),

    #[error("invalid telescoping levels: {0}")]
    InvalidLevels(String),

    #[error("telescoping levels: cannot reach the required growth {what}")]
    InsufficientGrowth { what: String },

    #[error("invalid path: {0}")]
    InvalidPath(String),

    #[error("path ends in the spacer column at depth {0}; level indices are undefined")]
    OpenSpacerPath(usize),

    #[error("orbit left the depth-{depth} truncation after {partial:?}")]
    OrbitOverflow { depth: usize, partial: String },

    #[error("variant pick: {0}")]
    InvalidPick(String),

    #[error("construction invariant violated: {0}")]
    Invariant(String),
}

pub type Result<T> = std::result::Result<T, Error>;
