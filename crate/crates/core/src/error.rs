use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {field}: {reason}")]
    InvalidConfig { field: &'static str, reason: String },

    #[error("displacement {0:?} is not a long displacement (sup-norm must be at least 2)")]
    NotLongDisplacement(Vec<i64>),

    #[error("box of side {n} in dimension {d} does not fit in the address space")]
    BoxTooLarge { d: usize, n: u64 },

    #[error("vertex {0} lies outside the region or the box")]
    VertexOutside(usize),

    #[error("target is unreached from the source")]
    Unreached,

    #[error("region is disconnected")]
    Disconnected,

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("degenerate fit: {0}")]
    DegenerateFit(&'static str),

    #[error("set {0:#b} is not a member of the family")]
    NotAMember(u32),

    #[error("family is not a Sperner family")]
    NotSperner,

    #[error("cap exceeded: {what} = {value} (limit {limit})")]
    CapExceeded {
        what: &'static str,
        value: usize,
        limit: usize,
    },

    #[error("ladder condition violated: {0}")]
    LadderCondition(String),

    #[error("regions overlap or touch; the crossing integral diverges")]
    OverlappingRegions,

    #[error("tiling mismatch: {0}")]
    Tiling(String),

    #[error("quadrature did not reach the requested tolerance ({0:e})")]
    Quadrature(f64),

    #[error("malformed input at line {line}: {reason}")]
    Parse { line: usize, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(field: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidConfig {
        field,
        reason: reason.into(),
    }
}
