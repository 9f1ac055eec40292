use thiserror::Error;

/// Every failure the library can report.
///
/// Variant names double as machine-readable reason codes (see [`Error::code`]).
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("graph is disconnected")]
    DisconnectedGraph,
    #[error("graph has {vertices} vertices and {edges} edges; need at least 3 vertices and 2 edges")]
    TooSmall { vertices: usize, edges: usize },
    #[error("edge {u}-{v} appears more than once")]
    DuplicateEdge { u: u64, v: u64 },
    #[error("self-loop at vertex {0}")]
    SelfLoop(u64),
    #[error("start vertex {0} does not appear in any edge")]
    UnknownStartVertex(u64),
    #[error("unknown edge {0}")]
    UnknownEdge(String),
    #[error("graph has {0} edges; at most 64 are supported")]
    TooManyEdges(usize),
    #[error("enumeration exceeded the cap of {cap}")]
    FamilyTooLarge { cap: usize },
    #[error("custom family is not downward closed: {missing:#b} is missing below a member")]
    NotDecreasing { missing: u64 },
    #[error("family member {0:#b} is not a connected edge set touching the start vertex")]
    NotInFamilyUniverse(u64),
    #[error("family is empty")]
    EmptyFamily,
    #[error("family contains the full edge set, so the stopping time is infinite")]
    FamilyNeverExits,
    #[error("reinforcement factor must be positive, got {0}")]
    NonPositiveDelta(f64),
    #[error("edge subset is empty")]
    EmptySubset,
    #[error("edge subset {0:#b} is not connected")]
    DisconnectedSubset(u64),
    #[error("measure is not supported on the directed edges of {0:#b}")]
    SupportViolation(u64),
    #[error("matrix block is not strongly connected")]
    NotStronglyConnected,
    #[error("no convergence after {0} iterations")]
    NoConvergence(usize),
    #[error("horizon {horizon} exceeds trajectory length {steps}")]
    HorizonTooLong { horizon: usize, steps: usize },
    #[error("state space 2b*2^b with b={edges} exceeds the cap b<={cap}")]
    StateSpaceTooLarge { edges: usize, cap: usize },
    #[error("need at least 3 horizons in the fit window, got {0}")]
    InsufficientData(usize),
    #[error("survival is zero at horizon {0} inside the fit window")]
    ZeroSurvivalInWindow(usize),
    #[error("invalid decomposition: {0}")]
    InvalidDecomposition(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

impl Error {
    /// Stable reason code, the variant name.
    pub fn code(&self) -> &'static str {
        match self {
            Error::Parse { .. } => "ParseError",
            Error::DisconnectedGraph => "DisconnectedGraph",
            Error::TooSmall { .. } => "TooSmall",
            Error::DuplicateEdge { .. } => "DuplicateEdge",
            Error::SelfLoop(_) => "SelfLoop",
            Error::UnknownStartVertex(_) => "UnknownStartVertex",
            Error::UnknownEdge(_) => "UnknownEdge",
            Error::TooManyEdges(_) => "TooManyEdges",
            Error::FamilyTooLarge { .. } => "FamilyTooLarge",
            Error::NotDecreasing { .. } => "NotDecreasing",
            Error::NotInFamilyUniverse(_) => "NotInFamilyUniverse",
            Error::EmptyFamily => "EmptyFamily",
            Error::FamilyNeverExits => "FamilyNeverExits",
            Error::NonPositiveDelta(_) => "NonPositiveDelta",
            Error::EmptySubset => "EmptySubset",
            Error::DisconnectedSubset(_) => "DisconnectedSubset",
            Error::SupportViolation(_) => "SupportViolation",
            Error::NotStronglyConnected => "NotStronglyConnected",
            Error::NoConvergence(_) => "NoConvergence",
            Error::HorizonTooLong { .. } => "HorizonTooLong",
            Error::StateSpaceTooLarge { .. } => "StateSpaceTooLarge",
            Error::InsufficientData(_) => "InsufficientData",
            Error::ZeroSurvivalInWindow(_) => "ZeroSurvivalInWindow",
            Error::InvalidDecomposition(_) => "InvalidDecomposition",
            Error::InvalidArgument(_) => "InvalidArgument",
        }
    }

    /// Numerical failures are internal; everything else is a problem with the input.
    pub fn is_internal(&self) -> bool {
        matches!(self, Error::NoConvergence(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_delta(delta: f64) -> Result<()> {
    if delta > 0.0 && delta.is_finite() {
        Ok(())
    } else {
        Err(Error::NonPositiveDelta(delta))
    }
}
