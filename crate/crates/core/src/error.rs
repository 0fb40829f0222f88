use thiserror::Error;

/// Errors raised by the library. Each variant maps to a stable upper-case code
/// (see [`Error::code`]) that the CLI and reports surface verbatim.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("receiver {receiver} demands {message} but no connected transmitter carries it")]
    CoverageViolation { receiver: usize, message: String },
    #[error("message {0} has no sender or no demander")]
    OrphanMessage(String),
    #[error("invalid topology: {0}")]
    InvalidTopology(String),
    #[error("invalid channel: {0}")]
    InvalidChannel(String),
    #[error("declared adjacency disagrees with the channel law: {0}")]
    AdjacencyMismatch(String),
    #[error("channel marginal difference {diff:e} for receiver {receiver}, transmitter {transmitter} is too close to the connectivity tolerance")]
    AmbiguousConnectivity { receiver: usize, transmitter: usize, diff: f64 },
    #[error("unknown variable {0}")]
    VariableUnknown(String),
    #[error("variable sets overlap on {0}")]
    OverlappingSets(String),
    #[error("family factorization has a cycle or an unproduced variable: {0}")]
    SpecCycle(String),
    #[error("alphabet mismatch: {0}")]
    AlphabetMismatch(String),
    #[error("negative SNR {0}")]
    NegativeSnr(f64),
    #[error("covariance is not positive semidefinite or violates power budget: {0}")]
    NotPsd(String),
    #[error("all variables dropped")]
    DimensionEmpty,
    #[error("polytope dimension {0} exceeds 5")]
    DimensionTooHigh(usize),
    #[error("variable lists differ: {0}")]
    VariableMismatch(String),
    #[error("direction grids differ")]
    GridMismatch,
    #[error("unknown catalog id {0}")]
    CatalogUnknown(String),
    #[error("channel does not match the required topology: {0}")]
    TopologyMismatch(String),
    #[error("precondition not established: {0}")]
    PreconditionNotEstablished(String),
    #[error("alphabet too large: {0}")]
    AlphabetTooLarge(String),
    #[error("ratio condition violated: {0}")]
    RatioViolation(String),
    #[error("pmf outside the template family: {0}")]
    FamilyViolation(String),
    #[error("unknown template {0}")]
    TemplateUnknown(String),
    #[error("region is empty: {0}")]
    EmptyRegion(String),
    #[error("condition not verified: {0}")]
    ConditionNotVerified(String),
    #[error("right-sided closure violated: {0}")]
    NotRightSidedClosure(String),
    #[error("too many selections: {0}")]
    TooLarge(usize),
    #[error("inconsistent identification: {0}")]
    InconsistentIdentification(String),
    #[error("pmf violates the required factorization: {0}")]
    FactorizationViolation(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("linear program failed: {0}")]
    Lp(String),
    #[error("{context}: {source}")]
    AtPmf {
        context: String,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub fn code(&self) -> &'static str {
        match self {
            Error::CoverageViolation { .. } => "COVERAGE_VIOLATION",
            Error::OrphanMessage(_) => "ORPHAN_MESSAGE",
            Error::InvalidTopology(_) => "INVALID_TOPOLOGY",
            Error::InvalidChannel(_) => "INVALID_CHANNEL",
            Error::AdjacencyMismatch(_) => "ADJACENCY_MISMATCH",
            Error::AmbiguousConnectivity { .. } => "AMBIGUOUS_CONNECTIVITY",
            Error::VariableUnknown(_) => "VARIABLE_UNKNOWN",
            Error::OverlappingSets(_) => "OVERLAPPING_SETS",
            Error::SpecCycle(_) => "SPEC_CYCLE",
            Error::AlphabetMismatch(_) => "ALPHABET_MISMATCH",
            Error::NegativeSnr(_) => "NEGATIVE_SNR",
            Error::NotPsd(_) => "NOT_PSD",
            Error::DimensionEmpty => "DIMENSION_EMPTY",
            Error::DimensionTooHigh(_) => "DIMENSION_TOO_HIGH",
            Error::VariableMismatch(_) => "VARIABLE_MISMATCH",
            Error::GridMismatch => "GRID_MISMATCH",
            Error::CatalogUnknown(_) => "CATALOG_UNKNOWN",
            Error::TopologyMismatch(_) => "TOPOLOGY_MISMATCH",
            Error::PreconditionNotEstablished(_) => "PRECONDITION_NOT_ESTABLISHED",
            Error::AlphabetTooLarge(_) => "ALPHABET_TOO_LARGE",
            Error::RatioViolation(_) => "RATIO_VIOLATION",
            Error::FamilyViolation(_) => "FAMILY_VIOLATION",
            Error::TemplateUnknown(_) => "TEMPLATE_UNKNOWN",
            Error::EmptyRegion(_) => "EMPTY_REGION",
            Error::ConditionNotVerified(_) => "CONDITION_NOT_VERIFIED",
            Error::NotRightSidedClosure(_) => "NOT_RIGHT_SIDED_CLOSURE",
            Error::TooLarge(_) => "TOO_LARGE",
            Error::InconsistentIdentification(_) => "INCONSISTENT_IDENTIFICATION",
            Error::FactorizationViolation(_) => "FACTORIZATION_VIOLATION",
            Error::Parse(_) => "PARSE_ERROR",
            Error::Lp(_) => "LP_FAILURE",
            Error::AtPmf { source, .. } => source.code(),
        }
    }

    pub(crate) fn at(self, context: impl Into<String>) -> Error {
        Error::AtPmf { context: context.into(), source: Box::new(self) }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
