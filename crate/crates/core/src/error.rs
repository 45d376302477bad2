//! Error taxonomy shared by every module.
//!
//! Display output always begins with the variant name so CLI reports and
//! tests can match on it verbatim.

/// All domain errors produced by the library.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("UnknownLabel: {0}")]
    UnknownLabel(String),
    #[error("DimensionMismatch: {0}")]
    DimensionMismatch(String),
    #[error("NotAProjector: {0}")]
    NotAProjector(String),
    #[error("NotUnitary: {0}")]
    NotUnitary(String),
    #[error("KrausIncomplete: {0}")]
    KrausIncomplete(String),
    #[error("BasisNotOrthonormal: {0}")]
    BasisNotOrthonormal(String),
    #[error("InvalidAgentIndex: {0}")]
    InvalidAgentIndex(String),
    #[error("PinnedSettingViolated: {0}")]
    PinnedSettingViolated(String),
    #[error("ValidationFailed: {0}")]
    ValidationFailed(String),
    #[error("MemoryReuseDetected: agents [{}]", fmt_indices(.0))]
    MemoryReuseDetected(Vec<usize>),
    #[error("SettingOutcomeMismatch: {0}")]
    SettingOutcomeMismatch(String),
    #[error("ConditioningOnNullEvent: {0}")]
    ConditioningOnNullEvent(String),
    #[error("PriorSupportInsufficient: {0}")]
    PriorSupportInsufficient(String),
    #[error("SettingMismatch: {0}")]
    SettingMismatch(String),
    #[error("GivensNotEntailed: {0}")]
    GivensNotEntailed(String),
    #[error("IndependenceNotVerified: {0}")]
    IndependenceNotVerified(String),
    #[error("BudgetExceeded: {0}")]
    BudgetExceeded(String),
    #[error("WrongScenario: {0}")]
    WrongScenario(String),
    #[error("SyntaxError: {0}")]
    SyntaxError(String),
    #[error("SchemaError: {0}")]
    SchemaError(String),
    #[error("NumericalIntegrity: {0}")]
    NumericalIntegrity(String),
}

impl Error {
    /// The bare variant name, e.g. `"ConditioningOnNullEvent"`.
    pub fn name(&self) -> &'static str {
        match self {
            Error::UnknownLabel(_) => "UnknownLabel",
            Error::DimensionMismatch(_) => "DimensionMismatch",
            Error::NotAProjector(_) => "NotAProjector",
            Error::NotUnitary(_) => "NotUnitary",
            Error::KrausIncomplete(_) => "KrausIncomplete",
            Error::BasisNotOrthonormal(_) => "BasisNotOrthonormal",
            Error::InvalidAgentIndex(_) => "InvalidAgentIndex",
            Error::PinnedSettingViolated(_) => "PinnedSettingViolated",
            Error::ValidationFailed(_) => "ValidationFailed",
            Error::MemoryReuseDetected(_) => "MemoryReuseDetected",
            Error::SettingOutcomeMismatch(_) => "SettingOutcomeMismatch",
            Error::ConditioningOnNullEvent(_) => "ConditioningOnNullEvent",
            Error::PriorSupportInsufficient(_) => "PriorSupportInsufficient",
            Error::SettingMismatch(_) => "SettingMismatch",
            Error::GivensNotEntailed(_) => "GivensNotEntailed",
            Error::IndependenceNotVerified(_) => "IndependenceNotVerified",
            Error::BudgetExceeded(_) => "BudgetExceeded",
            Error::WrongScenario(_) => "WrongScenario",
            Error::SyntaxError(_) => "SyntaxError",
            Error::SchemaError(_) => "SchemaError",
            Error::NumericalIntegrity(_) => "NumericalIntegrity",
        }
    }
}

fn fmt_indices(ix: &[usize]) -> String {
    ix.iter()
        .map(|i| i.to_string())
        .collect::<Vec<_>>()
        .join(", ")
}

pub type Result<T> = std::result::Result<T, Error>;
