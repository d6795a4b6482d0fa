use thiserror::Error;

#[derive(Debug, Error)]
pub enum NnError {
    /// Operand shapes are incompatible with the requested operation.
    #[error("dimension error in {op}: {detail}")]
    Dimension { op: &'static str, detail: String },

    /// A model specification that cannot be built.
    #[error("invalid model spec: {0}")]
    Spec(String),

    /// A non-finite value reached an optimizer or a forward pass.
    #[error("non-finite value in {0}")]
    NonFinite(String),

    /// Misuse of the tape (unknown variable, non-scalar loss, ...).
    #[error("graph error: {0}")]
    Graph(String),
}

pub type Result<T, E = NnError> = std::result::Result<T, E>;

pub(crate) fn dim_err(op: &'static str, detail: impl Into<String>) -> NnError {
    NnError::Dimension {
        op,
        detail: detail.into(),
    }
}
