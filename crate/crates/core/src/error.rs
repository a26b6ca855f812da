use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("unsupported dimension {0} (supported: 1..=8)")]
    UnsupportedDimension(usize),

    #[error("matrix is not Hermitian (max deviation {deviation:.3e})")]
    NotHermitian { deviation: f64 },

    #[error("direction is not a unit vector (norm {norm})")]
    NonUnitVector { norm: f64 },

    #[error("imaginary residue {residue:.3e} in expectation value; operator is not Hermitian")]
    ImaginaryResidue { residue: f64 },

    #[error("observables are incompatible (commutator norm {norm:.3e})")]
    Incompatible { norm: f64 },

    #[error("observable is not dichotomic: eigenvalue {eigenvalue} is not +1 or -1")]
    NotDichotomic { eigenvalue: f64 },

    #[error("invalid quantum state: {0}")]
    InvalidState(String),

    #[error("{name} = {value} is outside {range}")]
    OutOfRange {
        name: &'static str,
        value: f64,
        range: &'static str,
    },

    #[error("invalid behavior: {0}")]
    InvalidBehavior(String),

    #[error("invalid hidden-variable model: {0}")]
    InvalidModel(String),

    #[error("correlation coefficient undefined in context ({x},{y}): zero variance ({party})")]
    UndefinedCorrelation { x: usize, y: usize, party: char },

    #[error("arcsin criterion not applicable: marginal {marginal:.3e} is biased")]
    BiasedMarginals { marginal: f64 },

    #[error("behavior is signalling (residual {residual:.3e})")]
    Signalling { residual: f64 },

    #[error("internal consistency failure: {0}")]
    Inconsistent(String),

    #[error("malformed document at `{field}`: {message}")]
    Format { field: String, message: String },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn format(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Format {
            field: field.into(),
            message: message.into(),
        }
    }
}
