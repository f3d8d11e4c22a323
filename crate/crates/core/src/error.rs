use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("derivative order {order} exceeds the configured maximum {max}")]
    MaxDerivativeExceeded { order: u32, max: u32 },

    #[error("coincident-point delta product in a classical term: {0}")]
    CoincidentDelta(String),

    #[error("integration variable with an empty integrand: {0}")]
    EmptyIntegral(String),

    #[error("localization of delta factors did not terminate")]
    LocalizationDiverged,

    #[error("bracket left the symbol class: {0}")]
    ClosureViolation(String),

    #[error("syntax error at {line}:{column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("undeclared function `{name}` at {line}:{column}")]
    UndeclaredFunction {
        name: String,
        line: usize,
        column: usize,
    },

    #[error("multi-index of dimension {found} used in a dimension-{expected} session at {line}:{column}")]
    DimensionMismatch {
        expected: usize,
        found: usize,
        line: usize,
        column: usize,
    },

    #[error("expected a {expected} expression")]
    WrongMode { expected: &'static str },

    #[error("unbound name `{0}` in numeric binding")]
    UnboundName(String),

    #[error("free variable {0} has no lattice position")]
    UnboundVariable(String),

    #[error("cannot evaluate formal constant {0} numerically")]
    FormalConstant(String),

    #[error("lattice oracle supports dimension 1 only, found {0}")]
    UnsupportedDimension(usize),

    #[error("invalid lattice configuration: {0}")]
    InvalidLattice(String),

    #[error("leading h-order carries a divergent constant: {0}")]
    DivergentLeadingTerm(String),

    #[error("caustic reached at t = {t}: det D = {det}")]
    Caustic { t: f64, det: f64 },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("Hamilton-Jacobi residual {0} exceeds tolerance")]
    HamiltonJacobi(f64),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
