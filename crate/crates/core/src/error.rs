use thiserror::Error;

/// Errors surfaced by jet arithmetic, the expression language, and the
/// geometric layers built on top of them.
#[derive(Debug, Error)]
pub enum Error {
    #[error("variable index {index} out of range for {vars} variables")]
    VariableOutOfRange { index: usize, vars: usize },

    #[error("jet shape mismatch: {vars_left} vars order {order_left} vs {vars_right} vars order {order_right}")]
    JetShapeMismatch {
        vars_left: usize,
        order_left: usize,
        vars_right: usize,
        order_right: usize,
    },

    #[error("division by a jet with zero constant term")]
    DivisionByZero,

    #[error("log of a jet with non-positive constant term {value}")]
    LogNonPositive { value: f64 },

    #[error("singular jet matrix: pivot magnitude {pivot:.3e} below tolerance in column {column}")]
    SingularMatrix { column: usize, pivot: f64 },

    #[error("degenerate endomorphism at sampled point: |det| = {magnitude:.3e}")]
    DegenerateEndomorphism { magnitude: f64 },

    #[error("parse error at byte {offset}: {message}")]
    Parse { offset: usize, message: String },

    #[error("unbound identifier `{name}` at byte {offset}")]
    UnboundIdentifier { name: String, offset: usize },

    #[error("non-integer exponent at byte {offset}")]
    NonIntegerExponent { offset: usize },

    #[error("evaluation error at byte {offset}: {source}")]
    EvalAt {
        offset: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("point has {got} coordinates, expected {expected}")]
    PointDimension { got: usize, expected: usize },

    #[error("objects live on different algebroids: `{left}` vs `{right}`")]
    AlgebroidMismatch { left: String, right: String },

    #[error("degree mismatch: expected {expected}, got {got}")]
    DegreeMismatch { expected: usize, got: usize },

    #[error("flow evaluation failed at t = {time}: {source}")]
    FlowAt {
        time: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("{0}")]
    Invalid(String),

    #[error("unknown system: {0}")]
    UnknownSystem(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Wraps an evaluation failure with the source location of the offending
    /// syntax node.
    pub fn at_offset(self, offset: usize) -> Error {
        match self {
            Error::EvalAt { .. } => self,
            other => Error::EvalAt {
                offset,
                source: Box::new(other),
            },
        }
    }
}
