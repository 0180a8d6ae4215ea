use std::fmt;

/// Position of a diagnostic inside netlist text (1-based).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Span {
    pub line: usize,
    pub column: usize,
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.column)
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    /// A quantity diverges in an ideal limit (zero output conductance,
    /// vanishing third-order coefficient, ...).
    #[error("{quantity} is unbounded: {reason}")]
    Unbounded {
        quantity: &'static str,
        reason: String,
    },

    #[error("syntax error at {span}: {message} (expected {})", .expected.join(" | "))]
    Syntax {
        span: Span,
        message: String,
        expected: Vec<&'static str>,
    },

    #[error("undefined model '{model}' referenced at {span}")]
    UndefinedModel { model: String, span: Span },

    #[error("topology error: {0}")]
    Topology(String),

    #[error("no convergence after {iterations} Newton iterations ({source_steps} source steps); worst residual {residual:.3e} A at node '{node}'")]
    Convergence {
        iterations: usize,
        source_steps: usize,
        residual: f64,
        node: String,
    },

    #[error("singular system: node '{0}' is floating")]
    Singular(String),

    #[error("sweep failed at input {input} V: {cause}")]
    Sweep { input: f64, cause: Box<Error> },

    #[error("fit rejected: {0}")]
    Fit(String),

    #[error("bias matching failed: {0}")]
    BiasMatch(String),

    #[error("io error: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn unbounded(quantity: &'static str, reason: impl Into<String>) -> Self {
        Error::Unbounded {
            quantity,
            reason: reason.into(),
        }
    }

    /// Source position for parse-level errors.
    pub fn span(&self) -> Option<Span> {
        match self {
            Error::Syntax { span, .. } | Error::UndefinedModel { span, .. } => Some(*span),
            _ => None,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
