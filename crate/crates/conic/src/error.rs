use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProgramError {
    #[error("variable index {index} out of range in {context}")]
    UnknownVariable { index: usize, context: String },
    #[error("non-finite coefficient in {0}")]
    NonFinite(String),
    #[error("malformed variable block `{0}`")]
    BadBlock(String),
    #[error("constraint `{0}` uses the free cone")]
    FreeConstraint(String),
    #[error("constraint `{name}` has {found} rows, cone needs {expected}")]
    ConstraintSize {
        name: String,
        expected: usize,
        found: usize,
    },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolveError {
    #[error("invalid program: {0}")]
    Program(#[from] ProgramError),
    #[error("numerical breakdown: {0}")]
    NumericalBreakdown(String),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SdpaError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("program not representable in SDPA format: {0}")]
    Unsupported(String),
}

impl SdpaError {
    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        SdpaError::Parse {
            line,
            message: message.into(),
        }
    }
}
