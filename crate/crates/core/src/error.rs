use thiserror::Error;

/// Errors raised while reading DIMACS text.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {kind}")]
pub struct ParseError {
    pub line: usize,
    pub kind: ParseErrorKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseErrorKind {
    #[error("missing `p cnf <n> <m>` header")]
    MissingHeader,
    #[error("malformed header: {0}")]
    MalformedHeader(String),
    #[error("duplicate header")]
    DuplicateHeader,
    #[error("invalid literal `{0}`")]
    InvalidLiteral(String),
    #[error("clause is not terminated by 0")]
    Unterminated,
    #[error("clause has {0} literals, expected 3")]
    Arity(usize),
    #[error("variable {0} repeated in clause")]
    RepeatedVariable(usize),
    #[error("variable {var} out of range 1..={n}")]
    VariableOutOfRange { var: usize, n: usize },
    #[error("header declares {declared} clauses, found {found}")]
    ClauseCountMismatch { declared: usize, found: usize },
}

impl ParseError {
    pub(crate) fn new(line: usize, kind: ParseErrorKind) -> Self {
        ParseError { line, kind }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("variable index {var} out of range for {n} variables")]
    VariableOutOfRange { var: usize, n: usize },
    #[error("clause index {clause} out of range for {m} clauses")]
    ClauseOutOfRange { clause: usize, m: usize },
    #[error("clause {clause} repeats variable {var}")]
    RepeatedVariable { clause: usize, var: usize },
    #[error("assignment length {found} does not match {expected} variables")]
    LengthMismatch { expected: usize, found: usize },
    #[error("at least 3 variables are required, got {0}")]
    TooFewVariables(usize),
    #[error("clause ratio {cr} over {n} variables yields no clauses")]
    NoClauses { n: usize, cr: f64 },
    #[error("power-law parameter must exceed 1, got {0}")]
    InvalidBeta(f64),
    #[error("parents are identical, nothing to recombine")]
    IdenticalParents,
    #[error("level {level} would leave a gap above {levels} levels")]
    LevelGap { level: usize, levels: usize },
    #[error("no stop criterion configured")]
    NoStopCriterion,
    #[error("exhaustive enumeration over {n} variables exceeds the limit of {limit}")]
    ExhaustiveLimit { n: usize, limit: usize },
    #[error("empty input: {0}")]
    EmptyInput(&'static str),
    #[error("line {line}: {reason}")]
    MalformedSolution { line: usize, reason: String },
    #[error("rank correlation undefined: {0}")]
    Correlation(&'static str),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
