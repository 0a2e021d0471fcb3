use std::fmt;
use std::path::Path;

#[derive(Debug)]
pub enum CliError {
    /// Usage text or a clap parse error.
    Usage(String),
    /// A flag value or an input file is unusable.
    User(String),
    /// The solver failed or an output could not be written.
    Solver(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) | CliError::User(_) => 1,
            CliError::Solver(_) => 2,
        }
    }

    /// Error for an invalid value of `flag`.
    pub fn flag(flag: &str, message: impl fmt::Display) -> Self {
        CliError::User(format!("error: {flag}: {message}"))
    }

    /// Classifies a library error raised while reading the input named by `flag`.
    pub fn input(flag: &str, path: &Path, e: sepfista::Error) -> Self {
        CliError::User(format!("error: {flag} {}: {e}", path.display()))
    }

    /// Classifies a library error raised while solving.
    pub fn solve(e: sepfista::Error) -> Self {
        use sepfista::Error as E;
        match e {
            E::InvalidArgument(_)
            | E::InvalidDataModel(_)
            | E::DimensionMismatch(_)
            | E::DegenerateInstance(_)
            | E::BadImage(_)
            | E::Parse { .. } => CliError::User(format!("error: {e}")),
            _ => CliError::Solver(format!("solver failure: {e}")),
        }
    }

    pub fn output(path: &Path, e: impl fmt::Display) -> Self {
        CliError::Solver(format!("error: cannot write {}: {e}", path.display()))
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) | CliError::User(m) | CliError::Solver(m) => f.write_str(m),
        }
    }
}

pub fn positive(flag: &str, value: f64) -> Result<f64, CliError> {
    if value > 0.0 && value.is_finite() {
        Ok(value)
    } else {
        Err(CliError::flag(flag, format!("must be positive, got {value}")))
    }
}

pub fn at_least_one(flag: &str, value: usize) -> Result<usize, CliError> {
    if value >= 1 {
        Ok(value)
    } else {
        Err(CliError::flag(flag, "must be at least 1"))
    }
}
