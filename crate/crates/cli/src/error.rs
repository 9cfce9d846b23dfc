use ergm_core::Error;
use serde::Serialize;

pub type CliResult<T> = Result<T, CliError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ErrorKind {
    Usage,
    Input,
    Estimation,
    Internal,
}

impl ErrorKind {
    pub fn exit_code(self) -> i32 {
        match self {
            ErrorKind::Usage => 2,
            ErrorKind::Input => 3,
            ErrorKind::Estimation => 4,
            ErrorKind::Internal => 5,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct CliError {
    #[serde(rename = "error")]
    pub kind: ErrorKind,
    pub code: i32,
    pub message: String,
}

impl CliError {
    pub fn new(kind: ErrorKind, message: impl Into<String>) -> Self {
        Self { kind, code: kind.exit_code(), message: message.into() }
    }

    pub fn usage(message: impl Into<String>) -> Self {
        Self::new(ErrorKind::Usage, message)
    }

    pub fn input(message: impl Into<String>) -> Self {
        Self::new(ErrorKind::Input, message)
    }

    /// The error as a single JSON line.
    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).unwrap_or_else(|_| format!(r#"{{"error":"internal","code":5,"message":"{:?}"}}"#, self.message))
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let kind = if e.is_estimation_failure() {
            ErrorKind::Estimation
        } else {
            match e {
                Error::EmptyGraph
                | Error::SelfLoop(_)
                | Error::NodeOutOfRange { .. }
                | Error::DuplicateEdge(..)
                | Error::InvalidProbability(_)
                | Error::MissingAttribute(_)
                | Error::NonNumericAttribute(_)
                | Error::AttributeLength { .. }
                | Error::InvalidTerm(_)
                | Error::DimensionMismatch { .. }
                | Error::InvalidConfig(_)
                | Error::TooLarge { .. }
                | Error::TooFewSamples { .. }
                | Error::EmptyInput
                | Error::Parse(_)
                | Error::Io(_) => ErrorKind::Input,
                _ => ErrorKind::Internal,
            }
        };
        Self::new(kind, e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e).into()
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        Error::from(e).into()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn core_errors_map_to_exit_codes() {
        assert_eq!(CliError::from(Error::MissingAttribute("x".into())).code, 3);
        assert_eq!(CliError::from(Error::NonConvergence { count: 3, unit: "rounds" }).code, 4);
        assert_eq!(CliError::from(Error::SeparationDiverged("s".into())).code, 4);
        let line = CliError::usage("bad flag").to_json_line();
        assert_eq!(line, r#"{"error":"usage","code":2,"message":"bad flag"}"#);
    }
}
