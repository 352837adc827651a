use std::fmt;
use std::process::ExitCode;

/// Failure with the exit status the process should report.
#[derive(Debug)]
pub enum CliError {
    /// Bad flags, config, data or paths. Exit status 2.
    Input(String),
    /// An analysis could not be carried out. Exit status 1.
    Analysis(String),
}

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        match self {
            CliError::Input(_) => ExitCode::from(2),
            CliError::Analysis(_) => ExitCode::from(1),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Input(m) => write!(f, "input error: {m}"),
            CliError::Analysis(m) => write!(f, "analysis failed: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<svi2r::Error> for CliError {
    fn from(e: svi2r::Error) -> Self {
        use svi2r::Error as E;
        match e {
            E::InvalidConfig(_) | E::Parse { .. } | E::Io(_) | E::Json(_) => CliError::Input(e.to_string()),
            other => CliError::Analysis(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Input(e.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn core_errors_map_to_exit_classes() {
        let input: CliError = svi2r::Error::Parse { line: 3, message: "bad".into() }.into();
        assert!(matches!(input, CliError::Input(ref m) if m.contains("line 3")));
        let analysis: CliError = svi2r::Error::DfeCoincident.into();
        assert!(matches!(analysis, CliError::Analysis(_)));
    }
}
