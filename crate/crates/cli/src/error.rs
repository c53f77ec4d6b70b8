use serde_json::json;

#[derive(Debug)]
pub enum CliError {
    Config { message: String, line: Option<usize>, column: Option<usize> },
    Usage(String),
    Numeric(rydres_core::Error),
    Io(String),
    Internal(String),
}

impl From<rydres_core::Error> for CliError {
    fn from(e: rydres_core::Error) -> Self {
        CliError::Numeric(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config { .. } | CliError::Usage(_) => 2,
            CliError::Numeric(_) => 3,
            CliError::Io(_) => 4,
            CliError::Internal(_) => 70,
        }
    }

    /// Machine-readable form printed on stderr.
    pub fn to_json(&self) -> serde_json::Value {
        let body = match self {
            CliError::Config { message, line, column } => {
                json!({ "kind": "config", "message": message, "line": line, "column": column })
            }
            CliError::Usage(m) => json!({ "kind": "usage", "message": m }),
            CliError::Numeric(e) => json!({ "kind": "numeric", "message": e.to_string(), "detail": format!("{e:?}") }),
            CliError::Io(m) => json!({ "kind": "io", "message": m }),
            CliError::Internal(m) => json!({ "kind": "internal", "message": m }),
        };
        json!({ "error": body })
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.to_json())
    }
}

impl std::error::Error for CliError {}
