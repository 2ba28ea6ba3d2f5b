//! CLI errors carry distinct exit codes: 3 for config/schema problems,
//! 4 for I/O, 5 for runtime failures inside the toolkit. Clap itself exits
//! with 2 on usage errors.

use std::fmt;

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Io(String),
    Run(covnet::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 3,
            CliError::Io(_) => 4,
            CliError::Run(covnet::Error::Io(_)) | CliError::Run(covnet::Error::Csv(_)) => 4,
            CliError::Run(_) => 5,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(msg) => write!(f, "config error: {msg}"),
            CliError::Io(msg) => write!(f, "I/O error: {msg}"),
            CliError::Run(err) => write!(f, "error: {err}"),
        }
    }
}

impl From<covnet::Error> for CliError {
    fn from(e: covnet::Error) -> Self {
        CliError::Run(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}
