use std::fmt;

use protrans_core::Error;

/// Exit status: 2 config, 3 data, 4 model.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    pub fn config(msg: impl fmt::Display) -> Self {
        Self { code: 2, message: msg.to_string() }
    }

    pub fn data(msg: impl fmt::Display) -> Self {
        Self { code: 3, message: msg.to_string() }
    }

    pub fn model(msg: impl fmt::Display) -> Self {
        Self { code: 4, message: msg.to_string() }
    }

    /// Classifies a library error raised while processing data: model
    /// problems keep their own code, everything else is a data error.
    pub fn from_core(e: Error) -> Self {
        match e {
            Error::Model(_) => Self::model(e),
            _ => Self::data(e),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}
