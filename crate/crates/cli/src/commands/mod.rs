pub mod bench;
pub mod eval;
pub mod genenv;
pub mod plan;
pub mod train;

use std::fmt;

/// Marker for argument/config mistakes, mapped to exit code 2.
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl std::error::Error for UsageError {}
