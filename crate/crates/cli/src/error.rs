use std::fmt;

use lndimer::constants::ConstantsError;
use lndimer::curves::CurveError;
use lndimer::dispersion::DispersionError;
use lndimer::lines::LinesError;
use lndimer::rovib::RovibError;
use lndimer::spintensor::{FitError, IngestError};

pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

/// A message with the process exit code it maps to.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub msg: String,
}

impl Failure {
    pub fn validation(msg: impl Into<String>) -> Self {
        Failure { code: EXIT_VALIDATION, msg: msg.into() }
    }

    pub fn numerical(msg: impl Into<String>) -> Self {
        Failure { code: EXIT_NUMERICAL, msg: msg.into() }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.msg)
    }
}

impl From<ConstantsError> for Failure {
    fn from(e: ConstantsError) -> Self {
        Failure::validation(e.to_string())
    }
}

impl From<LinesError> for Failure {
    fn from(e: LinesError) -> Self {
        Failure::validation(e.to_string())
    }
}

impl From<DispersionError> for Failure {
    fn from(e: DispersionError) -> Self {
        Failure::validation(e.to_string())
    }
}

impl From<CurveError> for Failure {
    fn from(e: CurveError) -> Self {
        match e {
            CurveError::NoMinimum(..) => Failure::numerical(e.to_string()),
            _ => Failure::validation(e.to_string()),
        }
    }
}

impl From<RovibError> for Failure {
    fn from(e: RovibError) -> Self {
        match e {
            RovibError::Curve(c) => c.into(),
            RovibError::Eigen(_) => Failure::numerical(e.to_string()),
            _ => Failure::validation(e.to_string()),
        }
    }
}

impl From<IngestError> for Failure {
    fn from(e: IngestError) -> Self {
        Failure::validation(e.to_string())
    }
}

impl From<FitError> for Failure {
    fn from(e: FitError) -> Self {
        match e {
            FitError::Singular(_) => Failure::numerical(e.to_string()),
            _ => Failure::validation(e.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::validation(e.to_string())
    }
}

impl From<csv::Error> for Failure {
    fn from(e: csv::Error) -> Self {
        Failure::validation(e.to_string())
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure::validation(e.to_string())
    }
}
