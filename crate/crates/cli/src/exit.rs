//! Process exit statuses.
//!
//! Verification verdicts use 0 and 2 to 5. Everything else borrows from
//! sysexits so scripts can tell a bad flag from a missing file from a CA
//! that is down.

use std::fmt;

use realseal::canon::Record;
use realseal::container::Verdict;

pub const USAGE: i32 = 64;
pub const DATA: i32 = 65;
pub const NO_INPUT: i32 = 66;
pub const UNAVAILABLE: i32 = 69;
pub const SOFTWARE: i32 = 70;
pub const CANT_CREATE: i32 = 73;
pub const NO_PERM: i32 = 77;

#[derive(Debug)]
pub enum Failure {
    Usage(String),
    /// Input parsed but was invalid: bad key file, geometry, trust list...
    Data(String),
    NoInput(String),
    /// The trust service could not be reached or refused the request.
    Unavailable(String),
    Software(String),
    CantCreate(String),
    NoPerm(String),
    /// A container did not verify, or was refused for that reason.
    Verdict(Verdict, String),
}

impl Failure {
    pub fn code(&self) -> i32 {
        match self {
            Failure::Usage(_) => USAGE,
            Failure::Data(_) => DATA,
            Failure::NoInput(_) => NO_INPUT,
            Failure::Unavailable(_) => UNAVAILABLE,
            Failure::Software(_) => SOFTWARE,
            Failure::CantCreate(_) => CANT_CREATE,
            Failure::NoPerm(_) => NO_PERM,
            Failure::Verdict(v, _) => v.exit_code(),
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Failure::Usage(_) => "usage",
            Failure::Data(_) => "data",
            Failure::NoInput(_) => "no-input",
            Failure::Unavailable(_) => "unavailable",
            Failure::Software(_) => "internal",
            Failure::CantCreate(_) => "cant-create",
            Failure::NoPerm(_) => "permission",
            Failure::Verdict(..) => "verdict",
        }
    }

    pub fn to_record(&self) -> Record {
        Record::new()
            .with("error", self.kind())
            .with("detail", self.to_string())
            .with("exit_code", self.code())
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Usage(m)
            | Failure::Data(m)
            | Failure::NoInput(m)
            | Failure::Unavailable(m)
            | Failure::Software(m)
            | Failure::CantCreate(m)
            | Failure::NoPerm(m) => f.write_str(m),
            Failure::Verdict(v, m) => write!(f, "{v}: {m}"),
        }
    }
}

impl From<realseal::trust::ClientError> for Failure {
    fn from(e: realseal::trust::ClientError) -> Self {
        use realseal::trust::ClientError;
        match e {
            ClientError::Service { status: 401, .. } => Failure::NoPerm(e.to_string()),
            ClientError::Service {
                status: 400 | 404 | 409,
                ..
            } => Failure::Data(e.to_string()),
            ClientError::Rejected(_) => Failure::Data(e.to_string()),
            _ => Failure::Unavailable(e.to_string()),
        }
    }
}

impl From<realseal::geometry::GeometryError> for Failure {
    fn from(e: realseal::geometry::GeometryError) -> Self {
        Failure::Data(e.to_string())
    }
}

impl From<realseal::sensing::SensingError> for Failure {
    fn from(e: realseal::sensing::SensingError) -> Self {
        Failure::Data(e.to_string())
    }
}

impl From<realseal::capture::DemoError> for Failure {
    fn from(e: realseal::capture::DemoError) -> Self {
        use realseal::capture::DemoError;
        match e {
            DemoError::Setup(m) => Failure::Unavailable(format!("demo setup failed: {m}")),
            DemoError::Capture(c) => Failure::Software(c.to_string()),
        }
    }
}
