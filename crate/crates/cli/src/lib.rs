//! Library side of the command-line front end: report formatting and the
//! reproduction battery, shared by the binary and the acceptance tests.

pub mod battery;
pub mod report;
