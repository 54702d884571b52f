//! Command-line front end for the weakline engines: scenario files in, CSV or
//! JSON weak-value records out.

pub mod goldens;
pub mod observable;
pub mod output;
pub mod request;
pub mod run;

use output::Record;
use request::RunRequest;
use serde::{Deserialize, Serialize};

/// The JSON output document: the request that produced it and its records.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JsonReport {
    pub request: RunRequest,
    pub records: Vec<Record>,
}
