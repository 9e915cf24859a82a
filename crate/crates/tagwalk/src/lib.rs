//! File formats, IO and pipeline glue around [`tagwalk_core`].
//!
//! * TTG1 binary tag files ([`tags`])
//! * calibration curve JSON ([`curve`])
//! * simulator configuration JSON ([`config`])
//! * plot-ready CSV and the width report JSON ([`report`])

pub mod config;
pub mod curve;
mod error;
pub mod report;
pub mod tags;

pub use error::{Error, Result};
pub use tagwalk_core as core;
