//! File formats, external answer sources, reports and the experiment runner
//! built on `vtt-core`.

pub mod config;
pub mod error;
pub mod experiment;
pub mod formats;
pub mod report;
pub mod subprocess;
pub mod svg;

pub use error::{AdapterError, Result, VttError};
