//! Benchmark harness, file formats and command-line support for
//! [`ripm_core`].
//!
//! - [`spec`]: instance descriptions, built-in suites and JSON suite files.
//! - [`runner`]: seeded trials on a thread pool and their aggregation.
//! - [`output`]: the results CSV, per-iteration traces and summary tables.
//! - [`check`]: dense oracles and derivative checks.

pub mod check;
pub mod clock;
pub mod error;
pub mod output;
pub mod runner;
pub mod spec;

pub use clock::StdClock;
pub use error::{Error, Result};
