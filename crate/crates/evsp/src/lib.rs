//! File formats, instance generation, parallel pricing, reports and the
//! end-to-end workflows behind the `evsp` command-line tool.

pub mod generate;
pub mod io;
pub mod parallel;
pub mod report;
pub mod run;

pub use evsp_core as core;
