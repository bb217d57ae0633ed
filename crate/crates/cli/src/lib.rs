//! Library surface of the command-line tool, exposed so integration tests
//! can drive the same code paths the binary runs.

pub mod commands;
pub mod dataset;
pub mod report;
