//! Report types of the `ruin` command-line tool.

pub mod report;
