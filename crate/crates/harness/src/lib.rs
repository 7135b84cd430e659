//! Configuration, replication runner and CSV/SVG emission for the
//! `safebai` command line tool.

pub mod aggregate;
pub mod commands;
pub mod config;
pub mod error;
pub mod output;
pub mod runner;
pub mod svg;
