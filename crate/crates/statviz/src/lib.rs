//! Command-line and HTTP front end for the statviz pipeline.

pub mod api;
pub mod config;
pub mod store;
