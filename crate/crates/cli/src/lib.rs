//! Batch front-end: CSV ingestion, parallel scoring and selection across
//! feature columns, experiment replication, and report emission.

pub mod config;
pub mod error;
pub mod experiment;
pub mod ingest;
pub mod pipeline;
pub mod report;

pub use error::CliError;
