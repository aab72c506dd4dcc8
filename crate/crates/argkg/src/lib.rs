//! Command-line pipeline around [`argkg_core`]: a caching SPARQL client,
//! file formats, configuration, the per-variant run and its reports.

pub mod client;
pub mod config;
pub mod io;
pub mod pipeline;
pub mod report;

pub use client::{CacheMode, ClientConfig, LocalKb, SparqlClient, Transport};
pub use config::{PipelineConfig, Variant};
pub use pipeline::{run_pipeline, PipelineError};
pub use report::RunReport;
