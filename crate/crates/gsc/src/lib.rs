//! Runtime for generative semantic communication experiments: adapters,
//! datasets, the end-to-end pipeline, configuration and reporting.

pub mod adapter;
pub mod baseline;
pub mod codes;
pub mod config;
pub mod experiment;
pub mod graph_io;
pub mod item;
pub mod pipeline;
pub mod report;
