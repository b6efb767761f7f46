//! Workgroup mapping toolkit.

pub mod cli;
pub mod color;
pub mod community;
pub mod deck;
pub mod embedding;
pub mod error;
pub mod graph;
pub mod ingest;
pub mod layout;
pub mod linalg;
pub mod metrics;
pub mod month;
pub mod pipeline;
pub mod render;
pub mod service;
pub mod synthesis;
pub mod theme;

pub use error::{Error, Result};
