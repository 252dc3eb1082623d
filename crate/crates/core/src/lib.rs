//! Scalable, deterministic generation of duplicate-detection test data.
//!
//! A clean input dataset is profiled, prepared, turned into a simulated world
//! history, and replayed through an event-based model of imperfect, copying
//! data sources. The result is a cleaning, integration or linkage scenario with
//! a gold standard of duplicate clusters and golden records.

pub mod dataset;
pub mod dict;
pub mod formats;
pub mod history_gen;
pub mod io;
pub mod model;
pub mod pollution;
pub mod preconfig;
pub mod preparation;
pub mod profiling;
pub mod rng;
pub mod scenario;
pub mod toy;

pub use model::*;
