//! Topological comparison of languages through their grammatical features.
//!
//! Categorical typological data is embedded with an adjusted multiple
//! correspondence analysis; each language's observed categories form a point
//! sub-cloud whose Vietoris–Rips persistence diagram summarizes its shape.
//! Diagrams are compared with Wasserstein or bottleneck distances, projected
//! with classical MDS, and grouped hypotheses are tested by permutation.

pub mod assignment;
pub mod cloud;
pub mod config;
pub mod error;
pub mod ingest;
pub mod io;
pub mod linalg;
pub mod mca;
pub mod mds;
pub mod metrics;
pub mod permtest;
pub mod persistence;
pub mod pipeline;
pub mod render;
pub mod synth;

pub use error::{Error, Result};
