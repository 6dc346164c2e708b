//! Benchmark plumbing: dataset ingestion and generation, fairness-cap
//! allocation, run configuration, timed runs and the randomized invariant suite.

pub mod alloc;
pub mod bench;
pub mod config;
pub mod data;
pub mod verify;

pub use alloc::{allocate_caps, Allocation};
pub use bench::{run_benchmark, PermutationResult, RunReport};
pub use config::{Algorithm, RunConfig};
pub use data::{generate_blobs, load_csv, write_csv};
