//! One-pass fair max-min diversity maximization.
//!
//! Given a stream of points in a metric space, each tagged with one of `m`
//! groups, select `k = k_0 + ... + k_{m-1}` points containing exactly `k_i`
//! points of group `i` so that the smallest pairwise distance among them is
//! as large as possible. Memory depends on `k`, `m` and the distance spread,
//! never on the stream length.
//!
//! - [`sfdm1::Sfdm1State`]: two groups, `(1 - eps) / 4` of the fair optimum.
//! - [`sfdm2::Sfdm2State`]: any number of groups, `(1 - eps) / (3m + 2)`.
//! - [`offline`]: the farthest-point greedy baseline and an exact oracle.
//! - [`harness`]: datasets, cap allocation, benchmarking and reporting.

pub mod dataset;
pub mod error;
mod extremes;
pub mod guesses;
pub mod harness;
pub mod matroid;
pub mod metric;
pub mod offline;
pub mod sfdm1;
pub mod sfdm2;
pub mod stream;

pub use dataset::{extremal_distances, Element, GroupedDataset};
pub use error::{FdmError, Result};
pub use guesses::{Arrival, Candidate, GuessLadder, SdmState};
pub use metric::{diversity, set_distance, Metric};
pub use sfdm1::Sfdm1State;
pub use sfdm2::Sfdm2State;
pub use stream::{FairSolution, FairStream, StreamParams};
