//! Interaction ingestion, k-core filtering, train/validation/test splitting
//! and the symmetrically normalized user-item adjacency.

mod adjacency;
mod interactions;
mod io;
mod kcore;
mod split;

pub use adjacency::{build_adjacency, NormalizedAdjacency};
pub use interactions::{InteractionGraph, RawInteractions, Split};
pub use io::{load_interactions, read_prepared, write_prepared, EdgeListFormat, PreparedStats};
pub use kcore::kcore_filter;
pub use split::{split, SplitRatios};
