//! Approximate maximum flow on undirected capacitated graphs through
//! recursively constructed congestion approximators.
//!
//! The pipeline on a graph `G`:
//!
//! 1. [`sparsify::ultra_sparsify`] keeps a spanning tree plus a sampled set of
//!    off-tree edges,
//! 2. [`reduce::reduce`] eliminates degree-one and degree-two vertices,
//! 3. [`hierarchy::build_hierarchy`] partitions the small graph with the
//!    cut-matching game, calling the whole pipeline recursively for its flows,
//! 4. [`reduce::convert_composed`] lifts the cluster tree back to `G`,
//! 5. [`solver::approximator_max_flow`] runs potential descent preconditioned by
//!    the lifted approximator and returns a flow together with a cut certificate.
//!
//! [`driver::recursive_approx_max_flow`] glues the steps together and
//! [`oracle`] provides exact answers for checking everything on small inputs.

pub mod approximator;
pub mod bench;
pub mod dimacs;
pub mod driver;
pub mod error;
pub mod generate;
pub mod graph;
pub mod hierarchy;
pub mod oracle;
pub mod reduce;
pub mod report;
mod rng;
pub mod solver;
pub mod sparsify;

pub use approximator::{CongestionApproximatorOp, DecompositionTree};
pub use driver::{max_flow_value, recursive_approx_max_flow, RecursionConfig, RecursionStats};
pub use error::{FlowError, Result};
pub use graph::{CutSet, DemandVector, Flow, FlowCutSolution, Graph};
pub use rng::derive_seed;
