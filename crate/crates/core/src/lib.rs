//! Disordered monomer-dimer model on finite graphs.
//!
//! Exact Gibbs engines (enumeration, vertex-elimination recursion, strip
//! transfer matrices), a heat-bath Markov chain and its couplings, and the
//! disorder-replica experiments built on top of them. Everything numeric is
//! generic over [`Scalar`]; the aliases below fix it to `f64`.

// `!(x > 0)` style checks are meant to reject NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod coupling;
pub mod disorder;
pub mod error;
pub mod exact;
pub mod graph;
pub mod lab;
pub mod scalar;
pub mod seed;
pub mod stats;
pub mod transfer;

pub use disorder::{
    resample_subset, sample_weights, truncate_weights, truncation_level, DisorderSample, Provenance,
    WeightDistribution,
};
pub use error::{Error, Result};
pub use exact::{
    conditional_summary, discrete_derivative, edge_marginal, gauge_transform, gibbs_summary, gibbs_summary_with,
    local_free_energy, log_partition, log_partition_with, two_point, vertex_unmatched_marginal, BoundaryCondition,
    Engine, GibbsSummary, Matching,
};
pub use graph::{
    build_cycle, build_grid, build_path, build_strip, GraphSpec, SiteIndex, StripLayout, SubgraphView,
    WeightedGraph,
};
pub use scalar::Scalar;

/// Disorder sample in double precision.
pub type Sample = DisorderSample<f64>;
/// Gibbs summary in double precision.
pub type Summary = GibbsSummary<f64>;
/// Single-precision variants, mostly for cross-checks.
pub type Sample32 = DisorderSample<f32>;
pub type Summary32 = GibbsSummary<f32>;
