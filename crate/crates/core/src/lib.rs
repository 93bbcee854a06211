//! Constrained multi-objective gradient aggregation.
//!
//! Objectives are turned into improvement constraints inside an `H`-metric
//! local region, and the small dense QP that results is solved exactly to get
//! an update direction that never conflicts with any objective while steering
//! back into the safe set when a constraint is violated.
//!
//! The crate is `no_std` (it needs `alloc`). Everything here is pure
//! computation; file formats, the CLI and experiment drivers live in the
//! `comoga` crate.
//!
//! Modules:
//!
//! * [`preference`], [`metric`], [`bundle`]: shared domain types.
//! * [`qp`]: exact solver for the aggregation QPs, with duals.
//! * [`aggregator`]: the plain and modified (convergence-certified) updates.
//! * [`toy`]: the two-objective analytic benchmark with a quadratic constraint.
//! * [`tabular`]: exact finite CMOMDP evaluation, softmax policy gradients,
//!   natural-gradient updates and a brute-force constrained-Pareto oracle.
//! * [`front`]: Pareto filtering, hypervolume and normalized sparsity.
#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod aggregator;
pub mod bundle;
pub mod error;
pub mod front;
pub mod linalg;
pub mod metric;
pub mod preference;
pub mod qp;
pub mod tabular;
pub mod toy;

pub use aggregator::{AggregationResult, AggregatorConfig, Mode, Variant};
pub use bundle::GradientBundle;
pub use error::Error;
pub use metric::{LocalMetric, Metric};
pub use preference::Preference;
