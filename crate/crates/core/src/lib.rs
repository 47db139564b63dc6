//! Privacy funnel and information bottleneck by agglomerative clustering,
//! where each merge is found by minimizing a difference of submodular
//! functions over the current alphabet.

pub mod dist;
pub mod funnel;
pub mod ingest;
pub mod mdsf;
pub mod selfcheck;
pub mod set_functions;
pub mod sfm;

pub use dist::{Alphabet, Axis, JointPmf, MergeSet, Partition, PmfError};
pub use funnel::{iac_mdsf, pairwise_merge, sweep, ClusteringResult, FrontierPoint, FunnelError, PairwiseConfig, RunConfig};
pub use mdsf::Strategy;
pub use set_functions::{MergeObjective, Problem};
