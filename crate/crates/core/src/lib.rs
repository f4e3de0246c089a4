//! Numerical toolkit for the secrecy rate region of the discrete memoryless
//! state-dependent cognitive interference channel: exact information
//! measures over finite joints, inner/outer bound evaluation, auxiliary
//! policy search with downward-closed convex hulls, and a Monte Carlo
//! simulator of the random-binning coding scheme at small blocklengths.

pub mod bounds;
pub mod channel;
pub mod prob;
pub mod search;
pub mod sim;

pub use bounds::{
    case_split, cross_check, inner_bound_point, outer_bound_point, reduce_no_secrecy,
    reduce_no_state, BatchEvaluator, BoundsError, CaseSplit, RateTriple,
};
pub use channel::{
    build_joint, default_aux_sizes, independence_check, parse_channel_spec, parse_policy,
    serialize_channel_spec, serialize_policy, AuxiliaryPolicy, ChannelError, ChannelSpec,
    Violation,
};
pub use prob::{csiszar_sum_residual, JointDistribution, ProbError, VariableId};
pub use search::{
    downward_hull, hull_contains, policy_for_id, sample_policies, search_outer, search_region,
    RegionPoint, RegionSample, Sampler, SearchConfig, SearchError,
};
pub use sim::{
    generate_codebook, partition_g, run_trials, run_trials_logged, Codebook, CodebookParams,
    CodebookStructure, CognitiveMessage, GeneratingPmfs, SimError, TrialStats,
};
