//! Design-time analysis of whether a binary diagnostic decision should be
//! made by run-time probabilistic inference or by a precompiled
//! situation-action artifact.
//!
//! The input is a [`DiagnosisModel`]: a prior on a hypothesis `H`, binary
//! evidence items that are conditionally independent given `H`, a utility
//! table over acting (`D`) and not acting, and cost constants for processing
//! delay and memory. From it the crate
//!
//! - values the compute policy and any compiled alternative, exactly by
//!   enumeration ([`exact`]) or through a normal approximation ([`gaussian`]),
//! - turns those values into net inferential values and picks a policy
//!   ([`niv`]),
//! - selects and emits a `2^n` lookup table over an evidence subset
//!   ([`table`]) or an asymmetric situation-action tree ([`tree`]),
//! - produces fractional-loss curves for synthetic evidence populations
//!   ([`proto`]).
//!
//! The `dcomp` binary exposes the same operations on the command line
//! ([`cli`]). See the crate's `examples/` directory for one runnable program
//! per capability.

#[cfg(test)]
#[macro_use]
mod test_macros;

pub mod cli;
pub mod error;
pub mod exact;
pub mod gaussian;
pub mod model;
pub mod niv;
pub mod proto;
pub mod table;
pub mod tree;

pub use error::{Error, Result};
pub use exact::{exact_ev_compute, exact_ev_subset, exact_tail, exhaustive_subset_search, Caps, ExactEvaluation};
pub use gaussian::{
    evidence_moments, gaussian_ev_compute, gaussian_ev_subset, gaussian_tail, normal_cdf, sum_moments,
    GaussianEvaluation, MomentSummary,
};
pub use model::{
    observed_weight, optimal_action, posterior_odds, threshold, validate_model, weight_pair, Action, CostModel,
    DiagnosisModel, EvidenceVariable, Hypothesis, ModelDigest, Observation, Threshold, UtilityTable, Violation,
    ViolationCode, WeightPair,
};
pub use niv::{compare_policies, niv, Choice, Method, NivReport, Policy, PolicyDecision, PolicyValue};
pub use proto::{
    export_analysis, loss_curve, moment_series, parse_loss_csv, presets, realize_profile, topn_subset, LossCurve,
    LossRow, Normalization, WeightProfile,
};
pub use table::{compile_table, greedy_select, table_lookup, CompiledTable, Selection, SelectionTrace};
pub use tree::{build_tree, tree_ev, tree_lookup, tree_niv, Node, SituationActionTree, TreeLookup};
