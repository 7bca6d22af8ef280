//! Black-box scenario-based safety testing.
//!
//! Statistical validation and quantification of almost safe sets over
//! δ-coverings, aggressiveness comparison between testing algorithms, an
//! exhaustive no-free-lunch verifier for tiny discrete systems, and a
//! two-vehicle highway testbed.

pub mod compare;
pub mod covering;
pub mod engine;
pub mod error;
pub mod nflbench;
pub mod quantify;
pub mod seed;
pub mod stats;
pub mod toy;
pub mod vehicle;

pub use compare::{
    aggressiveness_order, compare_algorithms, diff_fraction, iou, mass_ratio, AggressivenessOrder, AggressivenessVerdict,
    CompareParams, Comparator, ComparisonOutcome,
};
pub use covering::{build_covering, neighborhood_contains, CoveringSet, DeltaVector};
pub use engine::{
    execute_run, failure_cost, run_algorithm, ActionSampler, ActionSource, ActionVector, Actor, AlgorithmKind,
    AlgorithmOutcome, AlgorithmSpec, CostFunction, CostValue, Dim, DimKind, FailureCost, FirstFailure, FixedOrder, HeldAction, OssSpec,
    PolicyModel, ProductSystem, RunRecord, SpaceBox, StateVector, SystemModel, TerminationRule, TestingActions, UniformActions,
};
pub use error::{Error, Result};
pub use nflbench::{
    cost_distribution, count_consistent, enumerate_systems, verify_nfl, ExplorationOrder, NflCost, NflReport, SystemTable,
};
pub use quantify::{norm_nearest, quantify, reachable, QuantifyOptions, QuantifyParams, QuantifyResult, ReplayBuffer, StateGraph};
pub use stats::{
    epsilon_from_samples, min_samples, validate_safe_set, ConfidenceSpec, MassFunction, SafeSetCertificate,
    ValidationOutcome, ValidationParams,
};
