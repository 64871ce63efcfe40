//! Top-k repair of a conjunctive query's predicate constants so that the
//! query result satisfies aggregate constraints.
//!
//! Given a single-table dataset, a conjunctive selection query and one or
//! more constraints over aggregates of the query's result, the engine returns
//! the k candidate constant vectors closest to the original query whose
//! results satisfy every constraint. Three engines share one candidate
//! order:
//!
//! - [`oracle::bf_topk`] scans the full table per candidate (reference),
//! - [`search::ff_topk`] evaluates candidates against a kd-tree of cluster
//!   summaries ([`kdtree`]) via exact covering cluster sets ([`coverage`]),
//! - [`search::rp_topk`] processes whole candidate sets at once, bounding
//!   constraint results with interval arithmetic ([`interval`], [`bounds`])
//!   and pruning or certifying entire sets before they are ever enumerated.

pub mod bounds;
pub mod constraint;
pub mod coverage;
pub mod datagen;
pub mod dataset;
pub mod interval;
pub mod kdtree;
pub mod oracle;
pub mod query;
pub mod search;

pub use constraint::{parse_constraint, AggregateConstraint, ConstraintSet};
pub use dataset::{load_csv, ActiveDomain, Dataset};
pub use interval::Interval;
pub use kdtree::{build_tree, KdTree};
pub use query::{
    repair_distance, CandidateSet, CandidateSpace, ComparisonOp, Constant, Predicate,
    RepairCandidate, UserQuery,
};
pub use search::{ff_topk, rp_topk, Repair, RepairResult, SearchStats};
