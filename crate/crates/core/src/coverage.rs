//! Cluster coverage tests and the two covering-set traversals.
//!
//! `eval_forall` decides from a cluster's attribute bounds whether a single
//! comparison holds for every tuple in the cluster; `reval_forall` and
//! `reval_exists` generalize the test to a whole range of candidate
//! constants. `full_cover_cluster_set` walks the tree for one concrete
//! candidate and returns disjoint clusters covering exactly its result;
//! `par_cover_cluster_set` does the same for a candidate set, returning
//! clusters certainly covered by every candidate plus the partially covered
//! leaves.

use crate::dataset::Dataset;
use crate::interval::Interval;
use crate::kdtree::{summarize, ClusterSummary, KdTree};
use crate::query::{
    BoundCondition, CandidateSet, CandidateSpace, ComparisonOp, Constant, UserQuery,
};

/// Swaps a comparison with its negation. Interval membership has no single
/// negated operator (its complement is a disjunction); callers use
/// [`excluded_forall`] for it instead.
pub fn negate(op: ComparisonOp) -> Option<ComparisonOp> {
    match op {
        ComparisonOp::Lt => Some(ComparisonOp::Ge),
        ComparisonOp::Ge => Some(ComparisonOp::Lt),
        ComparisonOp::Le => Some(ComparisonOp::Gt),
        ComparisonOp::Gt => Some(ComparisonOp::Le),
        ComparisonOp::Eq => Some(ComparisonOp::Neq),
        ComparisonOp::Neq => Some(ComparisonOp::Eq),
        ComparisonOp::InRange => None,
    }
}

/// True when `a op c` holds for every `a` in `bounds`.
pub fn eval_forall(op: ComparisonOp, constant: &Constant, bounds: Interval) -> bool {
    match (op, constant) {
        (ComparisonOp::Gt, Constant::Scalar(c)) => bounds.lo > *c,
        (ComparisonOp::Ge, Constant::Scalar(c)) => bounds.lo >= *c,
        (ComparisonOp::Lt, Constant::Scalar(c)) => bounds.hi < *c,
        (ComparisonOp::Le, Constant::Scalar(c)) => bounds.hi <= *c,
        (ComparisonOp::Eq, Constant::Scalar(c)) => bounds.lo == *c && bounds.hi == *c,
        (ComparisonOp::Neq, Constant::Scalar(c)) => !bounds.contains(*c),
        (ComparisonOp::InRange, Constant::Range(c1, c2)) => *c1 <= bounds.lo && bounds.hi <= *c2,
        _ => unreachable!("constant arity mismatch"),
    }
}

/// True when `a op c` fails for every `a` in `bounds` (the cluster can be
/// dropped outright).
pub fn excluded_forall(op: ComparisonOp, constant: &Constant, bounds: Interval) -> bool {
    match (op, constant) {
        (ComparisonOp::InRange, Constant::Range(c1, c2)) => bounds.hi < *c1 || bounds.lo > *c2,
        (op, c) => eval_forall(negate(op).expect("scalar op"), c, bounds),
    }
}

/// Candidate-constant ranges of one predicate: one interval per constant.
#[derive(Debug, Clone, Copy)]
pub enum ConstRange {
    Scalar(Interval),
    Range(Interval, Interval),
}

/// True when `a op c` holds for every `a` in `bounds` and every constant `c`
/// in the given range(s).
pub fn reval_forall(op: ComparisonOp, range: &ConstRange, bounds: Interval) -> bool {
    match (op, range) {
        (ComparisonOp::Gt, ConstRange::Scalar(c)) => bounds.lo > c.hi,
        (ComparisonOp::Ge, ConstRange::Scalar(c)) => bounds.lo >= c.hi,
        (ComparisonOp::Lt, ConstRange::Scalar(c)) => bounds.hi < c.lo,
        (ComparisonOp::Le, ConstRange::Scalar(c)) => bounds.hi <= c.lo,
        (ComparisonOp::Eq, ConstRange::Scalar(c)) => {
            bounds.lo == c.lo && c.lo == bounds.hi && bounds.hi == c.hi
        }
        (ComparisonOp::Neq, ConstRange::Scalar(c)) => !bounds.intersects(c),
        (ComparisonOp::InRange, ConstRange::Range(c1, c2)) => {
            c1.hi <= bounds.lo && bounds.hi <= c2.lo
        }
        _ => unreachable!("constant arity mismatch"),
    }
}

/// True when `a op c` may hold for some `a` in `bounds` and some constant `c`
/// in the given range(s).
pub fn reval_exists(op: ComparisonOp, range: &ConstRange, bounds: Interval) -> bool {
    match (op, range) {
        (ComparisonOp::Gt, ConstRange::Scalar(c)) => bounds.hi > c.lo,
        (ComparisonOp::Ge, ConstRange::Scalar(c)) => bounds.hi >= c.lo,
        (ComparisonOp::Lt, ConstRange::Scalar(c)) => bounds.lo < c.hi,
        (ComparisonOp::Le, ConstRange::Scalar(c)) => bounds.lo <= c.hi,
        (ComparisonOp::Eq, ConstRange::Scalar(c)) => bounds.intersects(c),
        (ComparisonOp::Neq, ConstRange::Scalar(c)) => {
            !(bounds.lo == c.lo && c.lo == c.hi && c.hi == bounds.hi)
        }
        (ComparisonOp::InRange, ConstRange::Range(c1, c2)) => {
            bounds.intersects(&Interval::new(c1.lo, c2.hi.max(c1.lo)))
        }
        _ => unreachable!("constant arity mismatch"),
    }
}

/// Covering cluster set for one concrete candidate: tree nodes whose tuples
/// all satisfy the condition, plus exact summaries built tuple-by-tuple from
/// partially covered leaves.
#[derive(Debug)]
pub struct FullCover {
    pub full: Vec<usize>,
    pub resolved: Vec<ClusterSummary>,
    pub clusters_accessed: u64,
    pub tuple_accesses: u64,
}

pub fn full_cover_cluster_set(
    tree: &KdTree,
    ds: &Dataset,
    condition: &BoundCondition,
) -> FullCover {
    let mut cover = FullCover {
        full: Vec::new(),
        resolved: Vec::new(),
        clusters_accessed: 0,
        tuple_accesses: 0,
    };
    let mut stack = vec![tree.root()];
    while let Some(id) = stack.pop() {
        cover.clusters_accessed += 1;
        let node = tree.node(id);
        let mut all_in = true;
        let mut any_out = false;
        for (i, (_, op, c)) in condition.tests.iter().enumerate() {
            let bounds = node.summary.attr_bounds[i];
            all_in &= eval_forall(*op, c, bounds);
            any_out |= excluded_forall(*op, c, bounds);
        }
        if all_in {
            cover.full.push(id);
        } else if !any_out {
            if node.is_leaf() {
                // Leaves hold up to S tuples; resolve the overlap exactly.
                cover.tuple_accesses += node.rows.len() as u64;
                let matched: Vec<u32> = node
                    .rows
                    .iter()
                    .copied()
                    .filter(|&r| condition.matches_row(ds, r as usize))
                    .collect();
                if !matched.is_empty() {
                    cover
                        .resolved
                        .push(summarize(&matched, ds, &tree.attr_cols, &tree.layout));
                }
            } else {
                stack.extend_from_slice(&node.children);
            }
        }
    }
    cover
}

/// Partially covering cluster set for a candidate set.
#[derive(Debug)]
pub struct ParCover {
    pub full: Vec<usize>,
    pub partial: Vec<usize>,
    pub clusters_accessed: u64,
}

/// Per-predicate constant ranges spanned by a candidate set.
pub fn const_ranges(space: &CandidateSpace, set: &CandidateSet) -> Vec<ConstRange> {
    let mut out = Vec::new();
    let mut i = 0;
    while i < space.slots.len() {
        if space.slots[i].range_partner.is_some() {
            out.push(ConstRange::Range(
                set.value_interval(space, i),
                set.value_interval(space, i + 1),
            ));
            i += 2;
        } else {
            out.push(ConstRange::Scalar(set.value_interval(space, i)));
            i += 1;
        }
    }
    out
}

pub fn par_cover_cluster_set(
    tree: &KdTree,
    query: &UserQuery,
    space: &CandidateSpace,
    set: &CandidateSet,
) -> ParCover {
    let ranges = const_ranges(space, set);
    let ops: Vec<ComparisonOp> = query.predicates.iter().map(|p| p.op).collect();
    let mut cover = ParCover {
        full: Vec::new(),
        partial: Vec::new(),
        clusters_accessed: 0,
    };
    let mut stack = vec![tree.root()];
    while let Some(id) = stack.pop() {
        cover.clusters_accessed += 1;
        let node = tree.node(id);
        let mut all_in = true;
        let mut possibly_in = true;
        for ((op, range), bounds) in ops.iter().zip(&ranges).zip(&node.summary.attr_bounds) {
            all_in &= reval_forall(*op, range, *bounds);
            possibly_in &= reval_exists(*op, range, *bounds);
        }
        if all_in {
            cover.full.push(id);
        } else if possibly_in {
            if node.is_leaf() {
                cover.partial.push(id);
            } else {
                stack.extend_from_slice(&node.children);
            }
        }
    }
    cover
}
