//! Combining cluster summaries into aggregate values or intervals, and
//! deciding constraint satisfaction for candidates and candidate sets.
//!
//! The exact path (one candidate, a fully covering cluster set) merges
//! materialized results: counts and sums add, mins and maxes fold. The
//! bounded path (a candidate set, a partially covering cluster set) makes
//! worst-case assumptions about partially covered clusters: a count may gain
//! all of a partial cluster's matches or none, a sum may gain just the
//! negative or just the positive part, a min may drop to the smallest value
//! seen anywhere but can never rise above the fully covered minimum.

use crate::constraint::{
    eval_expr_interval, eval_expr_scalar, AggFn, AggValue, AggregateConstraint, Comparison,
    ConstraintSet,
};
use crate::coverage::{self, full_cover_cluster_set, ConstRange, FullCover, ParCover};
use crate::dataset::Dataset;
use crate::interval::Interval;
use crate::kdtree::{AggSummary, KdTree};
use crate::query::{BoundCondition, ComparisonOp, RepairCandidate, UserQuery};

/// Exact aggregate bindings for one constraint, computed from a fully
/// covering cluster set.
pub fn merge_exact(
    tree: &KdTree,
    cover: &FullCover,
    constraint_idx: usize,
    constraint: &AggregateConstraint,
) -> Vec<AggValue> {
    let layout = &tree.layout;
    (0..constraint.aggs.len())
        .map(|agg_id| {
            let flat = layout.flat(constraint_idx, agg_id);
            let func = layout.aggs[flat].func;
            let pieces = cover
                .full
                .iter()
                .map(|&id| &tree.node(id).summary.aggs[flat])
                .chain(cover.resolved.iter().map(|s| &s.aggs[flat]));
            merge_agg(func, pieces)
        })
        .collect()
}

fn merge_agg<'a>(func: AggFn, pieces: impl Iterator<Item = &'a AggSummary>) -> AggValue {
    let mut matches = 0usize;
    let mut acc = match func {
        AggFn::Min => f64::INFINITY,
        AggFn::Max => f64::NEG_INFINITY,
        _ => 0.0,
    };
    for p in pieces {
        matches += p.match_count;
        acc = match func {
            AggFn::Count | AggFn::Sum => acc + p.value,
            AggFn::Min => acc.min(p.value),
            AggFn::Max => acc.max(p.value),
            AggFn::Avg => unreachable!("avg is rewritten before indexing"),
        };
    }
    match func {
        AggFn::Count | AggFn::Sum => AggValue::Num(acc),
        AggFn::Min | AggFn::Max if matches > 0 => AggValue::Num(acc),
        _ => AggValue::Empty,
    }
}

/// Interval bindings for one constraint over a partially covering cluster
/// set, with per-aggregate emptiness information for min/max handling.
pub struct BoundedAggs {
    pub intervals: Vec<Interval>,
    /// The aggregate may have zero matching tuples for some candidate in the
    /// set (no fully covered cluster contributes a match).
    pub may_be_empty: Vec<bool>,
    /// The aggregate has zero matching tuples for every candidate in the set.
    pub definitely_empty: Vec<bool>,
}

pub fn bound_aggregates(
    tree: &KdTree,
    cover: &ParCover,
    constraint_idx: usize,
    constraint: &AggregateConstraint,
) -> BoundedAggs {
    let layout = &tree.layout;
    let n = constraint.aggs.len();
    let mut out = BoundedAggs {
        intervals: Vec::with_capacity(n),
        may_be_empty: Vec::with_capacity(n),
        definitely_empty: Vec::with_capacity(n),
    };
    for agg_id in 0..n {
        let flat = layout.flat(constraint_idx, agg_id);
        let func = layout.aggs[flat].func;
        let full = || {
            cover
                .full
                .iter()
                .map(|&id| tree.node(id).summary.aggs[flat])
        };
        let partial = || {
            cover
                .partial
                .iter()
                .map(|&id| tree.node(id).summary.aggs[flat])
        };

        let full_matches: usize = full().map(|a| a.match_count).sum();
        let partial_matches: usize = partial().map(|a| a.match_count).sum();

        let interval = match func {
            AggFn::Count => {
                let lo = full_matches as f64;
                Interval::new(lo, lo + partial_matches as f64)
            }
            AggFn::Sum => {
                let base: f64 = full().map(|a| a.value).sum();
                let neg: f64 = partial().map(|a| a.neg_sum).sum();
                let pos: f64 = partial().map(|a| a.pos_sum).sum();
                Interval::new(base + neg, base + pos)
            }
            AggFn::Min => {
                // Values are materialized per-aggregate minima; clusters with
                // no matching tuple sit at +inf and drop out of the folds.
                let lo = full()
                    .chain(partial())
                    .filter(|a| a.match_count > 0)
                    .map(|a| a.value)
                    .fold(f64::INFINITY, f64::min);
                let hi = full()
                    .filter(|a| a.match_count > 0)
                    .map(|a| a.value)
                    .fold(f64::INFINITY, f64::min);
                Interval::new(lo, hi)
            }
            AggFn::Max => {
                let lo = full()
                    .filter(|a| a.match_count > 0)
                    .map(|a| a.value)
                    .fold(f64::NEG_INFINITY, f64::max);
                let hi = full()
                    .chain(partial())
                    .filter(|a| a.match_count > 0)
                    .map(|a| a.value)
                    .fold(f64::NEG_INFINITY, f64::max);
                Interval::new(lo, hi)
            }
            AggFn::Avg => unreachable!("avg is rewritten before indexing"),
        };
        out.intervals.push(interval);
        out.may_be_empty.push(full_matches == 0);
        out.definitely_empty
            .push(full_matches + partial_matches == 0);
    }
    out
}

fn is_min_max(func: AggFn) -> bool {
    matches!(func, AggFn::Min | AggFn::Max)
}

fn comparison_ranges(cmp: &Comparison) -> (ComparisonOp, ConstRange) {
    match *cmp {
        Comparison::Lt(t) => (ComparisonOp::Lt, ConstRange::Scalar(Interval::point(t))),
        Comparison::Le(t) => (ComparisonOp::Le, ConstRange::Scalar(Interval::point(t))),
        Comparison::Gt(t) => (ComparisonOp::Gt, ConstRange::Scalar(Interval::point(t))),
        Comparison::Ge(t) => (ComparisonOp::Ge, ConstRange::Scalar(Interval::point(t))),
        Comparison::InRange(lo, hi) => (
            ComparisonOp::InRange,
            ConstRange::Range(Interval::point(lo), Interval::point(hi)),
        ),
    }
}

/// Every candidate in the set is certified to satisfy `constraint`.
fn aceval_forall_one(
    tree: &KdTree,
    cover: &ParCover,
    constraint_idx: usize,
    constraint: &AggregateConstraint,
) -> bool {
    let bounds = bound_aggregates(tree, cover, constraint_idx, constraint);
    // Some candidate may leave a referenced min/max without rows, which makes
    // that candidate invalid; certification is then impossible.
    for (agg, may_empty) in constraint.aggs.iter().zip(&bounds.may_be_empty) {
        if is_min_max(agg.func) && *may_empty {
            return false;
        }
    }
    let phi = match eval_expr_interval(&constraint.expr, &bounds.intervals) {
        Ok(i) => i,
        Err(_) => return false, // cannot certify through undefined division
    };
    let (op, range) = comparison_ranges(&constraint.comparison);
    coverage::reval_forall(op, &range, phi)
}

/// Some candidate in the set may satisfy `constraint`.
fn aceval_exists_one(
    tree: &KdTree,
    cover: &ParCover,
    constraint_idx: usize,
    constraint: &AggregateConstraint,
) -> bool {
    let bounds = bound_aggregates(tree, cover, constraint_idx, constraint);
    // A referenced min/max with no possible match invalidates every
    // candidate in the set.
    for (agg, def_empty) in constraint.aggs.iter().zip(&bounds.definitely_empty) {
        if is_min_max(agg.func) && *def_empty {
            return false;
        }
    }
    let phi = match eval_expr_interval(&constraint.expr, &bounds.intervals) {
        Ok(i) => i,
        Err(_) => return true, // cannot exclude
    };
    let (op, range) = comparison_ranges(&constraint.comparison);
    coverage::reval_exists(op, &range, phi)
}

/// Conjunction over the constraint set: certified only if every constraint
/// certifies.
pub fn aceval_forall(tree: &KdTree, cover: &ParCover, constraints: &ConstraintSet) -> bool {
    constraints
        .constraints
        .iter()
        .enumerate()
        .all(|(i, c)| aceval_forall_one(tree, cover, i, c))
}

/// Conjunction over the constraint set: the set can hold repairs only if
/// every constraint is individually satisfiable.
pub fn aceval_exists(tree: &KdTree, cover: &ParCover, constraints: &ConstraintSet) -> bool {
    constraints
        .constraints
        .iter()
        .enumerate()
        .all(|(i, c)| aceval_exists_one(tree, cover, i, c))
}

/// Exact satisfaction check of one candidate against every constraint, via a
/// fully covering cluster set and merged aggregates.
pub fn eval_candidate_exact(
    tree: &KdTree,
    ds: &Dataset,
    query: &UserQuery,
    constraints: &ConstraintSet,
    cand: &RepairCandidate,
) -> (bool, FullCover) {
    let cond = BoundCondition::bind(ds, query, cand).expect("validated query");
    let cover = full_cover_cluster_set(tree, ds, &cond);
    let ok = constraints.constraints.iter().enumerate().all(|(i, c)| {
        let bindings = merge_exact(tree, &cover, i, c);
        match eval_expr_scalar(&c.expr, &bindings) {
            Ok(v) => c.comparison.satisfied(v),
            Err(_) => false, // empty min/max or undefined division
        }
    });
    (ok, cover)
}
