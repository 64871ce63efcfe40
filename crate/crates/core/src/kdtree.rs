//! B-way kd-tree over the query's predicate attributes with materialized
//! per-cluster statistics.
//!
//! Split attributes cycle round-robin with depth; each split partitions a
//! node's rows into up to B near-equal quantile groups on the split attribute
//! (rows with equal values are never separated). Nodes holding at most S rows
//! stay leaves and keep their row ids so partially covered leaves can be
//! resolved tuple by tuple.
//!
//! Every cluster stores, per filter-aggregate query of the constraint set:
//! the number of matching tuples, the aggregate over them, and for sums the
//! negative and positive parts separately - the partial sums the range-based
//! bounds need for worst-case reasoning over partially covered clusters.

use serde::Serialize;
use thiserror::Error;

use crate::constraint::{AggFn, ConstraintSet};
use crate::dataset::Dataset;
use crate::interval::Interval;
use crate::query::{ComparisonOp, QueryError, UserQuery};

#[derive(Debug, Error)]
pub enum TreeError {
    #[error("bad tree parameters: {0}")]
    BadParams(String),
    #[error("cannot index an empty dataset")]
    EmptyDataset,
    #[error("unknown attribute {0:?} in constraint filter")]
    UnknownAttribute(String),
    #[error(transparent)]
    Query(#[from] QueryError),
}

/// A constraint-set aggregate resolved against dataset columns and flattened
/// into a single global index space.
#[derive(Debug, Clone)]
pub struct ResolvedAgg {
    pub func: AggFn,
    pub input_col: Option<usize>,
    pub filter: Vec<(usize, ComparisonOp, f64)>,
}

impl ResolvedAgg {
    pub fn matches(&self, ds: &Dataset, row: usize) -> bool {
        self.filter
            .iter()
            .all(|(col, op, c)| op.test(ds.value(row, *col), *c))
    }
}

/// Maps (constraint index, per-constraint aggregate id) to a flat index.
#[derive(Debug, Clone)]
pub struct AggLayout {
    pub aggs: Vec<ResolvedAgg>,
    offsets: Vec<usize>,
}

impl AggLayout {
    pub fn build(ds: &Dataset, constraints: &ConstraintSet) -> Result<Self, TreeError> {
        let mut aggs = Vec::new();
        let mut offsets = Vec::with_capacity(constraints.constraints.len());
        for c in &constraints.constraints {
            offsets.push(aggs.len());
            for a in &c.aggs {
                let input_col = match &a.input_attr {
                    Some(attr) => Some(
                        ds.attr_index(attr)
                            .ok_or_else(|| TreeError::UnknownAttribute(attr.clone()))?,
                    ),
                    None => None,
                };
                let filter = a
                    .filter
                    .iter()
                    .map(|fc| {
                        ds.attr_index(&fc.attr)
                            .map(|col| (col, fc.op, fc.constant))
                            .ok_or_else(|| TreeError::UnknownAttribute(fc.attr.clone()))
                    })
                    .collect::<Result<_, _>>()?;
                aggs.push(ResolvedAgg {
                    func: a.func,
                    input_col,
                    filter,
                });
            }
        }
        Ok(Self { aggs, offsets })
    }

    pub fn flat(&self, constraint_idx: usize, agg_id: usize) -> usize {
        self.offsets[constraint_idx] + agg_id
    }

    pub fn len(&self) -> usize {
        self.aggs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.aggs.is_empty()
    }
}

/// Materialized statistics of one aggregate over one cluster.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AggSummary {
    /// Tuples in the cluster satisfying the aggregate's filter.
    pub match_count: usize,
    /// count/sum/min/max over the matching tuples. Min of nothing is +inf,
    /// max of nothing is -inf; gate on `match_count` for exact reads.
    pub value: f64,
    /// Sum of the negative matching inputs (sum aggregates only).
    pub neg_sum: f64,
    /// Sum of the positive matching inputs (sum aggregates only).
    pub pos_sum: f64,
}

impl AggSummary {
    fn empty(func: AggFn) -> Self {
        AggSummary {
            match_count: 0,
            value: match func {
                AggFn::Min => f64::INFINITY,
                AggFn::Max => f64::NEG_INFINITY,
                _ => 0.0,
            },
            neg_sum: 0.0,
            pos_sum: 0.0,
        }
    }

    fn merge(&mut self, other: &AggSummary, func: AggFn) {
        self.match_count += other.match_count;
        self.neg_sum += other.neg_sum;
        self.pos_sum += other.pos_sum;
        self.value = match func {
            AggFn::Count | AggFn::Sum => self.value + other.value,
            AggFn::Min => self.value.min(other.value),
            AggFn::Max => self.value.max(other.value),
            AggFn::Avg => unreachable!("avg is rewritten before indexing"),
        };
    }
}

#[derive(Debug, Clone)]
pub struct ClusterSummary {
    pub count: usize,
    /// Min/max of each predicate attribute over the cluster's rows, in the
    /// query's predicate order.
    pub attr_bounds: Vec<Interval>,
    pub aggs: Vec<AggSummary>,
}

#[derive(Debug)]
pub struct KdNode {
    pub summary: ClusterSummary,
    pub children: Vec<usize>,
    /// Row ids; populated for leaves only.
    pub rows: Vec<u32>,
}

impl KdNode {
    pub fn is_leaf(&self) -> bool {
        self.children.is_empty()
    }
}

#[derive(Debug)]
pub struct KdTree {
    nodes: Vec<KdNode>,
    root: usize,
    pub branching: usize,
    pub bucket_size: usize,
    /// Dataset column index of each predicate attribute, in query order.
    pub attr_cols: Vec<usize>,
    pub layout: AggLayout,
}

#[derive(Debug, Clone, Serialize)]
pub struct LevelStats {
    pub level: usize,
    pub nodes: usize,
    pub min_count: usize,
    pub max_count: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct TreeStats {
    pub node_count: usize,
    pub leaf_count: usize,
    pub min_leaf_size: usize,
    pub max_leaf_size: usize,
    pub levels: Vec<LevelStats>,
}

/// Exact summary of a row set: one scan computing bounds, counts and the
/// per-aggregate statistics.
pub fn summarize(
    rows: &[u32],
    ds: &Dataset,
    attr_cols: &[usize],
    layout: &AggLayout,
) -> ClusterSummary {
    debug_assert!(!rows.is_empty(), "summaries exist for non-empty clusters");
    let mut attr_bounds = vec![(f64::INFINITY, f64::NEG_INFINITY); attr_cols.len()];
    let mut aggs: Vec<AggSummary> = layout
        .aggs
        .iter()
        .map(|a| AggSummary::empty(a.func))
        .collect();
    for &row in rows {
        let row = row as usize;
        for (i, &col) in attr_cols.iter().enumerate() {
            let v = ds.value(row, col);
            attr_bounds[i].0 = attr_bounds[i].0.min(v);
            attr_bounds[i].1 = attr_bounds[i].1.max(v);
        }
        for (spec, acc) in layout.aggs.iter().zip(&mut aggs) {
            if !spec.matches(ds, row) {
                continue;
            }
            acc.match_count += 1;
            match spec.func {
                AggFn::Count => acc.value += 1.0,
                AggFn::Sum => {
                    let v = ds.value(row, spec.input_col.expect("sum has an input"));
                    acc.value += v;
                    if v < 0.0 {
                        acc.neg_sum += v;
                    } else if v > 0.0 {
                        acc.pos_sum += v;
                    }
                }
                AggFn::Min => {
                    let v = ds.value(row, spec.input_col.expect("min has an input"));
                    acc.value = acc.value.min(v);
                }
                AggFn::Max => {
                    let v = ds.value(row, spec.input_col.expect("max has an input"));
                    acc.value = acc.value.max(v);
                }
                AggFn::Avg => unreachable!("avg is rewritten before indexing"),
            }
        }
    }
    ClusterSummary {
        count: rows.len(),
        attr_bounds: attr_bounds
            .into_iter()
            .map(|(lo, hi)| Interval::new(lo, hi))
            .collect(),
        aggs,
    }
}

fn merge_summaries(children: &[&ClusterSummary], layout: &AggLayout) -> ClusterSummary {
    let first = children[0];
    let mut out = ClusterSummary {
        count: first.count,
        attr_bounds: first.attr_bounds.clone(),
        aggs: first.aggs.clone(),
    };
    for child in &children[1..] {
        out.count += child.count;
        for (b, cb) in out.attr_bounds.iter_mut().zip(&child.attr_bounds) {
            *b = b.hull(cb);
        }
        for ((acc, other), spec) in out.aggs.iter_mut().zip(&child.aggs).zip(&layout.aggs) {
            acc.merge(other, spec.func);
        }
    }
    out
}

struct Builder<'a> {
    ds: &'a Dataset,
    attr_cols: Vec<usize>,
    layout: AggLayout,
    branching: usize,
    bucket_size: usize,
    nodes: Vec<KdNode>,
}

impl Builder<'_> {
    fn build(&mut self, mut rows: Vec<u32>, depth: usize) -> usize {
        let m = self.attr_cols.len();
        let split_col = if rows.len() <= self.bucket_size {
            None
        } else {
            // Round-robin by depth; skip attributes that are constant on
            // this row set. All constant means the node stays a leaf.
            (0..m)
                .map(|off| self.attr_cols[(depth + off) % m])
                .find(|&col| {
                    let first = self.ds.value(rows[0] as usize, col);
                    rows.iter()
                        .any(|&r| self.ds.value(r as usize, col) != first)
                })
        };

        let Some(col) = split_col else {
            let summary = summarize(&rows, self.ds, &self.attr_cols, &self.layout);
            self.nodes.push(KdNode {
                summary,
                children: Vec::new(),
                rows,
            });
            return self.nodes.len() - 1;
        };

        rows.sort_unstable_by(|&a, &b| {
            self.ds
                .value(a as usize, col)
                .total_cmp(&self.ds.value(b as usize, col))
                .then(a.cmp(&b))
        });
        let n = rows.len();
        let value = |i: usize| self.ds.value(rows[i] as usize, col);
        let mut cuts: Vec<usize> = Vec::new();
        for i in 1..self.branching {
            let mut cut = i * n / self.branching;
            while cut > 0 && cut < n && value(cut) == value(cut - 1) {
                cut += 1;
            }
            if cut > 0 && cut < n && cuts.last().is_none_or(|&c| cut > c) {
                cuts.push(cut);
            }
        }
        if cuts.is_empty() {
            // Quantile cuts all collapsed onto runs of equal values; cut at
            // the first value change instead (one exists: not all equal).
            let first_change = (1..n).find(|&i| value(i) != value(0)).unwrap();
            cuts.push(first_change);
        }

        let mut children = Vec::with_capacity(cuts.len() + 1);
        let mut start = 0;
        for cut in cuts.iter().copied().chain(std::iter::once(n)) {
            let group = rows[start..cut].to_vec();
            start = cut;
            children.push(self.build(group, depth + 1));
        }
        let child_summaries: Vec<&ClusterSummary> =
            children.iter().map(|&c| &self.nodes[c].summary).collect();
        let summary = merge_summaries(&child_summaries, &self.layout);
        self.nodes.push(KdNode {
            summary,
            children,
            rows: Vec::new(),
        });
        self.nodes.len() - 1
    }
}

/// Builds the tree for `query`'s predicate attributes, materializing the
/// aggregates of `constraints` in every cluster.
pub fn build_tree(
    ds: &Dataset,
    query: &UserQuery,
    constraints: &ConstraintSet,
    branching: usize,
    bucket_size: usize,
) -> Result<KdTree, TreeError> {
    if branching < 2 {
        return Err(TreeError::BadParams(format!(
            "branching factor {branching} < 2"
        )));
    }
    if bucket_size < 1 {
        return Err(TreeError::BadParams("bucket size 0".into()));
    }
    if ds.row_count() == 0 {
        return Err(TreeError::EmptyDataset);
    }
    query.validate(ds)?;
    let attr_cols: Vec<usize> = query
        .predicates
        .iter()
        .map(|p| ds.attr_index(&p.attr).expect("validated attribute"))
        .collect();
    let layout = AggLayout::build(ds, constraints)?;
    let mut builder = Builder {
        ds,
        attr_cols: attr_cols.clone(),
        layout: layout.clone(),
        branching,
        bucket_size,
        nodes: Vec::new(),
    };
    let all_rows: Vec<u32> = (0..ds.row_count() as u32).collect();
    let root = builder.build(all_rows, 0);
    Ok(KdTree {
        nodes: builder.nodes,
        root,
        branching,
        bucket_size,
        attr_cols,
        layout,
    })
}

impl KdTree {
    pub fn root(&self) -> usize {
        self.root
    }

    pub fn node(&self, id: usize) -> &KdNode {
        &self.nodes[id]
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn stats(&self) -> TreeStats {
        let mut levels: Vec<LevelStats> = Vec::new();
        let mut frontier = vec![self.root];
        let mut level = 0;
        let (mut min_leaf, mut max_leaf, mut leaf_count) = (usize::MAX, 0, 0);
        while !frontier.is_empty() {
            let mut next = Vec::new();
            let mut stat = LevelStats {
                level,
                nodes: frontier.len(),
                min_count: usize::MAX,
                max_count: 0,
            };
            for &id in &frontier {
                let node = &self.nodes[id];
                stat.min_count = stat.min_count.min(node.summary.count);
                stat.max_count = stat.max_count.max(node.summary.count);
                if node.is_leaf() {
                    leaf_count += 1;
                    min_leaf = min_leaf.min(node.summary.count);
                    max_leaf = max_leaf.max(node.summary.count);
                } else {
                    next.extend_from_slice(&node.children);
                }
            }
            levels.push(stat);
            frontier = next;
            level += 1;
        }
        TreeStats {
            node_count: self.nodes.len(),
            leaf_count,
            min_leaf_size: min_leaf,
            max_leaf_size: max_leaf,
            levels,
        }
    }

    /// Perturbs the root's first aggregate. Only used to demonstrate that
    /// cross-algorithm verification detects inconsistent summaries.
    #[doc(hidden)]
    pub fn corrupt_root_summary(&mut self) {
        if let Some(agg) = self.nodes[self.root].summary.aggs.first_mut() {
            agg.value += 1.0;
            agg.match_count += 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constraint::parse_constraint;
    use crate::query::{Constant, Predicate};
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;
    use std::collections::BTreeSet;

    fn fig1_dataset() -> Dataset {
        // t1..t4 with T in {31, 27, 37, 34}; G codes: F=0, M=1; Y binary.
        Dataset::new(
            vec!["T".into(), "G".into(), "Y".into()],
            vec![
                vec![31.0, 27.0, 37.0, 34.0],
                vec![0.0, 0.0, 1.0, 1.0],
                vec![1.0, 1.0, 1.0, 1.0],
            ],
            BTreeSet::from(["G".to_string()]),
        )
        .unwrap()
    }

    fn t_query() -> UserQuery {
        UserQuery::with_unit_weights(vec![Predicate {
            attr: "T".into(),
            op: ComparisonOp::Ge,
            constant: Constant::Scalar(33.0),
        }])
    }

    fn spd_constraints(ds: &Dataset) -> ConstraintSet {
        let schema: Vec<String> = ds.schema().to_vec();
        ConstraintSet::single(
            parse_constraint(
                "count(G == 1 && Y == 1) / count(G == 1) \
                 - count(G == 0 && Y == 1) / count(G == 0) <= 0.2",
                &schema,
            )
            .unwrap(),
        )
    }

    #[test]
    fn four_row_tree_structure() {
        let ds = fig1_dataset();
        let tree = build_tree(&ds, &t_query(), &spd_constraints(&ds), 2, 1).unwrap();
        let root = tree.node(tree.root());
        assert_eq!(root.summary.count, 4);
        assert_eq!(root.summary.attr_bounds[0], Interval::new(27.0, 37.0));
        assert_eq!(root.children.len(), 2);
        let lo = tree.node(root.children[0]);
        let hi = tree.node(root.children[1]);
        assert_eq!(lo.summary.attr_bounds[0], Interval::new(27.0, 31.0));
        assert_eq!(hi.summary.attr_bounds[0], Interval::new(34.0, 37.0));
        // count(G == 1) per side of the split.
        assert_eq!(lo.summary.aggs[1].match_count, 0);
        assert_eq!(hi.summary.aggs[1].match_count, 2);
    }

    #[test]
    fn whole_dataset_fits_one_leaf() {
        let ds = fig1_dataset();
        let tree = build_tree(&ds, &t_query(), &spd_constraints(&ds), 5, 15).unwrap();
        assert_eq!(tree.node_count(), 1);
        assert!(tree.node(tree.root()).is_leaf());
    }

    #[test]
    fn bad_params_rejected() {
        let ds = fig1_dataset();
        assert!(matches!(
            build_tree(&ds, &t_query(), &spd_constraints(&ds), 1, 15),
            Err(TreeError::BadParams(_))
        ));
        assert!(matches!(
            build_tree(&ds, &t_query(), &spd_constraints(&ds), 5, 0),
            Err(TreeError::BadParams(_))
        ));
    }

    #[test]
    fn empty_dataset_rejected() {
        let ds = Dataset::new(
            vec!["T".into(), "G".into(), "Y".into()],
            vec![vec![], vec![], vec![]],
            BTreeSet::from(["G".to_string()]),
        )
        .unwrap();
        assert!(matches!(
            build_tree(&ds, &t_query(), &spd_constraints(&ds), 5, 15),
            Err(TreeError::EmptyDataset)
        ));
    }

    #[test]
    fn sign_split_of_sums() {
        let ds = Dataset::new(
            vec!["a".into(), "x".into()],
            vec![vec![1.0, 2.0, 3.0], vec![-3.0, 5.0, -1.0]],
            BTreeSet::new(),
        )
        .unwrap();
        let q = UserQuery::with_unit_weights(vec![Predicate {
            attr: "a".into(),
            op: ComparisonOp::Ge,
            constant: Constant::Scalar(1.0),
        }]);
        let schema: Vec<String> = ds.schema().to_vec();
        let cs = ConstraintSet::single(parse_constraint("sum(x) <= 100", &schema).unwrap());
        let tree = build_tree(&ds, &q, &cs, 2, 1).unwrap();
        let root = tree.node(tree.root()).summary.aggs[0];
        assert_eq!(root.value, 1.0);
        assert_eq!(root.neg_sum, -4.0);
        assert_eq!(root.pos_sum, 5.0);
        assert_eq!(root.value, root.neg_sum + root.pos_sum);
    }

    #[test]
    fn partition_and_merge_invariants() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let n = rng.random_range(1..=200);
            let a: Vec<f64> = (0..n).map(|_| rng.random_range(0..40) as f64).collect();
            let x: Vec<f64> = (0..n).map(|_| rng.random_range(-20..=20) as f64).collect();
            let ds =
                Dataset::new(vec!["a".into(), "x".into()], vec![a, x], BTreeSet::new()).unwrap();
            let q = UserQuery::with_unit_weights(vec![Predicate {
                attr: "a".into(),
                op: ComparisonOp::Le,
                constant: Constant::Scalar(20.0),
            }]);
            let schema: Vec<String> = ds.schema().to_vec();
            let cs = ConstraintSet::single(
                parse_constraint("sum(x, a >= 10) + min(x) - max(x, a <= 30) <= 0", &schema)
                    .unwrap(),
            );
            let b = rng.random_range(2..=5);
            let s = rng.random_range(1..=8);
            let tree = build_tree(&ds, &q, &cs, b, s).unwrap();

            // Every row in exactly one leaf.
            let mut seen = vec![false; n];
            for id in 0..tree.node_count() {
                let node = tree.node(id);
                if node.is_leaf() {
                    for &r in &node.rows {
                        assert!(!seen[r as usize], "row {r} in two leaves");
                        seen[r as usize] = true;
                    }
                    assert!(node.summary.count <= s || b_all_equal(&ds, &tree, node));
                } else {
                    assert!(node.summary.count > s);
                    assert!(node.children.len() >= 2 && node.children.len() <= b);
                }
                // Bounds are attained.
                for (i, bnd) in node.summary.attr_bounds.iter().enumerate() {
                    let col = tree.attr_cols[i];
                    let vals = collect_rows(&tree, id)
                        .iter()
                        .map(|&r| ds.value(r as usize, col))
                        .collect::<Vec<_>>();
                    assert!(vals.contains(&bnd.lo));
                    assert!(vals.contains(&bnd.hi));
                }
            }
            assert!(seen.iter().all(|&s| s), "row missing from leaves");

            // Root summary equals a direct summary of all rows.
            let all: Vec<u32> = (0..n as u32).collect();
            let direct = summarize(&all, &ds, &tree.attr_cols, &tree.layout);
            let root = &tree.node(tree.root()).summary;
            assert_eq!(root.count, direct.count);
            for (a, b) in root.aggs.iter().zip(&direct.aggs) {
                assert_eq!(a.match_count, b.match_count);
                assert_eq!(a.value, b.value);
                assert_eq!(a.neg_sum, b.neg_sum);
                assert_eq!(a.pos_sum, b.pos_sum);
            }
        }
    }

    fn b_all_equal(ds: &Dataset, tree: &KdTree, node: &KdNode) -> bool {
        tree.attr_cols.iter().all(|&col| {
            let first = ds.value(node.rows[0] as usize, col);
            node.rows
                .iter()
                .all(|&r| ds.value(r as usize, col) == first)
        })
    }

    fn collect_rows(tree: &KdTree, id: usize) -> Vec<u32> {
        let node = tree.node(id);
        if node.is_leaf() {
            node.rows.clone()
        } else {
            node.children
                .iter()
                .flat_map(|&c| collect_rows(tree, c))
                .collect()
        }
    }

    #[test]
    fn constant_attribute_becomes_leaf() {
        let ds = Dataset::new(vec!["a".into()], vec![vec![5.0; 40]], BTreeSet::new()).unwrap();
        let q = UserQuery::with_unit_weights(vec![Predicate {
            attr: "a".into(),
            op: ComparisonOp::Ge,
            constant: Constant::Scalar(5.0),
        }]);
        let schema: Vec<String> = ds.schema().to_vec();
        let cs = ConstraintSet::single(parse_constraint("count() >= 0", &schema).unwrap());
        let tree = build_tree(&ds, &q, &cs, 5, 15).unwrap();
        assert_eq!(tree.node_count(), 1, "constant attribute cannot split");
    }
}
