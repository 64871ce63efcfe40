//! User queries, repair candidates, candidate sets and the repair distance.
//!
//! A user query is a conjunction of per-attribute comparisons. A repair
//! candidate keeps the attributes and operators and substitutes new constants
//! drawn from each attribute's active domain. Candidate *sets* describe a
//! whole block of candidates at once through one index range per constant
//! slot into the sorted active domain.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::collections::HashSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::Dataset;
use crate::interval::Interval;

#[derive(Debug, Error)]
pub enum QueryError {
    #[error("unknown attribute {0:?}")]
    UnknownAttribute(String),
    #[error("attribute {0:?} appears in more than one predicate")]
    DuplicateAttribute(String),
    #[error("categorical attribute {0:?} only supports == and !=")]
    CategoricalOp(String),
    #[error("range constant with lower bound above upper bound on {0:?}")]
    BadRangeConstant(String),
    #[error("{0} weights for {1} predicates")]
    WeightArity(usize, usize),
    #[error("weights must be non-negative with at least one positive")]
    BadWeights,
    #[error("attribute {0:?} has an empty active domain")]
    EmptyDomain(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ComparisonOp {
    #[serde(rename = "<")]
    Lt,
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = ">")]
    Gt,
    #[serde(rename = ">=")]
    Ge,
    #[serde(rename = "==", alias = "=")]
    Eq,
    #[serde(rename = "!=")]
    Neq,
    #[serde(rename = "in", alias = "between")]
    InRange,
}

impl ComparisonOp {
    /// Scalar comparison `value op constant` for the six point operators.
    pub fn test(self, value: f64, constant: f64) -> bool {
        match self {
            ComparisonOp::Lt => value < constant,
            ComparisonOp::Le => value <= constant,
            ComparisonOp::Gt => value > constant,
            ComparisonOp::Ge => value >= constant,
            ComparisonOp::Eq => value == constant,
            ComparisonOp::Neq => value != constant,
            ComparisonOp::InRange => unreachable!("range op takes two constants"),
        }
    }
}

/// Constant of a predicate: a single value, or the two endpoints of an
/// interval membership test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Constant {
    Scalar(f64),
    Range(f64, f64),
}

impl Constant {
    pub fn slot_count(&self) -> usize {
        match self {
            Constant::Scalar(_) => 1,
            Constant::Range(..) => 2,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Predicate {
    pub attr: String,
    pub op: ComparisonOp,
    #[serde(rename = "const")]
    pub constant: Constant,
}

impl Predicate {
    /// Does `value` satisfy this predicate with constant `c` substituted?
    pub fn test_with(&self, value: f64, c: &Constant) -> bool {
        match (self.op, c) {
            (ComparisonOp::InRange, Constant::Range(lo, hi)) => *lo <= value && value <= *hi,
            (op, Constant::Scalar(v)) => op.test(value, *v),
            _ => unreachable!("constant arity mismatch"),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct UserQuery {
    pub predicates: Vec<Predicate>,
    /// One non-negative weight per predicate; an empty vector means
    /// unit weights.
    #[serde(default)]
    pub weights: Vec<f64>,
}

impl UserQuery {
    /// Equal weights of 1 for every predicate, the default configuration.
    pub fn with_unit_weights(predicates: Vec<Predicate>) -> Self {
        let weights = vec![1.0; predicates.len()];
        Self {
            predicates,
            weights,
        }
    }

    pub fn validate(&self, ds: &Dataset) -> Result<(), QueryError> {
        if self.predicates.is_empty() {
            return Err(QueryError::WeightArity(self.weights.len(), 0));
        }
        if self.weights.len() != self.predicates.len() {
            return Err(QueryError::WeightArity(
                self.weights.len(),
                self.predicates.len(),
            ));
        }
        if self.weights.iter().any(|w| *w < 0.0 || !w.is_finite())
            || self.weights.iter().all(|w| *w == 0.0)
        {
            return Err(QueryError::BadWeights);
        }
        let mut seen = HashSet::new();
        for p in &self.predicates {
            if ds.attr_index(&p.attr).is_none() {
                return Err(QueryError::UnknownAttribute(p.attr.clone()));
            }
            if !seen.insert(p.attr.as_str()) {
                return Err(QueryError::DuplicateAttribute(p.attr.clone()));
            }
            if ds.is_categorical(&p.attr) && !matches!(p.op, ComparisonOp::Eq | ComparisonOp::Neq) {
                return Err(QueryError::CategoricalOp(p.attr.clone()));
            }
            match (p.op, &p.constant) {
                (ComparisonOp::InRange, Constant::Range(lo, hi)) => {
                    if lo > hi {
                        return Err(QueryError::BadRangeConstant(p.attr.clone()));
                    }
                }
                (ComparisonOp::InRange, _) | (_, Constant::Range(..)) => {
                    return Err(QueryError::BadRangeConstant(p.attr.clone()));
                }
                _ => {}
            }
        }
        Ok(())
    }

    /// The query's own constants as a repair candidate.
    pub fn original_candidate(&self) -> RepairCandidate {
        RepairCandidate {
            constants: self.predicates.iter().map(|p| p.constant).collect(),
        }
    }
}

/// A choice of constants, one per predicate.
#[derive(Debug, Clone, PartialEq)]
pub struct RepairCandidate {
    pub constants: Vec<Constant>,
}

impl RepairCandidate {
    /// Constants flattened into one number per slot (range constants
    /// contribute their two endpoints in order).
    pub fn flat(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for c in &self.constants {
            match c {
                Constant::Scalar(v) => out.push(*v),
                Constant::Range(lo, hi) => {
                    out.push(*lo);
                    out.push(*hi);
                }
            }
        }
        out
    }
}

/// Distance between an original constant and its replacement: relative
/// difference for numeric attributes, 0/1 for categorical ones.
pub fn predicate_distance(original: f64, repaired: f64, is_categorical: bool) -> f64 {
    if is_categorical {
        return if original == repaired { 0.0 } else { 1.0 };
    }
    if original == 0.0 {
        (repaired - original).abs()
    } else {
        (repaired - original).abs() / original.abs()
    }
}

fn constant_distance(original: &Constant, repaired: &Constant, is_categorical: bool) -> f64 {
    match (original, repaired) {
        (Constant::Scalar(a), Constant::Scalar(b)) => predicate_distance(*a, *b, is_categorical),
        (Constant::Range(alo, ahi), Constant::Range(blo, bhi)) => {
            // Mean of the endpoint distances.
            0.5 * (predicate_distance(*alo, *blo, is_categorical)
                + predicate_distance(*ahi, *bhi, is_categorical))
        }
        _ => unreachable!("constant arity mismatch"),
    }
}

/// Weighted sum of per-predicate constant distances. The dataset resolves
/// which predicates compare categorical codes.
pub fn repair_distance(ds: &Dataset, query: &UserQuery, cand: &RepairCandidate) -> f64 {
    debug_assert_eq!(cand.constants.len(), query.predicates.len());
    query
        .predicates
        .iter()
        .zip(&cand.constants)
        .zip(&query.weights)
        .map(|((p, c), w)| w * constant_distance(&p.constant, c, ds.is_categorical(&p.attr)))
        .sum()
}

/// One constant slot of the candidate space. Scalar predicates own a single
/// slot; range predicates own two (weight split evenly between them).
#[derive(Debug, Clone)]
pub struct Slot {
    pub pred_idx: usize,
    pub domain: Vec<f64>,
    pub original: f64,
    pub weight: f64,
    pub is_categorical: bool,
    /// Index of the partner slot for a range predicate's (lo, hi) pair.
    pub range_partner: Option<usize>,
    /// True for the lower-endpoint slot of a range predicate.
    pub is_range_lo: bool,
}

/// Inclusive index range into a slot's sorted domain. `lo > hi` encodes the
/// empty range.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IdxRange {
    pub lo: usize,
    pub hi: usize,
}

impl IdxRange {
    pub fn len(&self) -> usize {
        if self.lo > self.hi {
            0
        } else {
            self.hi - self.lo + 1
        }
    }

    pub fn is_empty(&self) -> bool {
        self.lo > self.hi
    }

    pub fn is_singleton(&self) -> bool {
        self.lo == self.hi
    }

    /// Smallest index range covering all domain members inside `[vlo, vhi]`.
    pub fn from_value_interval(domain: &[f64], vlo: f64, vhi: f64) -> IdxRange {
        let lo = domain.partition_point(|v| *v < vlo);
        let hi = domain.partition_point(|v| *v <= vhi);
        if lo >= hi {
            IdxRange { lo: 1, hi: 0 }
        } else {
            IdxRange { lo, hi: hi - 1 }
        }
    }
}

/// A block of repair candidates: one index range per slot.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CandidateSet {
    pub ranges: Vec<IdxRange>,
}

impl CandidateSet {
    /// Value interval spanned by the range of slot `i`.
    pub fn value_interval(&self, space: &CandidateSpace, i: usize) -> Interval {
        let r = self.ranges[i];
        let dom = &space.slots[i].domain;
        Interval::new(dom[r.lo], dom[r.hi])
    }
}

/// The full search space: per-slot sorted domains, the original constants and
/// the distance weights.
#[derive(Debug, Clone)]
pub struct CandidateSpace {
    pub slots: Vec<Slot>,
    /// Per slot: domain indices ordered by (distance to original, value).
    by_distance: Vec<Vec<u32>>,
}

impl CandidateSpace {
    pub fn new(ds: &Dataset, query: &UserQuery) -> Result<Self, QueryError> {
        query.validate(ds)?;
        let mut slots = Vec::new();
        for (pi, pred) in query.predicates.iter().enumerate() {
            let domain = ds
                .active_domain(&pred.attr)
                .map_err(|_| QueryError::UnknownAttribute(pred.attr.clone()))?
                .values;
            if domain.is_empty() {
                return Err(QueryError::EmptyDomain(pred.attr.clone()));
            }
            let is_cat = ds.is_categorical(&pred.attr);
            match pred.constant {
                Constant::Scalar(v) => slots.push(Slot {
                    pred_idx: pi,
                    domain,
                    original: v,
                    weight: query.weights[pi],
                    is_categorical: is_cat,
                    range_partner: None,
                    is_range_lo: false,
                }),
                Constant::Range(lo, hi) => {
                    let base = slots.len();
                    slots.push(Slot {
                        pred_idx: pi,
                        domain: domain.clone(),
                        original: lo,
                        weight: query.weights[pi] / 2.0,
                        is_categorical: is_cat,
                        range_partner: Some(base + 1),
                        is_range_lo: true,
                    });
                    slots.push(Slot {
                        pred_idx: pi,
                        domain,
                        original: hi,
                        weight: query.weights[pi] / 2.0,
                        is_categorical: is_cat,
                        range_partner: Some(base),
                        is_range_lo: false,
                    });
                }
            }
        }
        let by_distance = slots
            .iter()
            .map(|s| {
                let mut idx: Vec<u32> = (0..s.domain.len() as u32).collect();
                idx.sort_by(|&a, &b| {
                    let da = predicate_distance(s.original, s.domain[a as usize], s.is_categorical);
                    let db = predicate_distance(s.original, s.domain[b as usize], s.is_categorical);
                    da.total_cmp(&db).then(a.cmp(&b))
                });
                idx
            })
            .collect();
        Ok(Self { slots, by_distance })
    }

    pub fn slot_count(&self) -> usize {
        self.slots.len()
    }

    /// Number of index combinations in the cross product of all slot domains.
    /// Range predicates count ordered endpoint pairs, so this is an upper
    /// bound on the number of well-formed candidates.
    pub fn size(&self) -> u128 {
        self.slots.iter().map(|s| s.domain.len() as u128).product()
    }

    /// The candidate set covering the entire space.
    pub fn full_set(&self) -> CandidateSet {
        CandidateSet {
            ranges: self
                .slots
                .iter()
                .map(|s| IdxRange {
                    lo: 0,
                    hi: s.domain.len() - 1,
                })
                .collect(),
        }
    }

    /// Distance contribution of slot `i` if its constant is `value`.
    fn slot_distance(&self, i: usize, value: f64) -> f64 {
        let s = &self.slots[i];
        s.weight * predicate_distance(s.original, value, s.is_categorical)
    }

    /// Distance of a concrete slot-value vector, accumulated in slot order -
    /// the same float operation order the enumerator uses, so distances agree
    /// bit-exactly across engines.
    pub fn values_distance(&self, values: &[f64]) -> f64 {
        values
            .iter()
            .enumerate()
            .map(|(i, &v)| self.slot_distance(i, v))
            .sum()
    }

    /// Reassembles per-slot values into a candidate (range slots pair up).
    pub fn candidate_from_values(&self, values: &[f64]) -> RepairCandidate {
        let mut constants = Vec::new();
        let mut i = 0;
        while i < self.slots.len() {
            match self.slots[i].range_partner {
                Some(_) => {
                    constants.push(Constant::Range(values[i], values[i + 1]));
                    i += 2;
                }
                None => {
                    constants.push(Constant::Scalar(values[i]));
                    i += 1;
                }
            }
        }
        RepairCandidate { constants }
    }

    /// True when every range is non-empty and every range-predicate pair of
    /// ranges admits at least one ordered (lo, hi) choice. With index ranges
    /// over the active domain, membership in the data is structural.
    pub fn has_candidates(&self, set: &CandidateSet) -> bool {
        for (i, r) in set.ranges.iter().enumerate() {
            if r.is_empty() {
                return false;
            }
            let s = &self.slots[i];
            if s.is_range_lo {
                let partner = set.ranges[s.range_partner.unwrap()];
                if partner.is_empty() || s.domain[r.lo] > s.domain[partner.hi] {
                    return false;
                }
            }
        }
        true
    }

    /// Lower bound on the repair distance over all candidates in `set`: per
    /// slot, zero if the original constant falls inside the spanned value
    /// interval, otherwise the distance to the nearer endpoint.
    pub fn set_distance_lb(&self, set: &CandidateSet) -> f64 {
        set.ranges
            .iter()
            .enumerate()
            .map(|(i, r)| {
                let s = &self.slots[i];
                let (vlo, vhi) = (s.domain[r.lo], s.domain[r.hi]);
                if s.original >= vlo && s.original <= vhi {
                    0.0
                } else {
                    self.slot_distance(i, vlo).min(self.slot_distance(i, vhi))
                }
            })
            .sum()
    }

    /// All candidates of the space in nondecreasing distance order, ties
    /// broken by ascending lexicographic order of the flattened constants.
    pub fn enumerate_by_distance(&self) -> CandidateEnumerator<'_> {
        CandidateEnumerator::new(self, self.full_set())
    }

    /// Enumeration restricted to a candidate set's ranges.
    pub fn enumerate_set(&self, set: CandidateSet) -> CandidateEnumerator<'_> {
        CandidateEnumerator::new(self, set)
    }
}

/// Heap entry for the enumeration frontier, min-ordered by
/// (distance, flattened constant vector).
struct Frontier {
    distance: f64,
    values: Vec<f64>,
    positions: Vec<u32>,
}

impl PartialEq for Frontier {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Frontier {}
impl PartialOrd for Frontier {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Frontier {
    fn cmp(&self, other: &Self) -> Ordering {
        // Reversed for a min-heap on BinaryHeap.
        other
            .distance
            .total_cmp(&self.distance)
            .then_with(|| cmp_values(&other.values, &self.values))
    }
}

pub(crate) fn cmp_values(a: &[f64], b: &[f64]) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.total_cmp(y) {
            Ordering::Equal => {}
            o => return o,
        }
    }
    a.len().cmp(&b.len())
}

/// Best-first enumeration of candidates in nondecreasing distance order.
///
/// Positions index the per-slot distance-ordered lists; each pop advances one
/// position per slot, with a visited set to keep the frontier duplicate-free.
/// Endpoint pairs of range predicates that would be inverted (lo > hi) are
/// expanded but not yielded.
pub struct CandidateEnumerator<'a> {
    space: &'a CandidateSpace,
    /// Per slot: positions (into `by_distance`) admitted by the set's range.
    lists: Vec<Vec<u32>>,
    heap: BinaryHeap<Frontier>,
    visited: HashSet<Vec<u32>>,
}

impl<'a> CandidateEnumerator<'a> {
    fn new(space: &'a CandidateSpace, set: CandidateSet) -> Self {
        let lists: Vec<Vec<u32>> = space
            .by_distance
            .iter()
            .enumerate()
            .map(|(i, order)| {
                let r = set.ranges[i];
                order
                    .iter()
                    .copied()
                    .filter(|&d| (d as usize) >= r.lo && (d as usize) <= r.hi)
                    .collect()
            })
            .collect();
        let mut e = Self {
            space,
            lists,
            heap: BinaryHeap::new(),
            visited: HashSet::new(),
        };
        if !e.lists.iter().any(Vec::is_empty) {
            let start = vec![0u32; e.lists.len()];
            e.push(start);
        }
        e
    }

    fn push(&mut self, positions: Vec<u32>) {
        if self.visited.contains(&positions) {
            return;
        }
        let values: Vec<f64> = positions
            .iter()
            .enumerate()
            .map(|(i, &p)| self.space.slots[i].domain[self.lists[i][p as usize] as usize])
            .collect();
        let distance = values
            .iter()
            .enumerate()
            .map(|(i, &v)| self.space.slot_distance(i, v))
            .sum();
        self.visited.insert(positions.clone());
        self.heap.push(Frontier {
            distance,
            values,
            positions,
        });
    }

    fn values_well_formed(&self, values: &[f64]) -> bool {
        self.space
            .slots
            .iter()
            .enumerate()
            .all(|(i, s)| !s.is_range_lo || values[i] <= values[s.range_partner.unwrap()])
    }
}

impl Iterator for CandidateEnumerator<'_> {
    type Item = (RepairCandidate, f64);

    fn next(&mut self) -> Option<Self::Item> {
        while let Some(top) = self.heap.pop() {
            for i in 0..top.positions.len() {
                if (top.positions[i] as usize) + 1 < self.lists[i].len() {
                    let mut succ = top.positions.clone();
                    succ[i] += 1;
                    self.push(succ);
                }
            }
            if self.values_well_formed(&top.values) {
                let cand = self.space.candidate_from_values(&top.values);
                return Some((cand, top.distance));
            }
        }
        None
    }
}

/// A candidate's condition bound to dataset columns, for per-tuple tests.
#[derive(Debug, Clone)]
pub struct BoundCondition {
    pub tests: Vec<(usize, ComparisonOp, Constant)>,
}

impl BoundCondition {
    pub fn bind(
        ds: &Dataset,
        query: &UserQuery,
        cand: &RepairCandidate,
    ) -> Result<Self, QueryError> {
        let mut tests = Vec::with_capacity(query.predicates.len());
        for (p, c) in query.predicates.iter().zip(&cand.constants) {
            let col = ds
                .attr_index(&p.attr)
                .ok_or_else(|| QueryError::UnknownAttribute(p.attr.clone()))?;
            tests.push((col, p.op, *c));
        }
        Ok(Self { tests })
    }

    pub fn matches_row(&self, ds: &Dataset, row: usize) -> bool {
        self.tests.iter().all(|(col, op, c)| {
            let v = ds.value(row, *col);
            match (op, c) {
                (ComparisonOp::InRange, Constant::Range(lo, hi)) => *lo <= v && v <= *hi,
                (op, Constant::Scalar(k)) => op.test(v, *k),
                _ => unreachable!("constant arity mismatch"),
            }
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeSet;

    fn ds_with(attr_vals: &[(&str, Vec<f64>, bool)]) -> Dataset {
        let schema = attr_vals.iter().map(|(n, _, _)| n.to_string()).collect();
        let cols = attr_vals.iter().map(|(_, v, _)| v.clone()).collect();
        let cats: BTreeSet<String> = attr_vals
            .iter()
            .filter(|(_, _, c)| *c)
            .map(|(n, _, _)| n.to_string())
            .collect();
        Dataset::new(schema, cols, cats).unwrap()
    }

    fn ge(attr: &str, c: f64) -> Predicate {
        Predicate {
            attr: attr.into(),
            op: ComparisonOp::Ge,
            constant: Constant::Scalar(c),
        }
    }

    #[test]
    fn predicate_distance_matches_worked_terms() {
        assert!((predicate_distance(3.80, 3.90, false) - 0.0263158).abs() < 1e-6);
        assert_eq!(predicate_distance(33.0, 33.0, false), 0.0);
        assert_eq!(predicate_distance(0.0, 1.0, false), 1.0);
        assert_eq!(predicate_distance(0.0, 2.0, true), 1.0);
        assert_eq!(predicate_distance(2.0, 2.0, true), 0.0);
    }

    #[test]
    fn repair_distance_weighted_sum() {
        let ds = ds_with(&[
            ("Major", vec![0.0, 1.0], true),
            ("TestScore", vec![33.0, 30.0], false),
            ("GPA", vec![3.8, 3.9], false),
        ]);
        let q = UserQuery::with_unit_weights(vec![
            Predicate {
                attr: "Major".into(),
                op: ComparisonOp::Eq,
                constant: Constant::Scalar(0.0),
            },
            ge("TestScore", 33.0),
            ge("GPA", 3.80),
        ]);
        let cand = RepairCandidate {
            constants: vec![
                Constant::Scalar(1.0),
                Constant::Scalar(33.0),
                Constant::Scalar(3.9),
            ],
        };
        let d = repair_distance(&ds, &q, &cand);
        assert!((d - 1.0263).abs() < 1e-4);
        assert_eq!(repair_distance(&ds, &q, &q.original_candidate()), 0.0);
    }

    #[test]
    fn weight_scales_linearly() {
        let ds = ds_with(&[("a", vec![10.0, 15.0], false)]);
        let q = UserQuery {
            predicates: vec![ge("a", 10.0)],
            weights: vec![2.0],
        };
        let cand = RepairCandidate {
            constants: vec![Constant::Scalar(15.0)],
        };
        assert_eq!(repair_distance(&ds, &q, &cand), 1.0);
    }

    #[test]
    fn set_distance_lb_examples() {
        let ds = ds_with(&[("T", vec![27.0, 31.0, 34.0, 37.0], false)]);
        let q = UserQuery::with_unit_weights(vec![ge("T", 33.0)]);
        let space = CandidateSpace::new(&ds, &q).unwrap();
        // Range spanning the original constant.
        let full = space.full_set();
        assert_eq!(space.set_distance_lb(&full), 0.0);
        // Range {34, 37}: nearest endpoint 34.
        let set = CandidateSet {
            ranges: vec![IdxRange { lo: 2, hi: 3 }],
        };
        assert!((space.set_distance_lb(&set) - 1.0 / 33.0).abs() < 1e-9);
        // Degenerate range [v, v] equals the point distance.
        let point = CandidateSet {
            ranges: vec![IdxRange { lo: 0, hi: 0 }],
        };
        let cand = RepairCandidate {
            constants: vec![Constant::Scalar(27.0)],
        };
        assert_eq!(
            space.set_distance_lb(&point),
            repair_distance(&ds, &q, &cand)
        );
    }

    #[test]
    fn enumeration_order_with_tie_break() {
        let ds = ds_with(&[("a", vec![8.0, 10.0, 12.0], false)]);
        let q = UserQuery::with_unit_weights(vec![ge("a", 10.0)]);
        let space = CandidateSpace::new(&ds, &q).unwrap();
        let got: Vec<f64> = space
            .enumerate_by_distance()
            .map(|(c, _)| c.flat()[0])
            .collect();
        // 10 (d=0), then 8 before 12 (both d=0.2, tie broken by value).
        assert_eq!(got, vec![10.0, 8.0, 12.0]);
    }

    #[test]
    fn enumeration_covers_cross_product_nondecreasing() {
        let ds = ds_with(&[
            ("a", vec![1.0, 2.0, 3.0], false),
            ("b", vec![5.0, 6.0, 9.0], false),
        ]);
        let q = UserQuery::with_unit_weights(vec![ge("a", 2.0), ge("b", 6.0)]);
        let space = CandidateSpace::new(&ds, &q).unwrap();
        let all: Vec<(RepairCandidate, f64)> = space.enumerate_by_distance().collect();
        assert_eq!(all.len(), 9);
        for w in all.windows(2) {
            assert!(w[0].1 <= w[1].1);
        }
        let unique: HashSet<Vec<u64>> = all
            .iter()
            .map(|(c, _)| c.flat().iter().map(|v| v.to_bits()).collect())
            .collect();
        assert_eq!(unique.len(), 9);
        // First candidate is the original query (distance 0).
        assert_eq!(all[0].0, q.original_candidate());
    }

    #[test]
    fn empty_domain_rejected() {
        let ds = ds_with(&[("a", vec![], false)]);
        let q = UserQuery::with_unit_weights(vec![ge("a", 1.0)]);
        assert!(matches!(
            CandidateSpace::new(&ds, &q),
            Err(QueryError::EmptyDomain(_))
        ));
    }

    #[test]
    fn range_predicate_slots_and_enumeration() {
        let ds = ds_with(&[("a", vec![1.0, 2.0, 3.0], false)]);
        let q = UserQuery::with_unit_weights(vec![Predicate {
            attr: "a".into(),
            op: ComparisonOp::InRange,
            constant: Constant::Range(1.0, 3.0),
        }]);
        let space = CandidateSpace::new(&ds, &q).unwrap();
        assert_eq!(space.slot_count(), 2);
        let all: Vec<(RepairCandidate, f64)> = space.enumerate_by_distance().collect();
        // Ordered pairs (lo <= hi) over a 3-value domain: 6 candidates.
        assert_eq!(all.len(), 6);
        assert_eq!(all[0].0.constants, vec![Constant::Range(1.0, 3.0)]);
        for w in all.windows(2) {
            assert!(w[0].1 <= w[1].1);
        }
    }

    #[test]
    fn idx_range_from_value_interval() {
        let dom = [8.0, 10.0];
        assert!(IdxRange::from_value_interval(&dom, 9.0, 9.5).is_empty());
        assert_eq!(
            IdxRange::from_value_interval(&dom, 8.0, 10.0),
            IdxRange { lo: 0, hi: 1 }
        );
        assert_eq!(
            IdxRange::from_value_interval(&dom, 9.0, 11.0),
            IdxRange { lo: 1, hi: 1 }
        );
    }

    #[test]
    fn has_candidates_is_structural() {
        let ds = ds_with(&[("a", vec![8.0, 10.0], false)]);
        let q = UserQuery::with_unit_weights(vec![ge("a", 8.0)]);
        let space = CandidateSpace::new(&ds, &q).unwrap();
        assert!(space.has_candidates(&space.full_set()));
        // Value range (9, 9.5] maps to an empty index range: no candidate
        // there differs from one at a <= 8.
        let empty = IdxRange::from_value_interval(&space.slots[0].domain, 9.0, 9.5);
        assert!(!space.has_candidates(&CandidateSet {
            ranges: vec![empty]
        }));
        // Range-predicate slots must admit an ordered (lo, hi) pair.
        let q = UserQuery::with_unit_weights(vec![Predicate {
            attr: "a".into(),
            op: ComparisonOp::InRange,
            constant: Constant::Range(8.0, 10.0),
        }]);
        let space = CandidateSpace::new(&ds, &q).unwrap();
        assert!(space.has_candidates(&space.full_set()));
        let inverted = CandidateSet {
            ranges: vec![IdxRange { lo: 1, hi: 1 }, IdxRange { lo: 0, hi: 0 }],
        };
        assert!(!space.has_candidates(&inverted));
    }

    #[test]
    fn distance_invariant_under_predicate_permutation() {
        let ds = ds_with(&[
            ("a", vec![1.0, 5.0], false),
            ("b", vec![2.0, 8.0], false),
            ("c", vec![0.0, 1.0], true),
        ]);
        let q = UserQuery {
            predicates: vec![
                ge("a", 5.0),
                ge("b", 2.0),
                Predicate {
                    attr: "c".into(),
                    op: ComparisonOp::Eq,
                    constant: Constant::Scalar(0.0),
                },
            ],
            weights: vec![1.0, 2.0, 3.0],
        };
        let cand = RepairCandidate {
            constants: vec![
                Constant::Scalar(1.0),
                Constant::Scalar(8.0),
                Constant::Scalar(1.0),
            ],
        };
        let d = repair_distance(&ds, &q, &cand);
        // Rotate predicates, weights, and constants together.
        let q2 = UserQuery {
            predicates: vec![
                q.predicates[2].clone(),
                q.predicates[0].clone(),
                q.predicates[1].clone(),
            ],
            weights: vec![3.0, 1.0, 2.0],
        };
        let cand2 = RepairCandidate {
            constants: vec![cand.constants[2], cand.constants[0], cand.constants[1]],
        };
        assert_eq!(d, repair_distance(&ds, &q2, &cand2));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn arb_space() -> impl Strategy<Value = (Vec<f64>, f64, bool)> {
            (
                proptest::collection::btree_set(-20i32..20, 1..10),
                -20i32..20,
                proptest::bool::ANY,
            )
                .prop_map(|(dom, orig, cat)| {
                    (
                        dom.into_iter().map(|v| v as f64).collect(),
                        orig as f64,
                        cat,
                    )
                })
        }

        proptest! {
            // The set lower bound never exceeds the distance of any member.
            #[test]
            fn set_lb_is_sound(
                spaces in proptest::collection::vec(arb_space(), 1..4),
                picks in proptest::collection::vec((0usize..100, 0usize..100, 0usize..100), 1..4),
            ) {
                let m = spaces.len().min(picks.len());
                let mut schema = Vec::new();
                let mut columns = Vec::new();
                let mut cats = std::collections::BTreeSet::new();
                let mut predicates = Vec::new();
                for (i, (dom, orig, cat)) in spaces.iter().take(m).enumerate() {
                    schema.push(format!("a{i}"));
                    columns.push(dom.clone());
                    if *cat {
                        cats.insert(format!("a{i}"));
                    }
                    predicates.push(Predicate {
                        attr: format!("a{i}"),
                        op: if *cat { ComparisonOp::Eq } else { ComparisonOp::Ge },
                        constant: Constant::Scalar(*orig),
                    });
                }
                // Equalize column lengths by padding with the first value.
                let rows = columns.iter().map(Vec::len).max().unwrap();
                for c in &mut columns {
                    while c.len() < rows {
                        c.push(c[0]);
                    }
                }
                let ds = Dataset::new(schema, columns, cats).unwrap();
                let q = UserQuery::with_unit_weights(predicates);
                let space = CandidateSpace::new(&ds, &q).unwrap();
                // Random set and a member candidate of it.
                let mut ranges = Vec::new();
                let mut constants = Vec::new();
                for (i, (lo_pick, hi_pick, at)) in picks.iter().take(m).enumerate() {
                    let len = space.slots[i].domain.len();
                    let lo = lo_pick % len;
                    let hi = lo + (hi_pick % (len - lo));
                    ranges.push(IdxRange { lo, hi });
                    let idx = lo + at % (hi - lo + 1);
                    constants.push(Constant::Scalar(space.slots[i].domain[idx]));
                }
                let set = CandidateSet { ranges };
                let cand = RepairCandidate { constants };
                let lb = space.set_distance_lb(&set);
                let exact = repair_distance(&ds, &q, &cand);
                prop_assert!(lb <= exact + 1e-12, "lb {lb} > exact {exact}");
            }
        }
    }
}
