//! Range pruning: best-first search over candidate sets.
//!
//! Three priority orders drive the search. Open sets wait in a queue keyed by
//! the lower bound of their distance; certified sets (every member is a
//! repair) become lazy streams of concrete candidates in distance order; the
//! running top-k is the merged prefix of those streams. A popped open set is
//! either certified whole, discarded whole, or subdivided; a set that can no
//! longer be subdivided is resolved as a single concrete candidate. The
//! search stops once the k-th best distance beats the lower bound of every
//! open set.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::time::Instant;

use crate::bounds::{aceval_exists, aceval_forall, eval_candidate_exact};
use crate::constraint::ConstraintSet;
use crate::coverage::par_cover_cluster_set;
use crate::dataset::Dataset;
use crate::kdtree::KdTree;
use crate::query::{
    cmp_values, CandidateEnumerator, CandidateSet, CandidateSpace, IdxRange, QueryError, UserQuery,
};
use crate::search::{Repair, RepairResult, SearchStats};

/// Splits every non-singleton range into up to `l` contiguous, near-equal
/// pieces and returns the cross product of the piece choices. `None` when
/// every range is already a single value.
pub fn range_divide(set: &CandidateSet, l: usize) -> Option<Vec<CandidateSet>> {
    debug_assert!(l >= 2);
    if set.ranges.iter().all(IdxRange::is_singleton) {
        return None;
    }
    let piecewise: Vec<Vec<IdxRange>> = set
        .ranges
        .iter()
        .map(|r| {
            let n = r.len();
            let parts = l.min(n);
            (0..parts)
                .map(|i| IdxRange {
                    lo: r.lo + i * n / parts,
                    hi: r.lo + (i + 1) * n / parts - 1,
                })
                .collect()
        })
        .collect();
    let mut out = vec![CandidateSet { ranges: Vec::new() }];
    for pieces in &piecewise {
        let mut next = Vec::with_capacity(out.len() * pieces.len());
        for partial in &out {
            for piece in pieces {
                let mut ranges = partial.ranges.clone();
                ranges.push(*piece);
                next.push(CandidateSet { ranges });
            }
        }
        out = next;
    }
    Some(out)
}

struct OpenSet {
    lb: f64,
    set: CandidateSet,
}

impl PartialEq for OpenSet {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for OpenSet {}
impl PartialOrd for OpenSet {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for OpenSet {
    fn cmp(&self, other: &Self) -> Ordering {
        // Reversed: BinaryHeap pops the smallest (lb, lo vector, hi vector).
        other
            .lb
            .total_cmp(&self.lb)
            .then_with(|| {
                let a: Vec<usize> = other.set.ranges.iter().map(|r| r.lo).collect();
                let b: Vec<usize> = self.set.ranges.iter().map(|r| r.lo).collect();
                a.cmp(&b)
            })
            .then_with(|| {
                let a: Vec<usize> = other.set.ranges.iter().map(|r| r.hi).collect();
                let b: Vec<usize> = self.set.ranges.iter().map(|r| r.hi).collect();
                a.cmp(&b)
            })
    }
}

struct StreamHead {
    distance: f64,
    values: Vec<f64>,
    stream: usize,
}

impl PartialEq for StreamHead {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for StreamHead {}
impl PartialOrd for StreamHead {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for StreamHead {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .distance
            .total_cmp(&self.distance)
            .then_with(|| cmp_values(&other.values, &self.values))
    }
}

/// Merges certified-set streams and directly resolved candidates into the
/// running top-k list, expanding streams only as far as needed.
struct TopkCollector<'a> {
    space: &'a CandidateSpace,
    streams: Vec<CandidateEnumerator<'a>>,
    heads: BinaryHeap<StreamHead>,
    /// Materialized candidates sorted by (distance, constants).
    buffer: Vec<(f64, Vec<f64>)>,
}

impl<'a> TopkCollector<'a> {
    fn new(space: &'a CandidateSpace) -> Self {
        Self {
            space,
            streams: Vec::new(),
            heads: BinaryHeap::new(),
            buffer: Vec::new(),
        }
    }

    fn add_certified_set(&mut self, set: CandidateSet) {
        let mut stream = self.space.enumerate_set(set);
        if let Some((cand, distance)) = stream.next() {
            self.heads.push(StreamHead {
                distance,
                values: cand.flat(),
                stream: self.streams.len(),
            });
        }
        self.streams.push(stream);
    }

    fn insert(&mut self, distance: f64, values: Vec<f64>) {
        let pos = self
            .buffer
            .partition_point(|(d, v)| match d.total_cmp(&distance) {
                Ordering::Less => true,
                Ordering::Greater => false,
                Ordering::Equal => cmp_values(v, &values) == Ordering::Less,
            });
        self.buffer.insert(pos, (distance, values));
    }

    /// Advances streams until the buffer's first k entries are the true k
    /// best across everything collected so far.
    fn refresh(&mut self, k: usize) {
        while let Some(head) = self.heads.peek() {
            if self.buffer.len() >= k {
                let kth = &self.buffer[k - 1];
                let head_beats_kth = match head.distance.total_cmp(&kth.0) {
                    Ordering::Less => true,
                    Ordering::Greater => false,
                    Ordering::Equal => cmp_values(&head.values, &kth.1) == Ordering::Less,
                };
                if !head_beats_kth {
                    break;
                }
            }
            let head = self.heads.pop().unwrap();
            if let Some((cand, distance)) = self.streams[head.stream].next() {
                self.heads.push(StreamHead {
                    distance,
                    values: cand.flat(),
                    stream: head.stream,
                });
            }
            self.insert(head.distance, head.values);
        }
    }

    fn kth_distance(&self, k: usize) -> Option<f64> {
        self.buffer.get(k - 1).map(|(d, _)| *d)
    }

    fn take_topk(mut self, k: usize) -> Vec<Repair> {
        self.buffer.truncate(k);
        self.buffer
            .into_iter()
            .map(|(distance, constants)| Repair {
                constants,
                distance,
            })
            .collect()
    }
}

pub fn rp_topk(
    tree: &KdTree,
    ds: &Dataset,
    query: &UserQuery,
    constraints: &ConstraintSet,
    k: usize,
    split_factor: usize,
) -> Result<RepairResult, QueryError> {
    assert!(k >= 1, "k must be at least 1");
    assert!(split_factor >= 2, "split factor must be at least 2");
    let start = Instant::now();
    let space = CandidateSpace::new(ds, query)?;
    let mut stats = SearchStats::default();
    let mut queue: BinaryHeap<OpenSet> = BinaryHeap::new();
    let full = space.full_set();
    queue.push(OpenSet {
        lb: space.set_distance_lb(&full),
        set: full,
    });
    let mut collector = TopkCollector::new(&space);

    while let Some(open) = queue.pop() {
        stats.nce += 1;
        let cover = par_cover_cluster_set(tree, query, &space, &open.set);
        stats.nca += cover.clusters_accessed;
        if aceval_forall(tree, &cover, constraints) {
            collector.add_certified_set(open.set);
        } else if aceval_exists(tree, &cover, constraints) {
            match range_divide(&open.set, split_factor) {
                Some(children) => {
                    for child in children {
                        if space.has_candidates(&child) {
                            queue.push(OpenSet {
                                lb: space.set_distance_lb(&child),
                                set: child,
                            });
                        }
                    }
                }
                None => {
                    // Every range is a single value: resolve the concrete
                    // candidate exactly.
                    stats.nce += 1;
                    let values: Vec<f64> = open
                        .set
                        .ranges
                        .iter()
                        .enumerate()
                        .map(|(i, r)| space.slots[i].domain[r.lo])
                        .collect();
                    let cand = space.candidate_from_values(&values);
                    let (ok, cover) = eval_candidate_exact(tree, ds, query, constraints, &cand);
                    stats.nca += cover.clusters_accessed;
                    stats.tuple_accesses += cover.tuple_accesses;
                    if ok {
                        collector.insert(space.values_distance(&values), values);
                    }
                }
            }
        }
        collector.refresh(k);
        if let Some(kth) = collector.kth_distance(k) {
            // Every remaining open set's lower bound is at least the head's;
            // equal bounds keep searching since a closer tie-break may hide
            // inside.
            match queue.peek() {
                None => break,
                Some(next) if next.lb > kth => break,
                _ => {}
            }
        }
    }
    collector.refresh(k);
    let repairs = collector.take_topk(k);
    stats.repairs_found = repairs.len();
    stats.wall_time_s = start.elapsed().as_secs_f64();
    Ok(RepairResult { repairs, stats })
}
