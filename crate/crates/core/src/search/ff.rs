//! Full cluster filtering: enumerate candidates by distance, certify each
//! one exactly against the tree, stop after k hits.

use std::time::Instant;

use crate::bounds::eval_candidate_exact;
use crate::constraint::ConstraintSet;
use crate::dataset::Dataset;
use crate::kdtree::KdTree;
use crate::query::{CandidateSpace, QueryError, UserQuery};
use crate::search::{Repair, RepairResult, SearchStats};

pub fn ff_topk(
    tree: &KdTree,
    ds: &Dataset,
    query: &UserQuery,
    constraints: &ConstraintSet,
    k: usize,
) -> Result<RepairResult, QueryError> {
    assert!(k >= 1, "k must be at least 1");
    let start = Instant::now();
    let space = CandidateSpace::new(ds, query)?;
    let mut stats = SearchStats::default();
    let mut repairs = Vec::with_capacity(k);
    for (cand, distance) in space.enumerate_by_distance() {
        stats.nce += 1;
        let (ok, cover) = eval_candidate_exact(tree, ds, query, constraints, &cand);
        stats.nca += cover.clusters_accessed;
        stats.tuple_accesses += cover.tuple_accesses;
        if ok {
            repairs.push(Repair {
                constants: cand.flat(),
                distance,
            });
            if repairs.len() == k {
                break;
            }
        }
    }
    stats.repairs_found = repairs.len();
    stats.wall_time_s = start.elapsed().as_secs_f64();
    Ok(RepairResult { repairs, stats })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constraint::parse_constraint;
    use crate::kdtree::build_tree;
    use crate::query::{ComparisonOp, Constant, Predicate};
    use std::collections::BTreeSet;

    fn fixture() -> (Dataset, UserQuery) {
        let ds = Dataset::new(
            vec!["T".into(), "G".into(), "Y".into()],
            vec![
                vec![31.0, 27.0, 37.0, 34.0],
                vec![0.0, 0.0, 1.0, 1.0],
                vec![1.0, 1.0, 1.0, 1.0],
            ],
            BTreeSet::from(["G".to_string()]),
        )
        .unwrap();
        let q = UserQuery::with_unit_weights(vec![Predicate {
            attr: "T".into(),
            op: ComparisonOp::Ge,
            constant: Constant::Scalar(33.0),
        }]);
        (ds, q)
    }

    #[test]
    fn all_candidates_valid_returns_k_nearest() {
        let (ds, q) = fixture();
        let schema: Vec<String> = ds.schema().to_vec();
        let cs = ConstraintSet::single(parse_constraint("count() >= 0", &schema).unwrap());
        let tree = build_tree(&ds, &q, &cs, 2, 1).unwrap();
        let res = ff_topk(&tree, &ds, &q, &cs, 3).unwrap();
        assert_eq!(res.repairs.len(), 3);
        // Nearest three constants to 33: 34 (1/33), 31 (2/33), 37 (4/33).
        assert_eq!(res.repairs[0].constants, vec![34.0]);
        assert_eq!(res.repairs[1].constants, vec![31.0]);
        assert_eq!(res.repairs[2].constants, vec![37.0]);
        assert_eq!(res.stats.nce, 3);
    }

    #[test]
    fn unsatisfiable_constraint_exhausts_space() {
        let (ds, q) = fixture();
        let schema: Vec<String> = ds.schema().to_vec();
        let cs = ConstraintSet::single(parse_constraint("count() >= 5", &schema).unwrap());
        let tree = build_tree(&ds, &q, &cs, 2, 1).unwrap();
        let res = ff_topk(&tree, &ds, &q, &cs, 3).unwrap();
        assert!(res.repairs.is_empty());
        assert_eq!(res.stats.nce, 4, "every candidate was checked");
    }

    #[test]
    fn spd_constraint_on_fixture() {
        let (ds, q) = fixture();
        let schema: Vec<String> = ds.schema().to_vec();
        let cs = ConstraintSet::single(
            parse_constraint(
                "count(G == 1 && Y == 1) / count(G == 1) \
                 - count(G == 0 && Y == 1) / count(G == 0) <= 0.2",
                &schema,
            )
            .unwrap(),
        );
        let tree = build_tree(&ds, &q, &cs, 2, 1).unwrap();
        let res = ff_topk(&tree, &ds, &q, &cs, 7).unwrap();
        // Only T >= 31 and T >= 27 balance the two groups.
        assert_eq!(res.repairs.len(), 2);
        assert_eq!(res.repairs[0].constants, vec![31.0]);
        assert_eq!(res.repairs[1].constants, vec![27.0]);
    }
}
