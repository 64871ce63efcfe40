//! Shared fixtures for the criterion benches: a mid-sized synthetic instance
//! with a parity constraint whose repairs sit some way into the search.

use std::collections::BTreeMap;

use repairkit::datagen::{generate, AttrSpec, Correlation, Distribution, GenSpec};
use repairkit::{
    parse_constraint, ComparisonOp, Constant, ConstraintSet, Dataset, Predicate, UserQuery,
};

pub fn bench_instance(rows: usize) -> (Dataset, UserQuery, ConstraintSet) {
    let spec = GenSpec {
        rows,
        seed: 20240901,
        attrs: vec![
            AttrSpec {
                name: "income".into(),
                dist: Distribution::UniformInt { lo: 0, hi: 29 },
            },
            AttrSpec {
                name: "children".into(),
                dist: Distribution::UniformInt { lo: 0, hi: 9 },
            },
            AttrSpec {
                name: "county".into(),
                dist: Distribution::UniformInt { lo: 1, hi: 50 },
            },
            AttrSpec {
                name: "race".into(),
                dist: Distribution::Categorical {
                    labels: vec!["group1".into(), "group2".into()],
                    weights: vec![0.65, 0.35],
                },
            },
            AttrSpec {
                name: "label".into(),
                dist: Distribution::Label {
                    group_attr: "race".into(),
                    positive_rates: BTreeMap::from([
                        ("group1".to_string(), 0.9),
                        ("group2".to_string(), 0.45),
                    ]),
                },
            },
        ],
        correlations: vec![Correlation {
            a: "county".into(),
            b: "race".into(),
            rho: 0.95,
        }],
    };
    let (ds, _) = generate(&spec).unwrap();
    let query = UserQuery::with_unit_weights(vec![
        Predicate {
            attr: "income".into(),
            op: ComparisonOp::Ge,
            constant: Constant::Scalar(12.0),
        },
        Predicate {
            attr: "children".into(),
            op: ComparisonOp::Ge,
            constant: Constant::Scalar(4.0),
        },
        Predicate {
            attr: "county".into(),
            op: ComparisonOp::Le,
            constant: Constant::Scalar(3.0),
        },
    ]);
    let schema: Vec<String> = ds.schema().to_vec();
    let constraints = ConstraintSet::new(vec![
        parse_constraint(
            "count(race == 0 && label == 1) / count(race == 0) \
             - count(race == 1 && label == 1) / count(race == 1) in [0.41, 0.47]",
            &schema,
        )
        .unwrap(),
        parse_constraint("count() >= 8000", &schema).unwrap(),
    ]);
    (ds, query, constraints)
}
