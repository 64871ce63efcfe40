//! Benchmark sweeps: a cross product of axis values, each cell run per
//! algorithm with repetitions, medians reported as CSV.

use std::io::Write;
use std::path::Path;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use serde::Deserialize;

use crate::config::Algo;
use repairkit::datagen::GenSpec;
use repairkit::oracle::bf_topk;
use repairkit::{
    build_tree, ff_topk, load_csv, parse_constraint, rp_topk, ConstraintSet, Dataset, UserQuery,
};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    /// Synthetic data source; `sizes` rewrites its row count per cell.
    pub gen: Option<GenSpec>,
    /// Fixed CSV source (alternative to `gen`).
    pub dataset: Option<std::path::PathBuf>,
    #[serde(default)]
    pub categoricals: Vec<String>,
    pub query: UserQuery,
    /// Constraint templates; `{bl}` and `{bu}` are substituted per bounds
    /// cell.
    pub constraints: Vec<String>,
    #[serde(default = "default_algos")]
    pub algos: Vec<String>,
    #[serde(default)]
    pub sizes: Vec<usize>,
    #[serde(default)]
    pub branching: Vec<usize>,
    #[serde(default)]
    pub bucket: Vec<usize>,
    #[serde(default)]
    pub k: Vec<usize>,
    #[serde(default)]
    pub bounds: Vec<(f64, f64)>,
    #[serde(default = "default_split")]
    pub split: usize,
    #[serde(default = "default_reps")]
    pub reps: usize,
}

fn default_algos() -> Vec<String> {
    vec!["bf".into(), "ff".into(), "rp".into()]
}
fn default_split() -> usize {
    2
}
fn default_reps() -> usize {
    5
}

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        0.5 * (xs[n / 2 - 1] + xs[n / 2])
    }
}

fn substitute(template: &str, bounds: Option<(f64, f64)>) -> String {
    match bounds {
        Some((bl, bu)) => template
            .replace("{bl}", &bl.to_string())
            .replace("{bu}", &bu.to_string()),
        None => template.to_string(),
    }
}

pub fn cmd_bench(sweep_path: &Path, out: Option<&Path>) -> Result<ExitCode> {
    let text = std::fs::read_to_string(sweep_path)
        .with_context(|| format!("reading {}", sweep_path.display()))?;
    let sweep: SweepConfig = serde_json::from_str(&text).context("parsing sweep config")?;
    if sweep.reps < 1 {
        bail!("reps must be at least 1");
    }
    let mut query = sweep.query.clone();
    if query.weights.is_empty() {
        query.weights = vec![1.0; query.predicates.len()];
    }

    let sizes = if sweep.sizes.is_empty() {
        vec![sweep.gen.as_ref().map(|g| g.rows).unwrap_or(0)]
    } else {
        sweep.sizes.clone()
    };
    let branchings = non_empty_or(&sweep.branching, 5);
    let buckets = non_empty_or(&sweep.bucket, 15);
    let ks = non_empty_or(&sweep.k, 7);
    let bounds: Vec<Option<(f64, f64)>> = if sweep.bounds.is_empty() {
        vec![None]
    } else {
        sweep.bounds.iter().copied().map(Some).collect()
    };

    let mut rows = String::new();
    rows.push_str(
        "rows,branching,bucket,k,bl,bu,algo,wall_time_s,nce,nca,tuple_accesses,repairs_found\n",
    );

    for &size in &sizes {
        let ds = load_cell_dataset(&sweep, size)?;
        let schema: Vec<String> = ds.schema().to_vec();
        for bound in &bounds {
            let constraints = sweep
                .constraints
                .iter()
                .map(|t| {
                    let text = substitute(t, *bound);
                    parse_constraint(&text, &schema).with_context(|| format!("in {text:?}"))
                })
                .collect::<Result<Vec<_>>>()?;
            let constraints = ConstraintSet::new(constraints);
            for &b in &branchings {
                for &s in &buckets {
                    let tree = build_tree(&ds, &query, &constraints, b, s)?;
                    for &k in &ks {
                        for algo in &sweep.algos {
                            let algo = match algo.as_str() {
                                "bf" => Algo::Bf,
                                "ff" => Algo::Ff,
                                "rp" => Algo::Rp,
                                other => bail!("unknown algorithm {other:?}"),
                            };
                            let mut times = Vec::with_capacity(sweep.reps);
                            let mut last = None;
                            for _ in 0..sweep.reps {
                                let res = match algo {
                                    Algo::Bf => bf_topk(&ds, &query, &constraints, k)?,
                                    Algo::Ff => ff_topk(&tree, &ds, &query, &constraints, k)?,
                                    Algo::Rp => {
                                        rp_topk(&tree, &ds, &query, &constraints, k, sweep.split)?
                                    }
                                };
                                times.push(res.stats.wall_time_s);
                                last = Some(res);
                            }
                            let res = last.expect("reps >= 1");
                            let (bl, bu) = match bound {
                                Some((bl, bu)) => (bl.to_string(), bu.to_string()),
                                None => (String::new(), String::new()),
                            };
                            rows.push_str(&format!(
                                "{},{},{},{},{},{},{},{:.6},{},{},{},{}\n",
                                ds.row_count(),
                                b,
                                s,
                                k,
                                bl,
                                bu,
                                algo.name(),
                                median(times),
                                res.stats.nce,
                                res.stats.nca,
                                res.stats.tuple_accesses,
                                res.stats.repairs_found,
                            ));
                        }
                    }
                }
            }
        }
    }

    match out {
        Some(path) => {
            std::fs::write(path, rows).with_context(|| format!("writing {}", path.display()))?
        }
        None => {
            std::io::stdout().write_all(rows.as_bytes())?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn non_empty_or(xs: &[usize], default: usize) -> Vec<usize> {
    if xs.is_empty() {
        vec![default]
    } else {
        xs.to_vec()
    }
}

fn load_cell_dataset(sweep: &SweepConfig, size: usize) -> Result<Dataset> {
    if let Some(gen) = &sweep.gen {
        let mut spec = gen.clone();
        if size > 0 {
            spec.rows = size;
        }
        let (ds, _) = repairkit::datagen::generate(&spec)?;
        return Ok(ds);
    }
    let Some(path) = &sweep.dataset else {
        bail!("sweep needs either a gen spec or a dataset path");
    };
    let cats = sweep.categoricals.iter().cloned().collect();
    let (ds, _) = load_csv(path, &cats)?;
    Ok(ds)
}
