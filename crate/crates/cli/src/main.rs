mod bench;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use serde::Serialize;

use config::{Algo, RunArgs, RunConfig};
use repairkit::dataset::CategoricalMaps;
use repairkit::oracle::bf_topk;
use repairkit::{
    build_tree, ff_topk, load_csv, parse_constraint, rp_topk, CandidateSpace, ConstraintSet,
    Dataset, RepairResult,
};

#[derive(Parser)]
#[command(
    name = "repairkit",
    about = "Repairs the constants of a conjunctive query until its result satisfies aggregate constraints",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one search and emit the top-k repairs as JSON
    Repair(RunArgs),
    /// Run bf, ff and rp and check that the repair lists agree
    Verify {
        #[command(flatten)]
        args: RunArgs,
        /// Refuse to brute-force candidate spaces larger than this
        #[arg(long, default_value_t = 1_000_000)]
        max_space: u128,
        /// Corrupt tree summaries after the build (exercises detection)
        #[arg(long, hide = true)]
        corrupt_tree: bool,
    },
    /// Generate a synthetic CSV dataset from a generator spec
    Gen {
        /// Generator spec JSON file
        #[arg(long)]
        spec: PathBuf,
        /// Output CSV path (label-code mapping lands next to it)
        #[arg(long)]
        out: PathBuf,
        /// Override the spec's seed
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run a benchmark sweep and emit one CSV row per cell and algorithm
    Bench {
        /// Sweep config JSON file
        #[arg(long)]
        sweep: PathBuf,
        /// Output CSV path (stdout when absent)
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Serialize)]
struct Output<'a> {
    schema_version: u32,
    algorithm: &'a str,
    k: usize,
    seed: u64,
    #[serde(skip_serializing_if = "CategoricalMaps::is_empty")]
    categorical_maps: CategoricalMaps,
    #[serde(flatten)]
    result: RepairResult,
}

fn load_inputs(config: &RunConfig) -> Result<(Dataset, CategoricalMaps, ConstraintSet)> {
    let (ds, maps) = load_csv(&config.dataset, &config.categoricals)
        .with_context(|| format!("loading {}", config.dataset.display()))?;
    let schema: Vec<String> = ds.schema().to_vec();
    let parsed = config
        .constraints
        .iter()
        .map(|text| parse_constraint(text, &schema).with_context(|| format!("in {text:?}")))
        .collect::<Result<Vec<_>>>()?;
    Ok((ds, maps, ConstraintSet::new(parsed)))
}

fn run_algo(
    algo: Algo,
    config: &RunConfig,
    ds: &Dataset,
    constraints: &ConstraintSet,
    corrupt: bool,
) -> Result<RepairResult> {
    if algo == Algo::Bf {
        return Ok(bf_topk(ds, &config.query, constraints, config.k)?);
    }
    let mut tree = build_tree(
        ds,
        &config.query,
        constraints,
        config.branching,
        config.bucket,
    )?;
    if corrupt {
        tree.corrupt_root_summary();
    }
    if let Some(path) = &config.tree_stats {
        let stats = serde_json::to_string_pretty(&tree.stats())?;
        std::fs::write(path, stats + "\n")
            .with_context(|| format!("writing {}", path.display()))?;
    }
    log::debug!(
        "tree built: {} nodes, branching {}, bucket {}",
        tree.node_count(),
        config.branching,
        config.bucket
    );
    let result = match algo {
        Algo::Ff => ff_topk(&tree, ds, &config.query, constraints, config.k)?,
        Algo::Rp => rp_topk(
            &tree,
            ds,
            &config.query,
            constraints,
            config.k,
            config.split,
        )?,
        Algo::Bf => unreachable!(),
    };
    Ok(result)
}

fn emit(config: &RunConfig, output: &Output) -> Result<()> {
    let text = serde_json::to_string_pretty(output)?;
    match &config.out {
        Some(path) => std::fs::write(path, text + "\n")
            .with_context(|| format!("writing {}", path.display()))?,
        None => println!("{text}"),
    }
    Ok(())
}

fn cmd_repair(args: RunArgs) -> Result<ExitCode> {
    let config = args.resolve()?;
    let (ds, maps, constraints) = load_inputs(&config)?;
    log::info!(
        "repair: {} rows, {} constraint(s), algo {}",
        ds.row_count(),
        constraints.constraints.len(),
        config.algo.name()
    );
    let result = run_algo(config.algo, &config, &ds, &constraints, false)?;
    let found = result.stats.repairs_found;
    emit(
        &config,
        &Output {
            schema_version: 1,
            algorithm: config.algo.name(),
            k: config.k,
            seed: config.seed,
            categorical_maps: maps,
            result,
        },
    )?;
    Ok(if found > 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(2)
    })
}

fn cmd_verify(args: RunArgs, max_space: u128, corrupt_tree: bool) -> Result<ExitCode> {
    let config = args.resolve()?;
    let (ds, _, constraints) = load_inputs(&config)?;
    let space = CandidateSpace::new(&ds, &config.query)?;
    if space.size() > max_space {
        bail!(
            "candidate space has {} combinations, over the brute-force guard of {max_space}",
            space.size()
        );
    }
    let bf = run_algo(Algo::Bf, &config, &ds, &constraints, false)?;
    let ff = run_algo(Algo::Ff, &config, &ds, &constraints, corrupt_tree)?;
    let rp = run_algo(Algo::Rp, &config, &ds, &constraints, corrupt_tree)?;

    for (name, result) in [("ff", &ff), ("rp", &rp)] {
        if !bf.same_repairs(result) {
            let limit = bf.repairs.len().max(result.repairs.len());
            let at = (0..limit)
                .find(|&i| match (bf.repairs.get(i), result.repairs.get(i)) {
                    (Some(a), Some(b)) => a != b,
                    _ => true,
                })
                .unwrap_or(0);
            eprintln!(
                "verify: {name} diverges from bf at rank {at}: bf={:?} {name}={:?}",
                bf.repairs.get(at).map(|r| &r.constants),
                result.repairs.get(at).map(|r| &r.constants),
            );
            return Ok(ExitCode::from(3));
        }
    }
    println!(
        "verify: bf, ff, rp agree on {} repair(s) (nce bf={} ff={} rp={})",
        bf.repairs.len(),
        bf.stats.nce,
        ff.stats.nce,
        rp.stats.nce
    );
    Ok(ExitCode::SUCCESS)
}

fn cmd_gen(spec_path: PathBuf, out: PathBuf, seed: Option<u64>) -> Result<ExitCode> {
    let text = std::fs::read_to_string(&spec_path)
        .with_context(|| format!("reading {}", spec_path.display()))?;
    let mut spec: repairkit::datagen::GenSpec =
        serde_json::from_str(&text).context("parsing generator spec")?;
    if let Some(seed) = seed {
        spec.seed = seed;
    }
    let (ds, maps) = repairkit::datagen::generate(&spec)?;
    ds.write_csv(&out)?;
    if !maps.is_empty() {
        let maps_path = out.with_extension("maps.json");
        std::fs::write(&maps_path, serde_json::to_string_pretty(&maps)? + "\n")
            .with_context(|| format!("writing {}", maps_path.display()))?;
    }
    log::info!("wrote {} rows to {}", ds.row_count(), out.display());
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter("REPAIRKIT_LOG")).init();
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Repair(args) => cmd_repair(args),
        Command::Verify {
            args,
            max_space,
            corrupt_tree,
        } => cmd_verify(args, max_space, corrupt_tree),
        Command::Gen { spec, out, seed } => cmd_gen(spec, out, seed),
        Command::Bench { sweep, out } => bench::cmd_bench(&sweep, out.as_deref()),
    };
    match outcome {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(1)
        }
    }
}
