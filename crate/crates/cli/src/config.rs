//! Run configuration: defaults, config file, command-line flags, in
//! ascending precedence.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::Deserialize;

use repairkit::UserQuery;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Algo {
    Bf,
    Ff,
    Rp,
}

impl Algo {
    pub fn name(self) -> &'static str {
        match self {
            Algo::Bf => "bf",
            Algo::Ff => "ff",
            Algo::Rp => "rp",
        }
    }
}

/// Optional fields as they appear in a `--config` JSON file.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub dataset: Option<PathBuf>,
    pub categoricals: Option<Vec<String>>,
    pub query: Option<serde_json::Value>,
    pub query_file: Option<PathBuf>,
    pub constraints: Option<Vec<String>>,
    pub algo: Option<String>,
    pub k: Option<usize>,
    pub branching: Option<usize>,
    pub bucket: Option<usize>,
    pub split: Option<usize>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
}

/// Fully resolved run configuration.
#[derive(Debug)]
pub struct RunConfig {
    pub dataset: PathBuf,
    pub categoricals: BTreeSet<String>,
    pub query: UserQuery,
    pub constraints: Vec<String>,
    pub algo: Algo,
    pub k: usize,
    pub branching: usize,
    pub bucket: usize,
    pub split: usize,
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub tree_stats: Option<PathBuf>,
}

/// Shared command-line flags for `repair` and `verify`.
#[derive(Debug, clap::Args)]
pub struct RunArgs {
    /// Input CSV (header row required)
    pub dataset: Option<PathBuf>,

    /// Query spec: inline JSON (starts with '{') or a path to a JSON file
    #[arg(long)]
    pub query: Option<String>,

    /// Constraint text; repeat for a conjunction
    #[arg(long = "constraint")]
    pub constraints: Vec<String>,

    /// Search algorithm
    #[arg(long, value_enum)]
    pub algo: Option<Algo>,

    /// Number of repairs to return
    #[arg(long)]
    pub k: Option<usize>,

    /// kd-tree branching factor
    #[arg(long)]
    pub branching: Option<usize>,

    /// kd-tree bucket size (max tuples per leaf)
    #[arg(long)]
    pub bucket: Option<usize>,

    /// Range split factor of the rp engine
    #[arg(long)]
    pub split: Option<usize>,

    /// Seed recorded in the run (all engine work is deterministic)
    #[arg(long)]
    pub seed: Option<u64>,

    /// Comma-separated categorical attribute names
    #[arg(long, value_delimiter = ',')]
    pub categoricals: Vec<String>,

    /// Write the result JSON here instead of stdout
    #[arg(long)]
    pub out: Option<PathBuf>,

    /// JSON config file; flags override its fields
    #[arg(long)]
    pub config: Option<PathBuf>,

    /// Dump kd-tree statistics (per-level node counts, leaf sizes) as JSON
    #[arg(long)]
    pub tree_stats: Option<PathBuf>,
}

fn parse_query_spec(text: &str, base: Option<&Path>) -> Result<UserQuery> {
    let raw = if text.trim_start().starts_with('{') {
        text.to_string()
    } else {
        let path = match base {
            Some(dir) if !Path::new(text).is_absolute() => dir.join(text),
            _ => PathBuf::from(text),
        };
        std::fs::read_to_string(&path)
            .with_context(|| format!("reading query file {}", path.display()))?
    };
    let mut query: UserQuery = serde_json::from_str(&raw).context("parsing query spec JSON")?;
    if query.weights.is_empty() {
        query.weights = vec![1.0; query.predicates.len()];
    }
    Ok(query)
}

impl RunArgs {
    pub fn resolve(self) -> Result<RunConfig> {
        let (file, file_dir) = match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .with_context(|| format!("reading config {}", path.display()))?;
                let cfg: ConfigFile = serde_json::from_str(&text)
                    .with_context(|| format!("parsing config {}", path.display()))?;
                (cfg, path.parent().map(Path::to_path_buf))
            }
            None => (ConfigFile::default(), None),
        };

        let dataset = self
            .dataset
            .or(file.dataset)
            .context("no dataset given (positional argument or config field)")?;

        let query = if let Some(text) = &self.query {
            parse_query_spec(text, None)?
        } else if let Some(value) = &file.query {
            let mut q: UserQuery =
                serde_json::from_value(value.clone()).context("parsing config query")?;
            if q.weights.is_empty() {
                q.weights = vec![1.0; q.predicates.len()];
            }
            q
        } else if let Some(path) = &file.query_file {
            parse_query_spec(&path.to_string_lossy(), file_dir.as_deref())?
        } else {
            bail!("no query given (--query or config field)");
        };

        let constraints = if self.constraints.is_empty() {
            file.constraints.unwrap_or_default()
        } else {
            self.constraints
        };
        if constraints.is_empty() {
            bail!("no constraint given (--constraint or config field)");
        }

        let algo = match self.algo {
            Some(a) => a,
            None => match file.algo.as_deref() {
                Some("bf") => Algo::Bf,
                Some("ff") => Algo::Ff,
                Some("rp") | None => Algo::Rp,
                Some(other) => bail!("unknown algorithm {other:?}"),
            },
        };

        let categoricals: BTreeSet<String> = if self.categoricals.is_empty() {
            file.categoricals.unwrap_or_default().into_iter().collect()
        } else {
            self.categoricals.into_iter().collect()
        };

        let config = RunConfig {
            dataset,
            categoricals,
            query,
            constraints,
            algo,
            k: self.k.or(file.k).unwrap_or(7),
            branching: self.branching.or(file.branching).unwrap_or(5),
            bucket: self.bucket.or(file.bucket).unwrap_or(15),
            split: self.split.or(file.split).unwrap_or(2),
            seed: self.seed.or(file.seed).unwrap_or(0),
            out: self.out.or(file.out),
            tree_stats: self.tree_stats,
        };
        if config.k < 1 || config.branching < 2 || config.bucket < 1 || config.split < 2 {
            bail!("parameter out of range: k >= 1, branching >= 2, bucket >= 1, split >= 2");
        }
        Ok(config)
    }
}
