//! Deterministic synthetic table generator for benchmarks and trend tests.
//!
//! Attributes are generated from per-attribute z-score streams seeded off the
//! spec seed, so output depends only on the spec. Correlated pairs share
//! z-scores through a Gaussian copula before the marginal transform; binary
//! label attributes can condition their positive rate on a categorical group
//! attribute, which is how parity-style constraints get controllable
//! repair-distance profiles.

use std::collections::BTreeMap;
use std::collections::BTreeSet;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{CategoricalMaps, Dataset};

#[derive(Debug, Error)]
pub enum GenError {
    #[error("bad generator spec: {0}")]
    BadSpec(String),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Distribution {
    /// Uniform integers over the closed range.
    UniformInt { lo: i64, hi: i64 },
    /// Weighted labels, encoded by position in `labels`.
    Categorical {
        labels: Vec<String>,
        weights: Vec<f64>,
    },
    /// Normal clipped to `[lo, hi]`, rounded to `precision` (default 1e-6;
    /// a precision of 1 yields skewed integer marginals).
    Normal {
        mean: f64,
        std: f64,
        lo: f64,
        hi: f64,
        #[serde(default)]
        precision: Option<f64>,
    },
    /// Binary outcome with a per-group positive rate, conditioned on an
    /// earlier categorical attribute.
    Label {
        group_attr: String,
        positive_rates: BTreeMap<String, f64>,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AttrSpec {
    pub name: String,
    pub dist: Distribution,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Correlation {
    pub a: String,
    pub b: String,
    pub rho: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GenSpec {
    pub rows: usize,
    pub seed: u64,
    pub attrs: Vec<AttrSpec>,
    #[serde(default)]
    pub correlations: Vec<Correlation>,
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e3779b97f4a7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d049bb133111eb);
    x ^ (x >> 31)
}

// Abramowitz & Stegun 7.1.26, |error| < 1.5e-7. Plenty for sampling.
fn erf(x: f64) -> f64 {
    let sign = if x < 0.0 { -1.0 } else { 1.0 };
    let x = x.abs();
    let t = 1.0 / (1.0 + 0.3275911 * x);
    let poly = t
        * (0.254829592
            + t * (-0.284496736 + t * (1.421413741 + t * (-1.453152027 + t * 1.061405429))));
    sign * (1.0 - poly * (-x * x).exp())
}

fn normal_cdf(z: f64) -> f64 {
    0.5 * (1.0 + erf(z / std::f64::consts::SQRT_2))
}

fn sample_z(rng: &mut ChaCha8Rng) -> f64 {
    let mut u1: f64 = rng.random();
    while u1 <= 0.0 {
        u1 = rng.random();
    }
    let u2: f64 = rng.random();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

impl GenSpec {
    fn validate(&self) -> Result<(), GenError> {
        if self.rows == 0 {
            return Err(GenError::BadSpec("row count must be at least 1".into()));
        }
        let names: Vec<&str> = self.attrs.iter().map(|a| a.name.as_str()).collect();
        for (i, a) in self.attrs.iter().enumerate() {
            match &a.dist {
                Distribution::UniformInt { lo, hi } => {
                    if lo > hi {
                        return Err(GenError::BadSpec(format!("{}: lo > hi", a.name)));
                    }
                }
                Distribution::Categorical { labels, weights } => {
                    if labels.is_empty() || labels.len() != weights.len() {
                        return Err(GenError::BadSpec(format!(
                            "{}: labels/weights mismatch",
                            a.name
                        )));
                    }
                    let total: f64 = weights.iter().sum();
                    if (total - 1.0).abs() > 1e-9 || weights.iter().any(|w| *w < 0.0) {
                        return Err(GenError::BadSpec(format!(
                            "{}: weights must be non-negative and sum to 1",
                            a.name
                        )));
                    }
                }
                Distribution::Normal {
                    std,
                    lo,
                    hi,
                    precision,
                    ..
                } => {
                    if *std < 0.0 || lo > hi || precision.is_some_and(|p| p <= 0.0) {
                        return Err(GenError::BadSpec(format!("{}: bad normal", a.name)));
                    }
                }
                Distribution::Label {
                    group_attr,
                    positive_rates,
                } => {
                    let Some(gi) = names.iter().position(|n| *n == group_attr) else {
                        return Err(GenError::BadSpec(format!(
                            "{}: unknown group attribute {group_attr:?}",
                            a.name
                        )));
                    };
                    if gi >= i {
                        return Err(GenError::BadSpec(format!(
                            "{}: group attribute must be declared earlier",
                            a.name
                        )));
                    }
                    if !matches!(self.attrs[gi].dist, Distribution::Categorical { .. }) {
                        return Err(GenError::BadSpec(format!(
                            "{}: group attribute must be categorical",
                            a.name
                        )));
                    }
                    if positive_rates.values().any(|r| !(0.0..=1.0).contains(r)) {
                        return Err(GenError::BadSpec(format!("{}: rate outside [0,1]", a.name)));
                    }
                }
            }
        }
        for c in &self.correlations {
            if c.rho.abs() > 0.95 {
                return Err(GenError::BadSpec(format!(
                    "correlation {} ~ {}: |rho| > 0.95",
                    c.a, c.b
                )));
            }
            if c.a == c.b {
                return Err(GenError::BadSpec(format!(
                    "correlation of {} with itself",
                    c.a
                )));
            }
            for n in [&c.a, &c.b] {
                if !names.contains(&n.as_str()) {
                    return Err(GenError::BadSpec(format!("correlation on unknown {n:?}")));
                }
            }
        }
        Ok(())
    }
}

/// Generates the dataset described by `spec`. Bit-identical for equal specs.
pub fn generate(spec: &GenSpec) -> Result<(Dataset, CategoricalMaps), GenError> {
    spec.validate()?;
    let n = spec.rows;

    // Independent z-score stream per attribute.
    let mut zs: Vec<Vec<f64>> = spec
        .attrs
        .iter()
        .enumerate()
        .map(|(i, _)| {
            let mut rng = ChaCha8Rng::seed_from_u64(splitmix64(
                spec.seed ^ (i as u64 + 1).wrapping_mul(0x9e37),
            ));
            (0..n).map(|_| sample_z(&mut rng)).collect()
        })
        .collect();

    // Gaussian copula: b's z-scores become a blend of a's and its own.
    let index = |name: &str| spec.attrs.iter().position(|a| a.name == name).unwrap();
    for c in &spec.correlations {
        let (ia, ib) = (index(&c.a), index(&c.b));
        let mix = (1.0 - c.rho * c.rho).sqrt();
        let za = zs[ia].clone();
        for (zb, za) in zs[ib].iter_mut().zip(&za) {
            *zb = c.rho * za + mix * *zb;
        }
    }

    let mut columns: Vec<Vec<f64>> = Vec::with_capacity(spec.attrs.len());
    let mut maps: CategoricalMaps = BTreeMap::new();
    let mut categorical: BTreeSet<String> = BTreeSet::new();
    for (i, attr) in spec.attrs.iter().enumerate() {
        let col: Vec<f64> = match &attr.dist {
            Distribution::UniformInt { lo, hi } => {
                let span = (hi - lo + 1) as f64;
                zs[i]
                    .iter()
                    .map(|&z| {
                        let u = normal_cdf(z);
                        lo.saturating_add((u * span) as i64).min(*hi) as f64
                    })
                    .collect()
            }
            Distribution::Categorical { labels, weights } => {
                let mut cum = Vec::with_capacity(weights.len());
                let mut acc = 0.0;
                for w in weights {
                    acc += w;
                    cum.push(acc);
                }
                maps.insert(
                    attr.name.clone(),
                    labels
                        .iter()
                        .enumerate()
                        .map(|(code, l)| (l.clone(), code as f64))
                        .collect(),
                );
                categorical.insert(attr.name.clone());
                zs[i]
                    .iter()
                    .map(|&z| {
                        let u = normal_cdf(z);
                        cum.partition_point(|c| *c < u).min(labels.len() - 1) as f64
                    })
                    .collect()
            }
            Distribution::Normal {
                mean,
                std,
                lo,
                hi,
                precision,
            } => {
                let prec = precision.unwrap_or(1e-6);
                zs[i]
                    .iter()
                    .map(|&z| {
                        let v = (mean + std * z).clamp(*lo, *hi);
                        (v / prec).round() * prec
                    })
                    .collect()
            }
            Distribution::Label {
                group_attr,
                positive_rates,
            } => {
                let gi = index(group_attr);
                let Distribution::Categorical { labels, .. } = &spec.attrs[gi].dist else {
                    unreachable!("validated group attribute");
                };
                let groups = &columns[gi];
                zs[i]
                    .iter()
                    .zip(groups)
                    .map(|(&z, &g)| {
                        let label = &labels[g as usize];
                        let rate = positive_rates.get(label).copied().unwrap_or(0.5);
                        if normal_cdf(z) < rate {
                            1.0
                        } else {
                            0.0
                        }
                    })
                    .collect()
            }
        };
        columns.push(col);
    }

    let schema = spec.attrs.iter().map(|a| a.name.clone()).collect();
    let ds =
        Dataset::new(schema, columns, categorical).map_err(|e| GenError::BadSpec(e.to_string()))?;
    Ok((ds, maps))
}
