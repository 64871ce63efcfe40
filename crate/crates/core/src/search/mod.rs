//! The top-k search engines and their instrumentation.

mod ff;
mod rp;

pub use ff::ff_topk;
pub use rp::{range_divide, rp_topk};

use serde::Serialize;

/// Hardware-independent cost counters of one search run.
///
/// `nce` counts constraint evaluations: one per candidate for the exact
/// engines, one per candidate-set certification pair (plus one per concrete
/// base-case check) for the range engine. `nca` counts cluster accesses; the
/// brute-force engine has no clusters and counts tuple accesses there
/// instead. Tuples touched while resolving partially covered leaves are
/// reported separately as `tuple_accesses`.
#[derive(Debug, Clone, Default, Serialize)]
pub struct SearchStats {
    pub nce: u64,
    pub nca: u64,
    pub tuple_accesses: u64,
    pub wall_time_s: f64,
    pub repairs_found: usize,
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct Repair {
    pub constants: Vec<f64>,
    pub distance: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RepairResult {
    pub repairs: Vec<Repair>,
    pub stats: SearchStats,
}

impl RepairResult {
    /// Repair lists compare bit-exactly (constants and distances); stats and
    /// timings are excluded.
    pub fn same_repairs(&self, other: &RepairResult) -> bool {
        self.repairs.len() == other.repairs.len()
            && self.repairs.iter().zip(&other.repairs).all(|(a, b)| {
                a.distance.to_bits() == b.distance.to_bits()
                    && a.constants.len() == b.constants.len()
                    && a.constants
                        .iter()
                        .zip(&b.constants)
                        .all(|(x, y)| x.to_bits() == y.to_bits())
            })
    }
}
