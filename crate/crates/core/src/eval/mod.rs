//! Black-box evaluation contract, the analytical mock backend, and the
//! persistent result cache shared by all explorers.

mod cache;
mod mock;

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::space::Config;

pub use cache::{CachedEvaluator, Lookup, ResultStore, StorageError, StoredRecord, RESULTS_FORMAT};
pub use mock::{MockHls, MockOptions, BRAM_BYTES};

/// Default utilization threshold applied to every resource kind.
pub const DEFAULT_TU: f64 = 0.8;
/// Default per-evaluation synthesis time budget, in seconds.
pub const DEFAULT_EVAL_TIMEOUT_S: f64 = 3600.0;

/// Fraction of each resource budget a design occupies.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ResourceUtil {
    pub lut: f64,
    pub ff: f64,
    pub dsp: f64,
    pub bram: f64,
}

impl ResourceUtil {
    pub fn values(&self) -> [f64; 4] {
        [self.lut, self.ff, self.dsp, self.bram]
    }

    pub fn max(&self) -> f64 {
        self.values().into_iter().fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Bottleneck {
    Compute,
    Memory,
}

/// One statement of the hierarchical cycle report.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HierarchyNode {
    pub stmt_id: String,
    pub latency: u64,
    pub bottleneck: Bottleneck,
    /// Cycles spent computing, excluding off-chip transfer.
    pub compute_cycles: u64,
    /// Cycles spent moving data to and from off-chip memory.
    pub transfer_cycles: u64,
    pub children: Vec<HierarchyNode>,
}

impl HierarchyNode {
    pub fn find(&self, stmt_id: &str) -> Option<&HierarchyNode> {
        if self.stmt_id == stmt_id {
            return Some(self);
        }
        self.children.iter().find_map(|c| c.find(stmt_id))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum EvalStatus {
    Ok,
    Timeout,
    OverUtil,
    Invalid,
}

impl EvalStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            EvalStatus::Ok => "OK",
            EvalStatus::Timeout => "TIMEOUT",
            EvalStatus::OverUtil => "OVER_UTIL",
            EvalStatus::Invalid => "INVALID",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalResult {
    pub status: EvalStatus,
    /// Total kernel cycles; `None` (infinite) unless the status is OK.
    pub cycles: Option<u64>,
    pub util: ResourceUtil,
    pub report: Option<HierarchyNode>,
    /// Time the evaluation took (simulated for the mock backend).
    pub eval_seconds: f64,
}

impl EvalResult {
    pub fn is_ok(&self) -> bool {
        self.status == EvalStatus::Ok
    }

    pub fn invalid() -> Self {
        EvalResult {
            status: EvalStatus::Invalid,
            cycles: None,
            util: ResourceUtil::default(),
            report: None,
            eval_seconds: 0.0,
        }
    }
}

/// Anything that can turn a configuration into a result.
///
/// Implementations must be safe to call from several worker threads.
/// A real synthesis backend would run as a subprocess taking the config
/// as JSON on disk and writing one `EvalResult` JSON object back.
pub trait Evaluator: Send + Sync {
    fn evaluate(&self, cfg: &Config) -> EvalResult;
}

impl<E: Evaluator + ?Sized> Evaluator for Arc<E> {
    fn evaluate(&self, cfg: &Config) -> EvalResult {
        (**self).evaluate(cfg)
    }
}

impl<E: Evaluator + ?Sized> Evaluator for &E {
    fn evaluate(&self, cfg: &Config) -> EvalResult {
        (**self).evaluate(cfg)
    }
}
