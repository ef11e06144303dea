//! Deterministic analytical stand-in for an HLS tool.
//!
//! Per loop with parallel factor PF, tiling factor TF and pipeline mode M,
//! body cycles `c`, per-iteration stream bytes `b` and bus width `w`:
//!
//! * `tiles = ceil(TC/TF)`, `Tm = ceil(TF*b/w)`, transfer = `tiles*Tm`
//! * off: compute = `ceil(TC/PF) * (c + sum(children))`, latency = compute + transfer
//! * fg: children are flattened; compute = `depth + (ceil(TC/PF)-1)*II`,
//!   latency = compute + transfer, with `II = quirks[PF]` or 1
//! * cg: latency = `Tm + tiles*max(Tm, tile compute)` (double buffering)
//!
//! A flattened loop costs `c + sum(flat children) + ceil(TC*b/w)`.
//! Hardware is replicated by PF along each path, and by TC below an fg
//! loop. Unroll volume is the sum of replication counts.

use std::collections::HashMap;

use crate::kernel::{KernelModel, LoopNode, ModelError};
use crate::space::{Config, DesignSpace, PipelineMode, PragmaKind};

use super::{
    Bottleneck, EvalResult, EvalStatus, Evaluator, HierarchyNode, ResourceUtil, DEFAULT_EVAL_TIMEOUT_S,
    DEFAULT_TU,
};

/// Bytes held by one on-chip block RAM (18 Kb).
pub const BRAM_BYTES: u64 = 2304;
/// Simulated synthesis time of a trivial design.
const BASE_SECONDS: f64 = 60.0;
/// Simulated synthesis time at exactly the effort limit.
const LIMIT_SECONDS: f64 = 3600.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MockOptions {
    pub tu: f64,
    pub eval_timeout_s: f64,
}

impl Default for MockOptions {
    fn default() -> Self {
        MockOptions {
            tu: DEFAULT_TU,
            eval_timeout_s: DEFAULT_EVAL_TIMEOUT_S,
        }
    }
}

#[derive(Debug, Clone, Default)]
struct Knobs {
    pipe: Option<String>,
    par: Option<String>,
    tile: Option<String>,
}

#[derive(Debug, Clone)]
pub struct MockHls {
    kernel: KernelModel,
    space: DesignSpace,
    knobs: HashMap<String, Knobs>,
    opts: MockOptions,
}

#[derive(Clone, Copy)]
struct Setting {
    pf: u64,
    tf: u64,
    mode: PipelineMode,
}

#[derive(Default)]
struct Demand {
    lut: f64,
    ff: f64,
    dsp: f64,
    bram: f64,
    volume: u128,
}

impl MockHls {
    /// Binds the parameters of `space` to the loops of `kernel`.
    pub fn new(kernel: KernelModel, space: DesignSpace, opts: MockOptions) -> Result<Self, ModelError> {
        kernel.validate()?;
        let mut knobs: HashMap<String, Knobs> = HashMap::new();
        for p in space.params() {
            if kernel.find(&p.scope).is_none() || p.scope == kernel.top.id {
                return Err(ModelError::UnknownLoop {
                    param: p.name.clone(),
                    scope: p.scope.clone(),
                });
            }
            let k = knobs.entry(p.scope.clone()).or_default();
            let slot = match p.kind {
                PragmaKind::Pipeline => &mut k.pipe,
                PragmaKind::Parallel => &mut k.par,
                PragmaKind::Tiling => &mut k.tile,
            };
            slot.get_or_insert_with(|| p.name.clone());
        }
        Ok(MockHls {
            kernel,
            space,
            knobs,
            opts,
        })
    }

    pub fn kernel(&self) -> &KernelModel {
        &self.kernel
    }

    pub fn space(&self) -> &DesignSpace {
        &self.space
    }

    pub fn options(&self) -> MockOptions {
        self.opts
    }

    fn setting(&self, node: &LoopNode, cfg: &Config) -> Setting {
        let Some(k) = self.knobs.get(&node.id) else {
            return Setting {
                pf: 1,
                tf: 1,
                mode: PipelineMode::Off,
            };
        };
        let factor = |n: &Option<String>| {
            n.as_ref()
                .and_then(|n| cfg.get(n))
                .and_then(|v| v.as_factor())
                .map(|f| f.max(1) as u64)
                .unwrap_or(1)
        };
        let mode = k
            .pipe
            .as_ref()
            .and_then(|n| cfg.get(n))
            .and_then(|v| v.as_mode())
            .unwrap_or(PipelineMode::Off);
        Setting {
            pf: factor(&k.par).min(node.trip_count),
            tf: factor(&k.tile).min(node.trip_count),
            mode,
        }
    }

    fn latency(&self, node: &LoopNode, cfg: &Config) -> HierarchyNode {
        let s = self.setting(node, cfg);
        let bus = self.kernel.bus_bytes_per_cycle;
        let b = node.bytes_per_iter();
        let tc = node.trip_count;
        let tiles = tc.div_ceil(s.tf);
        let tm = (s.tf * b).div_ceil(bus);
        let transfer = tiles.saturating_mul(tm);
        let iters = tc.div_ceil(s.pf);
        let (children, compute, latency) = match s.mode {
            PipelineMode::Fg => {
                let kids: Vec<HierarchyNode> = node.children.iter().map(|c| self.flat(c)).collect();
                let depth = kids.iter().fold(node.compute_cycles, |a, k| a.saturating_add(k.latency));
                let ii = node.quirks.get(&s.pf).copied().unwrap_or(1);
                let compute = depth.saturating_add((iters - 1).saturating_mul(ii));
                (kids, compute, compute.saturating_add(transfer))
            }
            PipelineMode::Off => {
                let kids: Vec<HierarchyNode> = node.children.iter().map(|c| self.latency(c, cfg)).collect();
                let body = kids.iter().fold(node.compute_cycles, |a, k| a.saturating_add(k.latency));
                let compute = iters.saturating_mul(body);
                (kids, compute, compute.saturating_add(transfer))
            }
            PipelineMode::Cg => {
                let kids: Vec<HierarchyNode> = node.children.iter().map(|c| self.latency(c, cfg)).collect();
                let body = kids.iter().fold(node.compute_cycles, |a, k| a.saturating_add(k.latency));
                let tile_compute = s.tf.div_ceil(s.pf).saturating_mul(body);
                let compute = tiles.saturating_mul(tile_compute);
                let latency = tm.saturating_add(tiles.saturating_mul(tm.max(tile_compute)));
                (kids, compute, latency)
            }
        };
        HierarchyNode {
            stmt_id: node.id.clone(),
            latency,
            bottleneck: classify(compute, transfer),
            compute_cycles: compute,
            transfer_cycles: transfer,
            children,
        }
    }

    /// Cost of one invocation of a fully unrolled loop.
    fn flat(&self, node: &LoopNode) -> HierarchyNode {
        let kids: Vec<HierarchyNode> = node.children.iter().map(|c| self.flat(c)).collect();
        let compute = kids.iter().fold(node.compute_cycles, |a, k| a.saturating_add(k.latency));
        let transfer = node
            .trip_count
            .saturating_mul(node.bytes_per_iter())
            .div_ceil(self.kernel.bus_bytes_per_cycle);
        HierarchyNode {
            stmt_id: node.id.clone(),
            latency: compute.saturating_add(transfer),
            bottleneck: classify(compute, transfer),
            compute_cycles: compute,
            transfer_cycles: transfer,
            children: kids,
        }
    }

    fn demand(&self, node: &LoopNode, cfg: &Config, rep: u128, under_fg: bool, d: &mut Demand) {
        let s = self.setting(node, cfg);
        let rep = rep.saturating_mul(if under_fg { node.trip_count } else { s.pf } as u128);
        let r = rep as f64;
        d.lut += r * node.area.lut as f64;
        d.ff += r * node.area.ff as f64;
        d.dsp += r * node.area.dsp as f64;
        d.volume = d.volume.saturating_add(rep);
        let b = node.bytes_per_iter();
        if b > 0 {
            let buf = if under_fg {
                node.trip_count * b
            } else if s.mode == PipelineMode::Cg {
                2 * s.tf * b
            } else {
                s.tf * b
            };
            d.bram += r * buf.div_ceil(BRAM_BYTES) as f64;
        }
        let child_fg = under_fg || s.mode == PipelineMode::Fg;
        for c in &node.children {
            self.demand(c, cfg, rep, child_fg, d);
        }
    }

    /// Unroll volume of `cfg`: loop instances after replication.
    pub fn unroll_volume(&self, cfg: &Config) -> u128 {
        let mut d = Demand::default();
        self.demand(&self.kernel.top, cfg, 1, false, &mut d);
        d.volume
    }
}

fn classify(compute: u64, transfer: u64) -> Bottleneck {
    if transfer > compute {
        Bottleneck::Memory
    } else {
        Bottleneck::Compute
    }
}

impl Evaluator for MockHls {
    fn evaluate(&self, cfg: &Config) -> EvalResult {
        if !self.space.is_valid(cfg) {
            return EvalResult::invalid();
        }
        let mut d = Demand::default();
        self.demand(&self.kernel.top, cfg, 1, false, &mut d);
        let limit = self.kernel.hls_effort_limit as f64;
        let seconds = BASE_SECONDS + (LIMIT_SECONDS - BASE_SECONDS) * d.volume as f64 / limit;
        if seconds > self.opts.eval_timeout_s {
            return EvalResult {
                status: EvalStatus::Timeout,
                cycles: None,
                util: ResourceUtil::default(),
                report: None,
                eval_seconds: self.opts.eval_timeout_s,
            };
        }
        let budget = &self.kernel.resource_budget;
        let util = ResourceUtil {
            lut: d.lut / budget.lut as f64,
            ff: d.ff / budget.ff as f64,
            dsp: d.dsp / budget.dsp as f64,
            bram: d.bram / budget.bram as f64,
        };
        if util.values().iter().any(|&u| u >= self.opts.tu) {
            return EvalResult {
                status: EvalStatus::OverUtil,
                cycles: None,
                util,
                report: None,
                eval_seconds: seconds,
            };
        }
        let report = self.latency(&self.kernel.top, cfg);
        EvalResult {
            status: EvalStatus::Ok,
            cycles: Some(report.latency),
            util,
            report: Some(report),
            eval_seconds: seconds,
        }
    }
}
