//! Kernel loop-hierarchy model and its text file format.
//!
//! ```text
//! autodse-kernel-model v1
//! name: gemm
//! bus_bytes_per_cycle: 64
//! hls_effort_limit: 65536
//! budget: lut=1182240 ff=2364480 dsp=6840 bram=4320
//! top {
//!   compute_cycles: 0
//!   loop i {
//!     trip_count: 64
//!     compute_cycles: 2
//!     area: lut=120 ff=180 dsp=1
//!     stream: a load 256
//!     quirk: 4 -> 3
//!     loop j {
//!       trip_count: 64
//!       compute_cycles: 4
//!     }
//!   }
//! }
//! ```
//!
//! `#` starts a comment. The `top` block is the kernel's top function; it
//! always runs once and never carries tuning parameters.

use std::collections::{BTreeMap, HashSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::space::{LoopHierarchy, LoopInfo};

pub const KERNEL_MODEL_HEADER: &str = "autodse-kernel-model v1";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("loop `{0}` has trip count 0")]
    ZeroTripCount(String),
    #[error("duplicate loop id `{0}`")]
    DuplicateId(String),
    #[error("`{0}` is not a usable loop identifier")]
    BadIdentifier(String),
    #[error("{0} must be positive")]
    NonPositive(&'static str),
    #[error("parameter `{param}` refers to loop `{scope}` which is not in the kernel")]
    UnknownLoop { param: String, scope: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Load,
    Store,
}

/// Off-chip traffic generated by one loop iteration.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MemStream {
    pub array_id: String,
    pub bytes_per_iter: u64,
    pub direction: Direction,
}

/// Resources one instance of a loop body occupies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Area {
    pub lut: u64,
    pub ff: u64,
    pub dsp: u64,
}

impl Area {
    /// Area assumed when a loop does not declare one.
    pub fn from_compute(compute_cycles: u64) -> Self {
        let c = compute_cycles.max(1);
        Area {
            lut: 100 * c,
            ff: 150 * c,
            dsp: compute_cycles,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LoopNode {
    pub id: String,
    pub trip_count: u64,
    pub children: Vec<LoopNode>,
    /// Straight-line body work per iteration, in cycles.
    pub compute_cycles: u64,
    pub mem_streams: Vec<MemStream>,
    /// Parallel factor -> initiation interval under fine-grained pipelining.
    pub quirks: BTreeMap<u64, u64>,
    pub area: Area,
}

impl LoopNode {
    pub fn new(id: impl Into<String>, trip_count: u64, compute_cycles: u64) -> Self {
        LoopNode {
            id: id.into(),
            trip_count,
            children: Vec::new(),
            compute_cycles,
            mem_streams: Vec::new(),
            quirks: BTreeMap::new(),
            area: Area::from_compute(compute_cycles),
        }
    }

    pub fn child(mut self, c: LoopNode) -> Self {
        self.children.push(c);
        self
    }

    pub fn stream(mut self, array: &str, bytes_per_iter: u64, direction: Direction) -> Self {
        self.mem_streams.push(MemStream {
            array_id: array.to_string(),
            bytes_per_iter,
            direction,
        });
        self
    }

    pub fn quirk(mut self, parallel_factor: u64, ii: u64) -> Self {
        self.quirks.insert(parallel_factor, ii);
        self
    }

    pub fn with_area(mut self, lut: u64, ff: u64, dsp: u64) -> Self {
        self.area = Area { lut, ff, dsp };
        self
    }

    pub fn is_innermost(&self) -> bool {
        self.children.is_empty()
    }

    /// Total bytes moved per iteration across all streams.
    pub fn bytes_per_iter(&self) -> u64 {
        self.mem_streams.iter().map(|s| s.bytes_per_iter).sum()
    }

    /// Pre-order walk including `self`.
    pub fn walk<'a>(&'a self, f: &mut dyn FnMut(&'a LoopNode, Option<&'a LoopNode>)) {
        fn go<'a>(
            n: &'a LoopNode,
            parent: Option<&'a LoopNode>,
            f: &mut dyn FnMut(&'a LoopNode, Option<&'a LoopNode>),
        ) {
            f(n, parent);
            for c in &n.children {
                go(c, Some(n), f);
            }
        }
        go(self, None, f);
    }
}

/// Per-resource capacities of the target device.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResourceBudget {
    pub lut: u64,
    pub ff: u64,
    pub dsp: u64,
    pub bram: u64,
}

impl Default for ResourceBudget {
    /// A VU9P-sized device.
    fn default() -> Self {
        ResourceBudget {
            lut: 1_182_240,
            ff: 2_364_480,
            dsp: 6_840,
            bram: 4_320,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KernelModel {
    pub name: String,
    /// The top function; its children are the kernel's outermost loops.
    pub top: LoopNode,
    pub resource_budget: ResourceBudget,
    pub bus_bytes_per_cycle: u64,
    /// Fully-expanded statement count beyond which synthesis times out.
    pub hls_effort_limit: u64,
}

impl KernelModel {
    pub fn new(name: impl Into<String>, loops: Vec<LoopNode>) -> Self {
        let name = name.into();
        let mut top = LoopNode::new(name.clone(), 1, 0);
        top.area = Area::default();
        top.children = loops;
        KernelModel {
            name,
            top,
            resource_budget: ResourceBudget::default(),
            bus_bytes_per_cycle: 64,
            hls_effort_limit: 1 << 16,
        }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if self.bus_bytes_per_cycle == 0 {
            return Err(ModelError::NonPositive("bus_bytes_per_cycle"));
        }
        if self.hls_effort_limit == 0 {
            return Err(ModelError::NonPositive("hls_effort_limit"));
        }
        let b = &self.resource_budget;
        for (v, name) in [(b.lut, "budget.lut"), (b.ff, "budget.ff"), (b.dsp, "budget.dsp"), (b.bram, "budget.bram")] {
            if v == 0 {
                return Err(ModelError::NonPositive(name));
            }
        }
        let mut seen = HashSet::new();
        let mut err = None;
        self.top.walk(&mut |n, _| {
            if err.is_some() {
                return;
            }
            if !is_identifier(&n.id) {
                err = Some(ModelError::BadIdentifier(n.id.clone()));
            } else if n.trip_count == 0 {
                err = Some(ModelError::ZeroTripCount(n.id.clone()));
            } else if !seen.insert(n.id.clone()) {
                err = Some(ModelError::DuplicateId(n.id.clone()));
            }
        });
        match err {
            Some(e) => Err(e),
            None => Ok(()),
        }
    }

    /// Loop by id (the top function included).
    pub fn find(&self, id: &str) -> Option<&LoopNode> {
        let mut found = None;
        self.top.walk(&mut |n, _| {
            if found.is_none() && n.id == id {
                found = Some(n);
            }
        });
        found
    }

    /// The tunable loops (everything below the top function), pre-order.
    pub fn hierarchy(&self) -> LoopHierarchy {
        let mut loops = Vec::new();
        let top_id = self.top.id.clone();
        self.top.walk(&mut |n, parent| {
            if n.id == top_id && parent.is_none() {
                return;
            }
            loops.push(LoopInfo {
                id: n.id.clone(),
                parent: parent.filter(|p| p.id != top_id).map(|p| p.id.clone()),
                trip_count: n.trip_count,
                innermost: n.is_innermost(),
            });
        });
        LoopHierarchy { loops }
    }

    pub fn parse(text: &str) -> Result<Self, ModelError> {
        Parser::new(text).model()
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{KERNEL_MODEL_HEADER}");
        let _ = writeln!(out, "name: {}", self.name);
        let _ = writeln!(out, "bus_bytes_per_cycle: {}", self.bus_bytes_per_cycle);
        let _ = writeln!(out, "hls_effort_limit: {}", self.hls_effort_limit);
        let b = &self.resource_budget;
        let _ = writeln!(out, "budget: lut={} ff={} dsp={} bram={}", b.lut, b.ff, b.dsp, b.bram);
        out.push_str("top {\n");
        write_body(&self.top, 1, &mut out, true);
        out.push_str("}\n");
        out
    }
}

fn write_body(n: &LoopNode, depth: usize, out: &mut String, is_top: bool) {
    let ind = "  ".repeat(depth);
    if !is_top {
        let _ = writeln!(out, "{ind}trip_count: {}", n.trip_count);
    }
    let _ = writeln!(out, "{ind}compute_cycles: {}", n.compute_cycles);
    let _ = writeln!(out, "{ind}area: lut={} ff={} dsp={}", n.area.lut, n.area.ff, n.area.dsp);
    for s in &n.mem_streams {
        let dir = match s.direction {
            Direction::Load => "load",
            Direction::Store => "store",
        };
        let _ = writeln!(out, "{ind}stream: {} {} {}", s.array_id, dir, s.bytes_per_iter);
    }
    for (pf, ii) in &n.quirks {
        let _ = writeln!(out, "{ind}quirk: {pf} -> {ii}");
    }
    for c in &n.children {
        let _ = writeln!(out, "{ind}loop {} {{", c.id);
        write_body(c, depth + 1, out, false);
        let _ = writeln!(out, "{ind}}}");
    }
}

pub(crate) fn is_identifier(s: &str) -> bool {
    const RESERVED: &[&str] = &[
        "for", "in", "if", "and", "or", "off", "cg", "fg", "loop", "auto", "name", "options",
        "default",
    ];
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
        && !RESERVED.contains(&s)
}

struct Parser<'a> {
    lines: Vec<(usize, &'a str)>,
    at: usize,
}

impl<'a> Parser<'a> {
    fn new(text: &'a str) -> Self {
        let lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
            .filter(|(_, l)| !l.is_empty())
            .collect();
        Parser { lines, at: 0 }
    }

    fn err<T>(&self, line: usize, message: impl Into<String>) -> Result<T, ModelError> {
        Err(ModelError::Parse {
            line,
            message: message.into(),
        })
    }

    fn next_line(&mut self) -> Option<(usize, &'a str)> {
        let l = self.lines.get(self.at).copied();
        self.at += 1;
        l
    }

    fn model(mut self) -> Result<KernelModel, ModelError> {
        match self.next_line() {
            Some((_, h)) if h == KERNEL_MODEL_HEADER => {}
            Some((n, h)) => return self.err(n, format!("expected header `{KERNEL_MODEL_HEADER}`, found `{h}`")),
            None => return self.err(1, "empty kernel model"),
        }
        let mut name = None;
        let mut bus = None;
        let mut effort = None;
        let mut budget = ResourceBudget::default();
        let mut top = None;
        while let Some((n, line)) = self.next_line() {
            if line == "top {" {
                let node_name = name.clone().unwrap_or_else(|| "kernel".to_string());
                let mut t = LoopNode::new(node_name, 1, 0);
                t.area = Area::default();
                self.body(&mut t, true)?;
                top = Some(t);
                continue;
            }
            let Some((key, value)) = line.split_once(':') else {
                return self.err(n, format!("expected `key: value`, found `{line}`"));
            };
            let value = value.trim();
            match key.trim() {
                "name" => name = Some(value.to_string()),
                "bus_bytes_per_cycle" => bus = Some(self.num(n, value)?),
                "hls_effort_limit" => effort = Some(self.num(n, value)?),
                "budget" => {
                    for (k, v) in self.pairs(n, value)? {
                        match k {
                            "lut" => budget.lut = v,
                            "ff" => budget.ff = v,
                            "dsp" => budget.dsp = v,
                            "bram" => budget.bram = v,
                            other => return self.err(n, format!("unknown resource `{other}`")),
                        }
                    }
                }
                other => return self.err(n, format!("unknown field `{other}`")),
            }
        }
        let Some(name) = name else {
            return self.err(0, "missing `name`");
        };
        let Some(mut top) = top else {
            return self.err(0, "missing `top { ... }` block");
        };
        top.id = name.clone();
        let model = KernelModel {
            name,
            top,
            resource_budget: budget,
            bus_bytes_per_cycle: bus.unwrap_or(64),
            hls_effort_limit: effort.unwrap_or(1 << 16),
        };
        model.validate()?;
        Ok(model)
    }

    fn num(&self, line: usize, s: &str) -> Result<u64, ModelError> {
        s.trim()
            .parse()
            .or_else(|_| self.err(line, format!("`{s}` is not a non-negative integer")))
    }

    fn pairs<'s>(&self, line: usize, s: &'s str) -> Result<Vec<(&'s str, u64)>, ModelError> {
        s.split_whitespace()
            .map(|kv| match kv.split_once('=') {
                Some((k, v)) => Ok((k, self.num(line, v)?)),
                None => self.err(line, format!("expected `key=value`, found `{kv}`")),
            })
            .collect()
    }

    fn body(&mut self, node: &mut LoopNode, is_top: bool) -> Result<(), ModelError> {
        let mut area_set = false;
        let mut tc_set = is_top;
        let open_line = self.lines.get(self.at.saturating_sub(1)).map(|l| l.0).unwrap_or(0);
        loop {
            let Some((n, line)) = self.next_line() else {
                return self.err(open_line, format!("unclosed block `{}`", node.id));
            };
            if line == "}" {
                break;
            }
            if let Some(rest) = line.strip_prefix("loop ") {
                let Some(id) = rest.strip_suffix('{').map(str::trim) else {
                    return self.err(n, "expected `loop <id> {`");
                };
                let mut child = LoopNode::new(id, 0, 0);
                self.body(&mut child, false)?;
                node.children.push(child);
                continue;
            }
            let Some((key, value)) = line.split_once(':') else {
                return self.err(n, format!("expected `key: value`, found `{line}`"));
            };
            let value = value.trim();
            match key.trim() {
                "trip_count" if !is_top => {
                    node.trip_count = self.num(n, value)?;
                    tc_set = true;
                }
                "compute_cycles" => node.compute_cycles = self.num(n, value)?,
                "area" => {
                    let mut a = Area::default();
                    for (k, v) in self.pairs(n, value)? {
                        match k {
                            "lut" => a.lut = v,
                            "ff" => a.ff = v,
                            "dsp" => a.dsp = v,
                            other => return self.err(n, format!("unknown area field `{other}`")),
                        }
                    }
                    node.area = a;
                    area_set = true;
                }
                "stream" => {
                    let parts: Vec<&str> = value.split_whitespace().collect();
                    let [array, dir, bytes] = parts[..] else {
                        return self.err(n, "expected `stream: <array> <load|store> <bytes>`");
                    };
                    let direction = match dir {
                        "load" => Direction::Load,
                        "store" => Direction::Store,
                        other => return self.err(n, format!("unknown direction `{other}`")),
                    };
                    let bytes_per_iter = self.num(n, bytes)?;
                    if bytes_per_iter == 0 {
                        return self.err(n, "stream bytes_per_iter must be at least 1");
                    }
                    node.mem_streams.push(MemStream {
                        array_id: array.to_string(),
                        bytes_per_iter,
                        direction,
                    });
                }
                "quirk" => {
                    let Some((pf, ii)) = value.split_once("->") else {
                        return self.err(n, "expected `quirk: <parallel factor> -> <II>`");
                    };
                    let pf = self.num(n, pf)?;
                    let ii = self.num(n, ii)?;
                    if pf == 0 || ii == 0 {
                        return self.err(n, "quirk factor and II must be positive");
                    }
                    node.quirks.insert(pf, ii);
                }
                other => return self.err(n, format!("unknown loop field `{other}`")),
            }
        }
        if !tc_set {
            return self.err(open_line, format!("loop `{}` has no trip_count", node.id));
        }
        if !area_set && !is_top {
            node.area = Area::from_compute(node.compute_cycles);
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = "\
autodse-kernel-model v1
# a comment
name: toy
bus_bytes_per_cycle: 32
hls_effort_limit: 1000
budget: lut=1000 ff=2000 dsp=10 bram=20
top {
  compute_cycles: 5
  loop i {
    trip_count: 32
    compute_cycles: 1
    stream: a load 8
    loop j {
      trip_count: 20
      compute_cycles: 3   # trailing comment
      area: lut=10 ff=20 dsp=1
      quirk: 2 -> 2
      quirk: 4 -> 3
    }
  }
}
";

    #[test]
    fn parses_sample() {
        let k = KernelModel::parse(SAMPLE).unwrap();
        assert_eq!(k.name, "toy");
        assert_eq!(k.top.id, "toy");
        assert_eq!(k.top.compute_cycles, 5);
        let i = &k.top.children[0];
        assert_eq!((i.id.as_str(), i.trip_count), ("i", 32));
        assert_eq!(i.area, Area::from_compute(1));
        assert_eq!(i.bytes_per_iter(), 8);
        let j = &i.children[0];
        assert_eq!(j.quirks.get(&4), Some(&3));
        assert_eq!(j.area, Area { lut: 10, ff: 20, dsp: 1 });
        assert_eq!(k.resource_budget.bram, 20);
    }

    #[test]
    fn text_round_trip() {
        let k = KernelModel::parse(SAMPLE).unwrap();
        assert_eq!(KernelModel::parse(&k.to_text()).unwrap(), k);
    }

    #[test]
    fn hierarchy_excludes_top() {
        let k = KernelModel::parse(SAMPLE).unwrap();
        let h = k.hierarchy();
        assert_eq!(h.loops.len(), 2);
        assert_eq!(h.loops[0].parent, None);
        assert_eq!(h.loops[1].parent.as_deref(), Some("i"));
        assert!(h.loops[1].innermost && !h.loops[0].innermost);
    }

    #[test]
    fn rejects_bad_models() {
        let zero = SAMPLE.replace("trip_count: 20", "trip_count: 0");
        assert_eq!(KernelModel::parse(&zero), Err(ModelError::ZeroTripCount("j".into())));
        let dup = SAMPLE.replace("loop j", "loop i");
        assert_eq!(KernelModel::parse(&dup), Err(ModelError::DuplicateId("i".into())));
        let header = SAMPLE.replace("v1", "v9");
        assert!(matches!(KernelModel::parse(&header), Err(ModelError::Parse { line: 1, .. })));
        let unclosed = SAMPLE.trim_end().trim_end_matches('}');
        assert!(KernelModel::parse(unclosed).is_err());
        let budget = SAMPLE.replace("dsp=10", "dsp=0");
        assert_eq!(KernelModel::parse(&budget), Err(ModelError::NonPositive("budget.dsp")));
        let reserved = SAMPLE.replace("loop j", "loop fg");
        assert!(matches!(KernelModel::parse(&reserved), Err(ModelError::BadIdentifier(_))));
    }
}
