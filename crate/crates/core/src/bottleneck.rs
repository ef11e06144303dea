//! Turns a hierarchical cycle report into an ordered list of parameters
//! worth tuning next.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::eval::{Bottleneck, HierarchyNode};
use crate::space::{DesignSpace, ParamSpec, PipelineMode, PragmaKind};

/// One root-to-statement path through the report.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CriticalPath {
    pub nodes: Vec<String>,
    /// Latency of the deepest node.
    pub latency: u64,
    pub bottleneck: Bottleneck,
}

/// Which aspect of a parameter an order entry stands for. A PIPELINE
/// parameter can be ranked twice, once per mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Facet {
    PipelineFg,
    PipelineCg,
    Parallel,
    Tiling,
    Pipeline,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OrderEntry {
    pub param: String,
    pub facet: Facet,
    pub stmt_id: String,
}

/// Untuned parameters, most impactful first, without duplicates.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ParamOrder {
    pub entries: Vec<OrderEntry>,
}

impl ParamOrder {
    pub fn names(&self) -> Vec<&str> {
        self.entries.iter().map(|e| e.param.as_str()).collect()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }
}

/// Depth-first paths, children visited by descending latency (ties by id).
pub fn build_paths(report: &HierarchyNode) -> Vec<CriticalPath> {
    fn go(n: &HierarchyNode, prefix: &mut Vec<String>, out: &mut Vec<CriticalPath>) {
        prefix.push(n.stmt_id.clone());
        if n.children.is_empty() {
            out.push(CriticalPath {
                nodes: prefix.clone(),
                latency: n.latency,
                bottleneck: n.bottleneck,
            });
        } else {
            let mut kids: Vec<&HierarchyNode> = n.children.iter().collect();
            kids.sort_by(|a, b| b.latency.cmp(&a.latency).then_with(|| a.stmt_id.cmp(&b.stmt_id)));
            for k in kids {
                go(k, prefix, out);
            }
        }
        prefix.pop();
    }
    let mut out = Vec::new();
    go(report, &mut Vec::new(), &mut out);
    out
}

/// Parameters grouped by the statement they are attached to.
pub fn stmt_param_map(ds: &DesignSpace) -> BTreeMap<String, Vec<&ParamSpec>> {
    let mut m: BTreeMap<String, Vec<&ParamSpec>> = BTreeMap::new();
    for p in ds.params() {
        m.entry(p.scope.clone()).or_default().push(p);
    }
    m
}

/// Orders the parameters of one statement for the given bottleneck kind.
/// Prioritized facets come first; every other parameter follows in
/// declaration order.
pub fn order_for_type(kind: Bottleneck, params: &[&ParamSpec]) -> Vec<(String, Facet)> {
    let of = |k: PragmaKind| params.iter().filter(move |p| p.kind == k);
    let mut ranked: Vec<(String, Facet)> = Vec::new();
    let mut push = |name: &str, facet: Facet| {
        if !ranked.iter().any(|(n, _)| n == name) {
            ranked.push((name.to_string(), facet));
        }
    };
    match kind {
        Bottleneck::Compute => {
            for p in of(PragmaKind::Pipeline).filter(|p| p.offers(PipelineMode::Fg)) {
                push(&p.name, Facet::PipelineFg);
            }
            for p in of(PragmaKind::Parallel) {
                push(&p.name, Facet::Parallel);
            }
            for p in of(PragmaKind::Pipeline).filter(|p| p.offers(PipelineMode::Cg)) {
                push(&p.name, Facet::PipelineCg);
            }
        }
        Bottleneck::Memory => {
            for p in of(PragmaKind::Pipeline).filter(|p| p.offers(PipelineMode::Cg)) {
                push(&p.name, Facet::PipelineCg);
            }
            for p in of(PragmaKind::Tiling) {
                push(&p.name, Facet::Tiling);
            }
        }
    }
    for p in params {
        let facet = match p.kind {
            PragmaKind::Pipeline => Facet::Pipeline,
            PragmaKind::Parallel => Facet::Parallel,
            PragmaKind::Tiling => Facet::Tiling,
        };
        push(&p.name, facet);
    }
    ranked
}

/// Untuned parameters in the order the explorer should focus on them.
pub fn analyze(report: &HierarchyNode, ds: &DesignSpace, tuned: &BTreeSet<String>) -> ParamOrder {
    let map = stmt_param_map(ds);
    let mut index: BTreeMap<&str, &HierarchyNode> = BTreeMap::new();
    fn collect<'a>(n: &'a HierarchyNode, m: &mut BTreeMap<&'a str, &'a HierarchyNode>) {
        m.insert(&n.stmt_id, n);
        for c in &n.children {
            collect(c, m);
        }
    }
    collect(report, &mut index);
    let mut seen = BTreeSet::new();
    let mut order = ParamOrder::default();
    for path in build_paths(report) {
        for stmt in path.nodes.iter().rev() {
            if !seen.insert(stmt.clone()) {
                continue;
            }
            let node = index[stmt.as_str()];
            if node.latency == 0 {
                continue;
            }
            let Some(params) = map.get(stmt) else {
                continue;
            };
            let untuned: Vec<&ParamSpec> = params.iter().copied().filter(|p| !tuned.contains(&p.name)).collect();
            for (param, facet) in order_for_type(node.bottleneck, &untuned) {
                order.entries.push(OrderEntry {
                    param,
                    facet,
                    stmt_id: stmt.clone(),
                });
            }
        }
    }
    order
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generator::generate_design_space;
    use crate::kernel::{KernelModel, LoopNode};

    fn node(id: &str, latency: u64, kids: Vec<HierarchyNode>) -> HierarchyNode {
        HierarchyNode {
            stmt_id: id.to_string(),
            latency,
            bottleneck: Bottleneck::Compute,
            compute_cycles: latency,
            transfer_cycles: 0,
            children: kids,
        }
    }

    fn ids(p: &CriticalPath) -> Vec<&str> {
        p.nodes.iter().map(String::as_str).collect()
    }

    #[test]
    fn paths_follow_latency() {
        let r = node("root", 100, vec![node("B", 30, vec![]), node("A", 70, vec![])]);
        let paths = build_paths(&r);
        assert_eq!(ids(&paths[0]), ["root", "A"]);
        assert_eq!(ids(&paths[1]), ["root", "B"]);

        let chain = node("root", 9, vec![node("A", 9, vec![node("B", 9, vec![])])]);
        assert_eq!(build_paths(&chain).len(), 1);
        assert_eq!(ids(&build_paths(&chain)[0]), ["root", "A", "B"]);

        let tie = node("root", 100, vec![node("B", 50, vec![]), node("A", 50, vec![])]);
        assert_eq!(ids(&build_paths(&tie)[0]), ["root", "A"]);
    }

    fn space() -> DesignSpace {
        let k = KernelModel::new(
            "k",
            vec![
                LoopNode::new("o", 64, 1).child(LoopNode::new("i", 32, 1)),
                LoopNode::new("s", 8, 1),
            ],
        );
        generate_design_space(&k).unwrap()
    }

    #[test]
    fn statement_map() {
        let ds = space();
        let m = stmt_param_map(&ds);
        assert_eq!(m["o"].len(), 3);
        assert_eq!(m["i"].len(), 2);
        assert!(!m.contains_key("s"));
    }

    #[test]
    fn facet_orders() {
        let ds = space();
        let m = stmt_param_map(&ds);
        let names = |v: Vec<(String, Facet)>| v.into_iter().map(|(n, _)| n).collect::<Vec<_>>();
        let pipe_par: Vec<&ParamSpec> = m["o"].iter().copied().filter(|p| p.kind != PragmaKind::Tiling).collect();
        let c = order_for_type(Bottleneck::Compute, &pipe_par);
        assert_eq!(c[0], ("PIPE_o".to_string(), Facet::PipelineFg));
        assert_eq!(names(c), ["PIPE_o", "PAR_o"]);
        let pipe_tile: Vec<&ParamSpec> = m["o"].iter().copied().filter(|p| p.kind != PragmaKind::Parallel).collect();
        let mem = order_for_type(Bottleneck::Memory, &pipe_tile);
        assert_eq!(mem[0], ("PIPE_o".to_string(), Facet::PipelineCg));
        assert_eq!(names(mem), ["PIPE_o", "TILE_o"]);
        let tile_only: Vec<&ParamSpec> = m["o"].iter().copied().filter(|p| p.kind == PragmaKind::Tiling).collect();
        assert_eq!(names(order_for_type(Bottleneck::Compute, &tile_only)), ["TILE_o"]);
        let mem_all = order_for_type(Bottleneck::Memory, &m["o"]);
        assert_eq!(names(mem_all), ["PIPE_o", "TILE_o", "PAR_o"]);
    }

    #[test]
    fn analysis_is_innermost_first_and_skips_tuned() {
        let ds = space();
        let r = node(
            "k",
            1000,
            vec![node("o", 900, vec![node("i", 800, vec![])]), node("s", 100, vec![])],
        );
        let order = analyze(&r, &ds, &BTreeSet::new());
        assert_eq!(order.names(), ["PIPE_i", "PAR_i", "PIPE_o", "PAR_o", "TILE_o"]);
        let all: BTreeSet<String> = ds.params().iter().map(|p| p.name.clone()).collect();
        assert!(analyze(&r, &ds, &all).is_empty());
        let tuned: BTreeSet<String> = ["PIPE_i".to_string()].into();
        assert_eq!(analyze(&r, &ds, &tuned).names()[0], "PAR_i");
    }

    #[test]
    fn zero_latency_statements_are_skipped() {
        let ds = space();
        let r = node("k", 10, vec![node("o", 10, vec![node("i", 0, vec![])])]);
        assert_eq!(analyze(&r, &ds, &BTreeSet::new()).names(), ["PIPE_o", "PAR_o", "TILE_o"]);
    }
}
