//! Builds a pragma design space from a kernel model.
//!
//! Every loop gets up to three parameters, named after it:
//! `PIPE_<loop>`, `PAR_<loop>` and `TILE_<loop>`. Cross-loop rules are
//! written as option conditions, so `DesignSpace::validate` is the only
//! validity check anywhere.

use std::fmt::Write as _;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::kernel::{KernelModel, LoopNode, ModelError};
use crate::space::{DesignSpace, DESIGN_SPACE_HEADER};

/// Innermost loops at or below this trip count are left to the HLS scheduler.
pub const SMALL_TRIP_COUNT: u64 = 16;
/// Largest parallel factor offered, apart from the trip count itself.
pub const MAX_PARALLEL: u64 = 128;

pub fn pipe_name(loop_id: &str) -> String {
    format!("PIPE_{loop_id}")
}

pub fn par_name(loop_id: &str) -> String {
    format!("PAR_{loop_id}")
}

pub fn tile_name(loop_id: &str) -> String {
    format!("TILE_{loop_id}")
}

/// Divisors of `n` in ascending order.
pub fn divisors(n: u64) -> Vec<u64> {
    let mut lo = Vec::new();
    let mut hi = Vec::new();
    let mut d = 1;
    while d * d <= n {
        if n % d == 0 {
            lo.push(d);
            if d != n / d {
                hi.push(n / d);
            }
        }
        d += 1;
    }
    lo.extend(hi.into_iter().rev());
    lo
}

/// Option sets chosen for one loop, before conditions are attached.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LoopOptions {
    pub pipeline: Option<Vec<&'static str>>,
    pub parallel: Option<Vec<u64>>,
    pub tiling: Option<Vec<u64>>,
}

pub fn loop_options(node: &LoopNode) -> LoopOptions {
    let tc = node.trip_count;
    if node.is_innermost() {
        if tc <= SMALL_TRIP_COUNT {
            return LoopOptions {
                pipeline: None,
                parallel: None,
                tiling: None,
            };
        }
        let par: Vec<u64> = divisors(tc)
            .into_iter()
            .filter(|&d| d < tc && d <= MAX_PARALLEL)
            .collect();
        return LoopOptions {
            pipeline: Some(vec!["off", "fg"]),
            parallel: (par.len() > 1).then_some(par),
            tiling: None,
        };
    }
    let mut par: Vec<u64> = divisors(tc)
        .into_iter()
        .filter(|&d| d <= MAX_PARALLEL.min(tc))
        .collect();
    if !par.contains(&tc) {
        par.push(tc);
    }
    let tile: Vec<u64> = divisors(tc).into_iter().filter(|&t| t < tc).collect();
    LoopOptions {
        pipeline: Some(vec!["off", "cg", "fg"]),
        parallel: (par.len() > 1).then_some(par),
        tiling: (tile.len() > 1).then_some(tile),
    }
}

/// Renders the design-space text for `k`. Parameters appear in loop
/// pre-order, each loop contributing PIPELINE, PARALLEL, TILING.
pub fn design_space_text(k: &KernelModel) -> Result<String, ModelError> {
    k.validate()?;
    let mut out = String::new();
    out.push_str(DESIGN_SPACE_HEADER);
    out.push('\n');
    for l in &k.top.children {
        emit(l, &[], &mut out);
    }
    Ok(out)
}

fn emit(node: &LoopNode, fg_guards: &[String], out: &mut String) {
    let opts = loop_options(node);
    let id = &node.id;
    let block = |out: &mut String, kind: &str, attr: &str, name: &str, items: &str, conds: &[String], default: &str| {
        let cond = if conds.is_empty() {
            String::new()
        } else {
            format!(" if {}", conds.join(" and "))
        };
        let _ = writeln!(out, "loop: {id}");
        let _ = writeln!(
            out,
            "#pragma ACCEL {kind} {attr}=auto{{ options: {name}=[x for x in [{items}]{cond}]; default: {default} }}"
        );
    };
    if let Some(p) = &opts.pipeline {
        block(out, "PIPELINE", "mode", &pipe_name(id), &p.join(","), fg_guards, "off");
    }
    if let Some(par) = &opts.parallel {
        let mut conds = fg_guards.to_vec();
        if opts.pipeline.as_ref().is_some_and(|p| p.contains(&"cg")) {
            conds.push(format!("{}!=cg", pipe_name(id)));
        }
        block(out, "PARALLEL", "factor", &par_name(id), &join(par), &conds, "1");
    }
    if let Some(tile) = &opts.tiling {
        let mut conds = fg_guards.to_vec();
        let bound = match &opts.parallel {
            Some(_) => format!("x*{}<={}", par_name(id), node.trip_count),
            None => format!("x<={}", node.trip_count),
        };
        conds.push(bound);
        block(out, "TILING", "factor", &tile_name(id), &join(tile), &conds, "1");
    }
    let mut guards = fg_guards.to_vec();
    if opts.pipeline.is_some() {
        guards.push(format!("{}!=fg", pipe_name(id)));
    }
    for c in &node.children {
        emit(c, &guards, out);
    }
}

fn join(v: &[u64]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

/// Generates the design space of `k`, with its loop hierarchy attached.
pub fn generate_design_space(k: &KernelModel) -> Result<DesignSpace, ModelError> {
    let text = design_space_text(k)?;
    let ds = DesignSpace::parse(&text).expect("generated design space must parse");
    Ok(ds
        .with_loops(k.hierarchy())
        .expect("generated parameters are scoped to model loops"))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ValidCount {
    Exact { count: u64 },
    /// Fraction of random grid points that validated, scaled to the grid.
    Estimated { estimate: f64, samples: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpaceSize {
    pub grid_points: u128,
    pub valid_points: ValidCount,
}

/// Counts grid and valid points; the valid count is exact up to `cap`
/// and sampled beyond it.
pub fn space_size(ds: &DesignSpace, cap: u64, seed: u64) -> SpaceSize {
    const SAMPLES: u64 = 20_000;
    let grid_points = ds.grid_size();
    let mut count = 0u64;
    let mut over = false;
    for c in ds.enumerate_valid(cap.saturating_add(1)) {
        if c.is_err() {
            continue;
        }
        count += 1;
        if count > cap {
            over = true;
            break;
        }
    }
    if !over {
        return SpaceSize {
            grid_points,
            valid_points: ValidCount::Exact { count },
        };
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let hits = (0..SAMPLES)
        .filter(|_| ds.is_valid(&ds.sample_grid(&mut rng)))
        .count();
    SpaceSize {
        grid_points,
        valid_points: ValidCount::Estimated {
            estimate: grid_points as f64 * hits as f64 / SAMPLES as f64,
            samples: SAMPLES,
        },
    }
}
