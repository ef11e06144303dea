//! Pipeline-mode partitioning and representative selection.
//!
//! Each non-innermost loop's PIPELINE domain is split in two halves,
//! `{fg}` and `{off, cg}`, giving `2^m` partitions for `m` such loops.
//! Every partition is profiled once with its smallest configuration, and
//! K-means over (cycles, penalty) picks one representative per cluster.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::eval::{EvalStatus, Evaluator};
use crate::quality::util_penalty;
use crate::space::{Config, DesignSpace, OptionValue, PipelineMode, PragmaKind, SpaceError};

pub const DEFAULT_PARTITION_CAP: u64 = 4096;
const KMEANS_MAX_ITERS: usize = 100;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PartitionError {
    #[error("{count} partitions exceed the cap of {cap}")]
    TooManyPartitions { count: u128, cap: u64 },
    #[error(transparent)]
    Space(#[from] SpaceError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Half {
    Fg,
    OffCg,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitEntry {
    pub loop_id: String,
    pub param: String,
    pub half: Half,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Partition {
    /// Bit i set means split loop i is in the fg half.
    pub id: u64,
    pub mode_split: Vec<SplitEntry>,
    pub space: DesignSpace,
}

/// PIPELINE parameters the space is split on, in declaration order.
pub fn split_params(ds: &DesignSpace) -> Vec<(String, String)> {
    ds.params()
        .iter()
        .filter(|p| p.kind == PragmaKind::Pipeline && p.offers(PipelineMode::Fg))
        .filter(|p| match ds.loops().and_then(|l| l.get(&p.scope)) {
            Some(info) => !info.innermost,
            None => p.offers(PipelineMode::Cg),
        })
        .filter(|p| p.grid.iter().any(|v| *v != OptionValue::FG))
        .map(|p| (p.scope.clone(), p.name.clone()))
        .collect()
}

pub fn enumerate_partitions(ds: &DesignSpace, cap: u64) -> Result<Vec<Partition>, PartitionError> {
    let splits = split_params(ds);
    let count = 1u128.checked_shl(splits.len() as u32).unwrap_or(u128::MAX);
    if splits.len() >= 64 || count > cap as u128 {
        return Err(PartitionError::TooManyPartitions { count, cap });
    }
    let mut out = Vec::with_capacity(count as usize);
    for id in 0..count as u64 {
        let mut space = ds.clone();
        let mut mode_split = Vec::with_capacity(splits.len());
        for (i, (loop_id, param)) in splits.iter().enumerate() {
            let half = if id >> i & 1 == 1 { Half::Fg } else { Half::OffCg };
            let p = space.param(param).expect("split parameter exists");
            space = match half {
                Half::Fg => space.restrict(param, &[OptionValue::FG], OptionValue::FG)?,
                Half::OffCg => {
                    let allowed = [OptionValue::OFF, OptionValue::CG];
                    let default = if allowed.contains(&p.default) {
                        p.default
                    } else {
                        *p.options
                            .items
                            .iter()
                            .find(|v| allowed.contains(v))
                            .expect("split parameters offer off or cg")
                    };
                    space.restrict(param, &allowed, default)?
                }
            };
            mode_split.push(SplitEntry {
                loop_id: loop_id.clone(),
                param: param.clone(),
                half,
            });
        }
        out.push(Partition { id, mode_split, space });
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartitionProfile {
    pub id: u64,
    pub status: EvalStatus,
    pub cycles: Option<u64>,
    pub penalty: Option<f64>,
    pub feasible: bool,
}

/// The partition's smallest design: pipeline modes at their half's first
/// option and every factor at its minimum.
pub fn minimal_config(p: &Partition) -> Result<Config, SpaceError> {
    let ds = &p.space;
    let mut cfg = ds.default_config();
    for spec in ds.eval_order() {
        if spec.kind == PragmaKind::Pipeline {
            continue;
        }
        let opts = ds.eval_options(&spec.name, &cfg)?;
        if let Some(min) = opts.iter().filter_map(|v| v.as_factor()).min() {
            cfg.set(&spec.name, OptionValue::Factor(min));
        }
    }
    Ok(cfg)
}

pub fn profile_partition(p: &Partition, evaluator: &dyn Evaluator) -> PartitionProfile {
    let result = match minimal_config(p) {
        Ok(cfg) => evaluator.evaluate(&cfg),
        Err(_) => crate::eval::EvalResult::invalid(),
    };
    let penalty = if result.is_ok() { util_penalty(&result.util).ok() } else { None };
    let feasible = result.is_ok() && penalty.is_some();
    PartitionProfile {
        id: p.id,
        status: result.status,
        cycles: result.cycles.filter(|_| feasible),
        penalty,
        feasible,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KMeans {
    pub assignment: Vec<usize>,
    /// Centroids in the original feature units.
    pub centroids: Vec<[f64; 2]>,
    /// Points and centroids after z-score normalization.
    pub scaled_points: Vec<[f64; 2]>,
    pub scaled_centroids: Vec<[f64; 2]>,
    /// Within-cluster sum of squares after each assignment step.
    pub wcss_history: Vec<f64>,
}

fn dist2(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)
}

/// Lloyd's algorithm on z-score normalized features, seeded with k-means++.
/// `k` is clamped to the number of distinct points.
pub fn kmeans(points: &[[f64; 2]], k: usize, seed: u64) -> KMeans {
    assert!(!points.is_empty() && k >= 1, "kmeans needs points and k >= 1");
    let n = points.len() as f64;
    let mut mean = [0.0; 2];
    let mut std = [0.0; 2];
    for d in 0..2 {
        mean[d] = points.iter().map(|p| p[d]).sum::<f64>() / n;
        let var = points.iter().map(|p| (p[d] - mean[d]).powi(2)).sum::<f64>() / n;
        std[d] = if var > 0.0 { var.sqrt() } else { 1.0 };
    }
    let scaled: Vec<[f64; 2]> = points
        .iter()
        .map(|p| [(p[0] - mean[0]) / std[0], (p[1] - mean[1]) / std[1]])
        .collect();
    let mut distinct: Vec<[f64; 2]> = Vec::new();
    for p in &scaled {
        if !distinct.contains(p) {
            distinct.push(*p);
        }
    }
    let k = k.min(distinct.len());

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centers = vec![scaled[rng.gen_range(0..scaled.len())]];
    while centers.len() < k {
        let d: Vec<f64> = scaled
            .iter()
            .map(|p| centers.iter().map(|c| dist2(*p, *c)).fold(f64::INFINITY, f64::min))
            .collect();
        let total: f64 = d.iter().sum();
        let mut r = rng.gen::<f64>() * total;
        let mut pick = d.iter().rposition(|&x| x > 0.0).expect("a point lies off every center");
        for (i, &x) in d.iter().enumerate() {
            if x > 0.0 && r < x {
                pick = i;
                break;
            }
            r -= x;
        }
        centers.push(scaled[pick]);
    }

    let nearest = |p: [f64; 2], centers: &[[f64; 2]]| {
        let mut best = 0;
        for (i, c) in centers.iter().enumerate() {
            if dist2(p, *c) < dist2(p, centers[best]) {
                best = i;
            }
        }
        best
    };
    let mut assignment: Vec<usize> = Vec::new();
    let mut wcss_history = Vec::new();
    for _ in 0..KMEANS_MAX_ITERS {
        let next: Vec<usize> = scaled.iter().map(|p| nearest(*p, &centers)).collect();
        wcss_history.push(scaled.iter().zip(&next).map(|(p, &c)| dist2(*p, centers[c])).sum());
        if next == assignment {
            break;
        }
        assignment = next;
        for (c, center) in centers.iter_mut().enumerate() {
            let members: Vec<&[f64; 2]> = scaled.iter().zip(&assignment).filter(|(_, &a)| a == c).map(|(p, _)| p).collect();
            if !members.is_empty() {
                let m = members.len() as f64;
                *center = [
                    members.iter().map(|p| p[0]).sum::<f64>() / m,
                    members.iter().map(|p| p[1]).sum::<f64>() / m,
                ];
            }
        }
    }
    let centroids = centers
        .iter()
        .map(|c| [c[0] * std[0] + mean[0], c[1] * std[1] + mean[1]])
        .collect();
    KMeans {
        assignment,
        centroids,
        scaled_points: scaled,
        scaled_centroids: centers,
        wcss_history,
    }
}

/// Up to `t` partition ids, one per cluster, ordered by profiled cycles.
/// Infeasible partitions are chosen only when nothing else exists.
pub fn select_representatives(profiles: &[PartitionProfile], t: usize, seed: u64) -> Vec<u64> {
    let feasible: Vec<&PartitionProfile> = profiles.iter().filter(|p| p.feasible).collect();
    if feasible.is_empty() {
        return profiles.iter().map(|p| p.id).min().into_iter().collect();
    }
    let points: Vec<[f64; 2]> = feasible
        .iter()
        .map(|p| [p.cycles.unwrap_or(u64::MAX) as f64, p.penalty.unwrap_or(f64::MAX)])
        .collect();
    let km = kmeans(&points, t.max(1).min(feasible.len()), seed);
    let mut picks: Vec<&PartitionProfile> = Vec::new();
    for (c, center) in km.scaled_centroids.iter().enumerate() {
        let best = feasible
            .iter()
            .zip(&km.scaled_points)
            .zip(&km.assignment)
            .filter(|(_, &a)| a == c)
            .map(|((p, sp), _)| (dist2(*sp, *center), *p))
            .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.id.cmp(&b.1.id)));
        if let Some((_, p)) = best {
            picks.push(p);
        }
    }
    picks.sort_by_key(|p| (p.cycles, p.id));
    picks.dedup_by_key(|p| p.id);
    picks.into_iter().map(|p| p.id).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::{MockHls, MockOptions};
    use crate::generator::generate_design_space;
    use crate::kernel::{KernelModel, LoopNode};
    use proptest::prelude::*;

    fn model(m: usize) -> KernelModel {
        let loops = (0..m)
            .map(|i| LoopNode::new(format!("o{i}"), 8, 1).child(LoopNode::new(format!("i{i}"), 4, 2)))
            .collect();
        KernelModel::new("k", loops)
    }

    #[test]
    fn counts_and_halves() {
        for m in [0, 1, 3] {
            let ds = generate_design_space(&model(m)).unwrap();
            let parts = enumerate_partitions(&ds, DEFAULT_PARTITION_CAP).unwrap();
            assert_eq!(parts.len(), 1 << m);
        }
        let ds = generate_design_space(&model(3)).unwrap();
        let parts = enumerate_partitions(&ds, DEFAULT_PARTITION_CAP).unwrap();
        let all_fg = &parts[7];
        for e in &all_fg.mode_split {
            assert_eq!(all_fg.space.param(&e.param).unwrap().grid, vec![OptionValue::FG]);
        }
        assert!(matches!(
            enumerate_partitions(&ds, 4),
            Err(PartitionError::TooManyPartitions { count: 8, cap: 4 })
        ));
    }

    #[test]
    fn every_valid_config_lies_in_one_partition() {
        let ds = generate_design_space(&model(2)).unwrap();
        let parts = enumerate_partitions(&ds, DEFAULT_PARTITION_CAP).unwrap();
        for cfg in ds.enumerate_all(100_000).unwrap() {
            let owners = parts.iter().filter(|p| p.space.is_valid(&cfg)).count();
            assert_eq!(owners, 1, "{cfg}");
        }
    }

    #[test]
    fn profiles() {
        let k = KernelModel::new("k", vec![LoopNode::new("o", 8, 1).child(LoopNode::new("i", 4, 2))]);
        let ds = generate_design_space(&k).unwrap();
        let m = MockHls::new(k, ds.clone(), MockOptions::default()).unwrap();
        let parts = enumerate_partitions(&ds, DEFAULT_PARTITION_CAP).unwrap();
        let p0 = profile_partition(&parts[0], &m);
        assert_eq!(p0.cycles, m.evaluate(&ds.default_config()).cycles);
        assert_eq!(minimal_config(&parts[1]).unwrap().get("PIPE_o"), Some(OptionValue::FG));
        assert_eq!(minimal_config(&parts[1]).unwrap().get("PAR_o"), Some(OptionValue::Factor(1)));
    }

    #[test]
    fn kmeans_edge_cases() {
        let pts = [[1.0, 2.0], [3.0, 4.0], [5.0, 0.0]];
        let one = kmeans(&pts, 1, 0);
        assert_eq!(one.assignment, [0, 0, 0]);
        assert!((one.centroids[0][0] - 3.0).abs() < 1e-9 && (one.centroids[0][1] - 2.0).abs() < 1e-9);
        let each = kmeans(&pts, 3, 0);
        let mut a = each.assignment.clone();
        a.sort();
        a.dedup();
        assert_eq!(a.len(), 3);
        let dup = kmeans(&[[1.0, 1.0], [1.0, 1.0]], 2, 0);
        assert_eq!(dup.scaled_centroids.len(), 1);
    }

    #[test]
    fn selection_rules() {
        let prof = |id, c: u64, p: f64| PartitionProfile {
            id,
            status: EvalStatus::Ok,
            cycles: Some(c),
            penalty: Some(p),
            feasible: true,
        };
        let bad = PartitionProfile {
            id: 9,
            status: EvalStatus::Timeout,
            cycles: None,
            penalty: None,
            feasible: false,
        };
        let ps = vec![prof(0, 100, 8.0), prof(1, 110, 8.1), prof(2, 10, 30.0), bad.clone()];
        let mut all = select_representatives(&ps, 10, 1);
        all.sort();
        assert_eq!(all, [0, 1, 2]);
        assert_eq!(select_representatives(&ps, 1, 1).len(), 1);
        assert_eq!(select_representatives(&[bad], 2, 1), [9]);
    }

    proptest! {
        #[test]
        fn wcss_never_increases(
            pts in prop::collection::vec((0.0f64..1000.0, 0.0f64..50.0), 1..40),
            k in 1usize..6,
            seed in any::<u64>(),
        ) {
            let pts: Vec<[f64; 2]> = pts.into_iter().map(|(a, b)| [a, b]).collect();
            let km = kmeans(&pts, k, seed);
            for w in km.wcss_history.windows(2) {
                prop_assert!(w[1] <= w[0] + 1e-9);
            }
            prop_assert_eq!(&km, &kmeans(&pts, k, seed));
        }
    }
}
