//! Fixtures shared by the integration tests.
#![allow(dead_code)]

use std::collections::HashMap;
use std::sync::Mutex;

use autodse::eval::{EvalResult, Evaluator, MockHls, MockOptions};
use autodse::generator::generate_design_space;
use autodse::kernel::{Area, Direction, KernelModel, LoopNode};
use autodse::space::{Config, ConfigKey, DesignSpace};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Wraps an evaluator and records every call that reaches it.
pub struct Counting<E> {
    pub inner: E,
    calls: Mutex<HashMap<ConfigKey, u64>>,
}

impl<E> Counting<E> {
    pub fn new(inner: E) -> Self {
        Counting {
            inner,
            calls: Mutex::new(HashMap::new()),
        }
    }

    pub fn total(&self) -> u64 {
        self.calls.lock().unwrap().values().sum()
    }

    pub fn max_repeats(&self) -> u64 {
        self.calls.lock().unwrap().values().copied().max().unwrap_or(0)
    }
}

impl<E: Evaluator> Evaluator for Counting<E> {
    fn evaluate(&self, cfg: &Config) -> EvalResult {
        *self.calls.lock().unwrap().entry(cfg.key()).or_default() += 1;
        self.inner.evaluate(cfg)
    }
}

pub fn mock(k: KernelModel) -> (DesignSpace, MockHls) {
    let ds = generate_design_space(&k).unwrap();
    let m = MockHls::new(k, ds.clone(), MockOptions::default()).unwrap();
    (ds, m)
}

/// Hot loop `h` whose parallel factor 8 costs 63% more total area than
/// factor 4 (II rises to 5) for 11% fewer loop cycles; the area saved at
/// factor 4 pays for parallelizing the sibling loop `g`.
pub fn quirk_kernel() -> KernelModel {
    let h = LoopNode::new("h", 256, 120)
        .quirk(2, 2)
        .quirk(4, 3)
        .quirk(8, 5)
        .with_area(1000, 1000, 1);
    let g = LoopNode::new("g", 64, 2).with_area(200, 200, 1);
    let mut k = KernelModel::new("quirk", vec![h, g]);
    k.top.area = Area {
        lut: 2149,
        ff: 0,
        dsp: 0,
    };
    k.resource_budget.lut = 13_000;
    k
}

/// Outer loop `o` streams a wide row per iteration. Coarse-grained
/// pipelining double-buffers it past the block RAM budget, so a walk that
/// steps the pipeline mode one option at a time never reaches the much
/// faster fine-grained mode behind it.
pub fn trap_kernel() -> KernelModel {
    let o = LoopNode::new("o", 16, 2)
        .stream("row", 4608, Direction::Load)
        .child(LoopNode::new("i", 64, 4).with_area(20, 20, 0));
    let mut k = KernelModel::new("trap", vec![o]);
    k.resource_budget.bram = 4;
    k
}

/// One wide loop holds most of the work; two short loops add parameters
/// that barely matter. Pipelining `hot` alone removes about three quarters
/// of the default cycle count.
pub fn hot_loop_kernel() -> KernelModel {
    let hot = LoopNode::new("hot", 1024, 4).with_area(20_000, 20_000, 1500);
    let s0 = LoopNode::new("s0", 20, 1).with_area(80, 80, 1);
    let s1 = LoopNode::new("s1", 24, 1).with_area(80, 80, 1);
    KernelModel::new("hotloop", vec![hot, s0, s1])
}

fn random_loop(rng: &mut ChaCha8Rng, id: &mut usize, tcs: &[u64]) -> LoopNode {
    *id += 1;
    let name = format!("l{id}");
    let tc = tcs[rng.gen_range(0..tcs.len())];
    let c = rng.gen_range(2..24);
    let mut n = LoopNode::new(&name, tc, c).with_area(
        rng.gen_range(200..2000),
        rng.gen_range(200..2000),
        rng.gen_range(1..10),
    );
    if rng.gen_bool(0.5) {
        n = n.stream(&format!("m{id}"), rng.gen_range(4..64), Direction::Load);
    }
    if rng.gen_bool(0.3) {
        n = n.quirk(4, rng.gen_range(2..4));
    }
    n
}

/// Random kernel of two top-level loops; the first wraps a short inner
/// loop that carries no parameters of its own.
pub fn seeded_kernel(seed: u64) -> KernelModel {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut id = 0;
    let outer = random_loop(&mut rng, &mut id, &[24, 32]);
    let inner = random_loop(&mut rng, &mut id, &[8, 12, 16]);
    let mut loops = vec![outer.child(inner)];
    loops.push(random_loop(&mut rng, &mut id, &[24, 32, 48, 64, 96]));
    let mut k = KernelModel::new(format!("seeded{seed}"), loops);
    k.resource_budget.lut = rng.gen_range(30_000..100_000);
    k.resource_budget.dsp = rng.gen_range(100..400);
    k
}

/// Very small random kernel for property tests: one or two loops, the
/// first optionally wrapping a tunable inner loop.
pub fn tiny_kernel(seed: u64) -> KernelModel {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut id = 0;
    let mut first = random_loop(&mut rng, &mut id, &[20, 24, 32]);
    if rng.gen_bool(0.4) {
        first = first.child(random_loop(&mut rng, &mut id, &[20, 24]));
    }
    let mut loops = vec![first];
    if rng.gen_bool(0.5) {
        loops.push(random_loop(&mut rng, &mut id, &[20, 24, 32]));
    }
    let mut k = KernelModel::new(format!("tiny{seed}"), loops);
    k.resource_budget.lut = rng.gen_range(5_000..60_000);
    k.resource_budget.dsp = rng.gen_range(20..300);
    k
}

/// Small gated space: a 3-mode pipeline and a 2-option parallel factor
/// that is unavailable under coarse-grained pipelining.
pub const GATED_SPACE: &str = "loop: L\n\
#pragma ACCEL PIPELINE mode=auto{ options: P1=[x for x in [off,cg,fg]]; default: off }\n\
#pragma ACCEL PARALLEL factor=auto{ options: P2=[x for x in [1,2] if P1!=cg]; default: 1 }\n";
