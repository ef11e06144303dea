use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::eval::Evaluator;
use crate::space::DesignSpace;

use super::{Budget, ExploreError, ExploreOutcome, Session, StopReason};

/// Consecutive useless draws (invalid or already seen) before giving up.
const MAX_MISSES: u32 = 20_000;

/// Uniform random search over valid configurations by rejection from
/// the grid. Repeated draws are skipped and not charged, so a budget of n
/// means n distinct configurations.
pub fn explore_random(
    ds: &DesignSpace,
    evaluator: &dyn Evaluator,
    budget: Budget,
    seed: u64,
) -> Result<ExploreOutcome, ExploreError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut s = Session::new(evaluator, budget);
    let mut misses = 0;
    loop {
        if s.stop_requested() {
            return Ok(ExploreOutcome::from_session(ds, s.into_state(), StopReason::Interrupted));
        }
        if s.exhausted() {
            return Ok(ExploreOutcome::from_session(ds, s.into_state(), StopReason::Budget));
        }
        if misses >= MAX_MISSES {
            return Ok(ExploreOutcome::from_session(ds, s.into_state(), StopReason::Completed));
        }
        let cfg = ds.sample_grid(&mut rng);
        if s.seen(&cfg).is_some() || !ds.is_valid(&cfg) {
            misses += 1;
            continue;
        }
        misses = 0;
        s.evaluate(&cfg);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::{MockHls, MockOptions};
    use crate::explore::explore_exhaustive;
    use crate::generator::generate_design_space;
    use crate::kernel::{KernelModel, LoopNode};

    fn mock() -> (DesignSpace, MockHls) {
        let k = KernelModel::new("k", vec![LoopNode::new("o", 8, 2).child(LoopNode::new("i", 24, 3))]);
        let ds = generate_design_space(&k).unwrap();
        let m = MockHls::new(k, ds.clone(), MockOptions::default()).unwrap();
        (ds, m)
    }

    #[test]
    fn seeded_and_budgeted() {
        let (ds, m) = mock();
        let a = explore_random(&ds, &m, Budget::evals(10), 7).unwrap();
        let b = explore_random(&ds, &m, Budget::evals(10), 7).unwrap();
        assert_eq!(a.trace, b.trace);
        assert_eq!(a.evaluations, 10);
        let c = explore_random(&ds, &m, Budget::evals(10), 8).unwrap();
        assert_ne!(a.trace, c.trace);
    }

    #[test]
    fn large_budget_finds_the_oracle() {
        let (ds, m) = mock();
        let oracle = explore_exhaustive(&ds, &m, 10_000).unwrap();
        let r = explore_random(&ds, &m, Budget::evals(1_000_000), 1).unwrap();
        assert_eq!(r.evaluations, oracle.evaluations);
        assert_eq!(r.best_cycles(), oracle.best_cycles());
    }
}
