use crate::eval::Evaluator;
use crate::space::DesignSpace;

use super::{Budget, ExploreError, ExploreOutcome, Session, StopReason};

/// Evaluates every valid configuration; the ground-truth optimum.
pub fn explore_exhaustive(
    ds: &DesignSpace,
    evaluator: &dyn Evaluator,
    cap: u64,
) -> Result<ExploreOutcome, ExploreError> {
    let configs = ds.enumerate_all(cap)?;
    let mut s = Session::new(evaluator, Budget::unlimited());
    for c in &configs {
        s.evaluate(c);
    }
    ExploreOutcome::from_session(ds, s.into_state(), StopReason::Completed).require_feasible()
}
