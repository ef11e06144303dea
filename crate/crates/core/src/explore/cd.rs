//! Plain coordinate descent driven by the finite-difference quality.

use crate::eval::Evaluator;
use crate::quality::{compare, Quality};
use crate::space::{Config, DesignSpace, Step};

use super::{Budget, ExploreError, ExploreOutcome, Session, StopReason};

/// Each iteration advances every parameter by one option (one candidate
/// per parameter), evaluates the candidates, and moves to the one with the
/// best finite-difference score among those that lower the cycle count.
/// Stops when no candidate lowers it.
pub fn explore_coordinate_descent(
    ds: &DesignSpace,
    evaluator: &dyn Evaluator,
    budget: Budget,
) -> Result<ExploreOutcome, ExploreError> {
    let mut s = Session::new(evaluator, budget);
    let mut cur = ds.default_config();
    let Some(mut cur_result) = s.evaluate(&cur) else {
        return Ok(ExploreOutcome::from_session(ds, s.into_state(), StopReason::Budget));
    };
    loop {
        let mut candidates: Vec<Config> = Vec::new();
        for p in ds.eval_order() {
            if let Step::Next(v) = ds.next_value(&cur, &p.name)? {
                let c = ds.manipulate(&cur, &p.name, v)?;
                if c != cur && !candidates.contains(&c) {
                    candidates.push(c);
                }
            }
        }
        let mut best: Option<(Quality, Config, _)> = None;
        for c in candidates {
            let Some(r) = s.evaluate(&c) else {
                return Ok(ExploreOutcome::from_session(ds, s.into_state(), StopReason::Budget));
            };
            let improves = match (r.is_ok(), cur_result.is_ok()) {
                (true, true) => r.cycles < cur_result.cycles,
                (true, false) => true,
                _ => false,
            };
            if !improves {
                continue;
            }
            let q = Quality::finite_difference(&cur_result, &r, c.key());
            let take = match &best {
                None => true,
                Some((bq, _, _)) => compare(&q, bq).expect("same target").is_lt(),
            };
            if take {
                best = Some((q, c, r));
            }
        }
        match best {
            Some((_, c, r)) => {
                cur = c;
                cur_result = r;
            }
            None => break,
        }
        if s.stop_requested() {
            return Ok(ExploreOutcome::from_session(ds, s.into_state(), StopReason::Interrupted));
        }
    }
    Ok(ExploreOutcome::from_session(ds, s.into_state(), StopReason::Completed))
}
