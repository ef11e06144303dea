//! Bottleneck-guided coordinate optimizer.
//!
//! Pending design points live in one priority heap per level, where the
//! level is the number of parameters already tuned on the way to the
//! point. Each step expands the best point of the deepest nonempty level:
//! it pops the point's most promising child parameter and evaluates every
//! option of it.

use std::cmp::Ordering;
use std::collections::{BTreeSet, BinaryHeap};
use std::sync::atomic::AtomicBool;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::bottleneck::analyze;
use crate::eval::{EvalResult, Evaluator};
use crate::quality::{compare, Quality};
use crate::space::{Config, ConfigKey, DesignSpace, OptionValue, Step};

use super::{Budget, ExploreError, ExploreOutcome, Session, SessionState, StopReason};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignPoint {
    pub config: Config,
    pub tuned: Vec<(String, OptionValue)>,
    pub result: EvalResult,
    pub quality: Quality,
    /// Candidate config and focused parameter; the last entry is the most
    /// promising and is expanded first.
    pub children: Vec<(Config, String)>,
    seq: u64,
}

impl DesignPoint {
    pub fn level(&self) -> usize {
        self.tuned.len()
    }
}

impl Eq for DesignPoint {}

impl Ord for DesignPoint {
    // BinaryHeap is a max-heap, so "greater" means better quality.
    fn cmp(&self, other: &Self) -> Ordering {
        compare(&other.quality, &self.quality)
            .expect("heap qualities share one target")
            .then_with(|| other.seq.cmp(&self.seq))
    }
}

impl PartialOrd for DesignPoint {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Complete search state; saving it between steps makes a run resumable.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct SearchState {
    pub levels: Vec<BinaryHeap<DesignPoint>>,
    pub session: SessionState,
    next_seq: u64,
    started: bool,
    pushed: BTreeSet<ConfigKey>,
    pub stop: Option<StopReason>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepResult {
    Continue,
    Done(StopReason),
}

/// Algorithm state bound to a space and an evaluator.
pub struct BottleneckSearch<'a> {
    ds: &'a DesignSpace,
    session: Session<'a>,
    levels: Vec<BinaryHeap<DesignPoint>>,
    next_seq: u64,
    started: bool,
    pushed: BTreeSet<ConfigKey>,
    stop: Option<StopReason>,
}

impl<'a> BottleneckSearch<'a> {
    pub fn new(ds: &'a DesignSpace, evaluator: &'a dyn Evaluator, budget: Budget) -> Self {
        Self::resume(ds, evaluator, budget, SearchState::default())
    }

    pub fn resume(ds: &'a DesignSpace, evaluator: &'a dyn Evaluator, budget: Budget, state: SearchState) -> Self {
        BottleneckSearch {
            ds,
            session: Session::resume(evaluator, budget, state.session),
            levels: state.levels,
            next_seq: state.next_seq,
            started: state.started,
            pushed: state.pushed,
            stop: state.stop,
        }
    }

    pub fn with_stop(mut self, stop: Option<Arc<AtomicBool>>) -> Self {
        self.session = self.session.with_stop(stop);
        self
    }

    pub fn state(&self) -> SearchState {
        SearchState {
            levels: self.levels.clone(),
            session: self.session.snapshot(),
            next_seq: self.next_seq,
            started: self.started,
            pushed: self.pushed.clone(),
            stop: self.stop,
        }
    }

    pub fn session(&self) -> &Session<'a> {
        &self.session
    }

    pub fn levels(&self) -> &[BinaryHeap<DesignPoint>] {
        &self.levels
    }

    fn push(&mut self, mut point: DesignPoint) {
        point.seq = self.next_seq;
        self.next_seq += 1;
        let level = point.level();
        while self.levels.len() <= level {
            self.levels.push(BinaryHeap::new());
        }
        self.pushed.insert(point.config.key());
        self.levels[level].push(point);
    }

    /// Children for `cfg`: focused parameters pushed least important first.
    fn children(&self, cfg: &Config, order: &[String]) -> Result<Vec<(Config, String)>, ExploreError> {
        let mut out = Vec::with_capacity(order.len());
        for name in order.iter().rev() {
            let candidate = match self.ds.next_value(cfg, name)? {
                Step::Next(v) => cfg.clone().with(name, v),
                Step::Exhausted => cfg.clone(),
            };
            out.push((candidate, name.clone()));
        }
        Ok(out)
    }

    fn order(&self, result: &EvalResult, tuned: &[(String, OptionValue)]) -> Vec<String> {
        let tuned: BTreeSet<String> = tuned.iter().map(|(n, _)| n.clone()).collect();
        match &result.report {
            Some(r) if result.is_ok() => analyze(r, self.ds, &tuned)
                .entries
                .into_iter()
                .map(|e| e.param)
                .collect(),
            _ => self
                .ds
                .eval_order()
                .map(|p| p.name.clone())
                .filter(|n| !tuned.contains(n))
                .collect(),
        }
    }

    fn finish(&mut self, reason: StopReason) -> StepResult {
        self.stop = Some(reason);
        StepResult::Done(reason)
    }

    /// Runs one iteration: the seed evaluation, or one parameter sweep.
    pub fn step(&mut self) -> Result<StepResult, ExploreError> {
        if let Some(r) = self.stop {
            return Ok(StepResult::Done(r));
        }
        if self.session.stop_requested() {
            return Ok(self.finish(StopReason::Interrupted));
        }
        if !self.started {
            let cfg = self.ds.default_config();
            let Some(result) = self.session.evaluate(&cfg) else {
                return Ok(self.finish(StopReason::Budget));
            };
            self.started = true;
            let order = self.order(&result, &[]);
            let children = self.children(&cfg, &order)?;
            let quality = Quality::root(&result, cfg.key());
            self.push(DesignPoint {
                config: cfg,
                tuned: Vec::new(),
                result,
                quality,
                children,
                seq: 0,
            });
            return Ok(StepResult::Continue);
        }
        let Some(level) = self.levels.iter().rposition(|h| !h.is_empty()) else {
            return Ok(self.finish(StopReason::Completed));
        };
        let (candidate, focused, parent_result, parent_tuned) = {
            let mut top = self.levels[level].peek_mut().expect("level is nonempty");
            match top.children.pop() {
                Some((c, f)) => (c, f, top.result.clone(), top.tuned.clone()),
                None => {
                    std::collections::binary_heap::PeekMut::pop(top);
                    return Ok(StepResult::Continue);
                }
            }
        };
        for option in self.ds.eval_options(&focused, &candidate)? {
            let cfg = self.ds.manipulate(&candidate, &focused, option)?;
            let Some(result) = self.session.evaluate(&cfg) else {
                return Ok(self.finish(StopReason::Budget));
            };
            if !result.is_ok() || self.pushed.contains(&cfg.key()) {
                continue;
            }
            let mut tuned = parent_tuned.clone();
            tuned.push((focused.clone(), option));
            let order = self.order(&result, &tuned);
            if order.is_empty() {
                continue;
            }
            let children = self.children(&cfg, &order)?;
            let quality = Quality::finite_difference(&parent_result, &result, cfg.key());
            self.push(DesignPoint {
                config: cfg,
                tuned,
                result,
                quality,
                children,
                seq: 0,
            });
        }
        if self.levels[level].peek().is_some_and(|p| p.children.is_empty()) {
            self.levels[level].pop();
        }
        Ok(StepResult::Continue)
    }

    /// Steps until done; `after_step` sees the state between iterations.
    pub fn run_with(&mut self, mut after_step: impl FnMut(&Self)) -> Result<StopReason, ExploreError> {
        loop {
            match self.step()? {
                StepResult::Continue => after_step(self),
                StepResult::Done(r) => return Ok(r),
            }
        }
    }

    pub fn into_outcome(self) -> ExploreOutcome {
        let stop = self.stop.unwrap_or(StopReason::Interrupted);
        ExploreOutcome::from_session(self.ds, self.session.into_state(), stop)
    }
}

/// Runs the bottleneck-guided search to completion or budget exhaustion.
pub fn explore_bottleneck(
    ds: &DesignSpace,
    evaluator: &dyn Evaluator,
    budget: Budget,
) -> Result<ExploreOutcome, ExploreError> {
    let mut search = BottleneckSearch::new(ds, evaluator, budget);
    search.run_with(|_| {})?;
    Ok(search.into_outcome())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::{EvalStatus, MockHls, MockOptions};
    use crate::generator::generate_design_space;
    use crate::kernel::{KernelModel, LoopNode};

    fn single_param() -> (DesignSpace, MockHls) {
        let k = KernelModel::new("k", vec![LoopNode::new("o", 4, 1).child(LoopNode::new("i", 8, 2))]);
        let ds = DesignSpace::parse(
            "loop: o\n#pragma ACCEL PIPELINE mode=auto{ options: PIPE_o=[x for x in ['off','cg','fg']]; default: 'off' }\n",
        )
        .unwrap()
        .with_loops(k.hierarchy())
        .unwrap();
        let m = MockHls::new(k, ds.clone(), MockOptions::default()).unwrap();
        (ds, m)
    }

    #[test]
    fn single_parameter_sweep() {
        let (ds, m) = single_param();
        let out = explore_bottleneck(&ds, &m, Budget::unlimited()).unwrap();
        // default, then cg and fg; off repeats the default for free
        assert_eq!(out.evaluations, 3);
        assert_eq!(out.stop, StopReason::Completed);
        let all: Vec<u64> = ["off", "cg", "fg"]
            .iter()
            .map(|v| {
                let c = ds.default_config().with("PIPE_o", v.parse().unwrap());
                m.evaluate(&c).cycles.unwrap()
            })
            .collect();
        assert_eq!(out.best_cycles(), all.iter().min().copied());
    }

    #[test]
    fn seed_only_budget_returns_default() {
        let (ds, m) = single_param();
        let out = explore_bottleneck(&ds, &m, Budget::evals(1)).unwrap();
        assert_eq!(out.evaluations, 1);
        assert_eq!(out.best_config, ds.default_config());
        assert_eq!(out.stop, StopReason::Budget);
        let none = explore_bottleneck(&ds, &m, Budget::evals(0)).unwrap();
        assert!(!none.feasible);
        assert_eq!(none.best_config, ds.default_config());
    }

    #[test]
    fn nothing_feasible_is_flagged() {
        let mut k = KernelModel::new("k", vec![LoopNode::new("o", 64, 1).child(LoopNode::new("i", 64, 1))]);
        k.resource_budget.lut = 10;
        let ds = generate_design_space(&k).unwrap();
        let m = MockHls::new(k, ds.clone(), MockOptions::default()).unwrap();
        let out = explore_bottleneck(&ds, &m, Budget::evals(30)).unwrap();
        assert!(!out.feasible);
        assert!(out.trace.entries.iter().all(|e| e.status == EvalStatus::OverUtil));
        assert_eq!(out.clone().require_feasible(), Err(ExploreError::NoFeasiblePoint));
    }

    #[test]
    fn resumed_search_matches_uninterrupted() {
        let k = KernelModel::new(
            "k",
            vec![LoopNode::new("o", 32, 2).child(LoopNode::new("i", 64, 3).quirk(4, 3))],
        );
        let ds = generate_design_space(&k).unwrap();
        let m = MockHls::new(k, ds.clone(), MockOptions::default()).unwrap();
        let full = explore_bottleneck(&ds, &m, Budget::evals(40)).unwrap();

        let mut a = BottleneckSearch::new(&ds, &m, Budget::evals(40));
        for _ in 0..5 {
            a.step().unwrap();
        }
        let saved = serde_json::to_string(&a.state()).unwrap();
        let restored: SearchState = serde_json::from_str(&saved).unwrap();
        let mut b = BottleneckSearch::resume(&ds, &m, Budget::evals(40), restored);
        b.run_with(|_| {}).unwrap();
        let resumed = b.into_outcome();
        assert_eq!(resumed.best_config, full.best_config);
        assert_eq!(resumed.trace, full.trace);
    }
}
