//! Search strategies over a design space.
//!
//! All strategies evaluate through a [`Session`], which owns the budget,
//! the per-run memo (a configuration is charged and traced once) and the
//! best-so-far tracking.

mod bottleneck;
mod cd;
mod exhaustive;
mod random;

use std::collections::BTreeMap;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::eval::{EvalResult, EvalStatus, Evaluator};
use crate::space::{Config, ConfigKey, DesignSpace, SpaceError};

pub use bottleneck::{explore_bottleneck, BottleneckSearch, DesignPoint, SearchState, StepResult};
pub use cd::explore_coordinate_descent;
pub use exhaustive::explore_exhaustive;
pub use random::explore_random;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExploreError {
    #[error(transparent)]
    Space(#[from] SpaceError),
    #[error("no feasible configuration was found")]
    NoFeasiblePoint,
}

/// Which clock the time limit is measured on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Clock {
    /// Sum of the evaluations' reported durations. Deterministic.
    #[default]
    Simulated,
    Wall,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Budget {
    /// Distinct configurations that may be evaluated.
    pub max_evals: Option<u64>,
    /// Seconds on `clock`.
    pub time_limit: Option<f64>,
    pub clock: Clock,
}

impl Budget {
    pub fn unlimited() -> Self {
        Budget::default()
    }

    pub fn evals(n: u64) -> Self {
        Budget {
            max_evals: Some(n),
            ..Budget::default()
        }
    }

    pub fn seconds(s: f64, clock: Clock) -> Self {
        Budget {
            max_evals: None,
            time_limit: Some(s),
            clock,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    /// 1-based index among this run's distinct evaluations.
    pub index: u64,
    /// Seconds on the budget clock when the evaluation finished.
    pub elapsed: f64,
    pub key: ConfigKey,
    pub status: EvalStatus,
    pub cycles: Option<u64>,
    pub best_cycles: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ExploreTrace {
    pub entries: Vec<TraceEntry>,
}

impl ExploreTrace {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// CSV with a header row: index, elapsed, key, status, cycles, best.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("eval_index,elapsed_s,config_key,status,cycles,best_cycles\n");
        let opt = |v: Option<u64>| v.map(|c| c.to_string()).unwrap_or_default();
        for e in &self.entries {
            out.push_str(&format!(
                "{},{:.3},{},{},{},{}\n",
                e.index,
                e.elapsed,
                e.key,
                e.status.as_str(),
                opt(e.cycles),
                opt(e.best_cycles)
            ));
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BestPoint {
    pub config: Config,
    pub result: EvalResult,
}

impl BestPoint {
    pub fn cycles(&self) -> u64 {
        self.result.cycles.expect("best points are feasible")
    }
}

/// Serializable part of a session.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SessionState {
    pub memo: BTreeMap<ConfigKey, EvalResult>,
    pub evaluations: u64,
    /// Seconds already spent on the budget clock.
    pub elapsed: f64,
    pub trace: ExploreTrace,
    pub best: Option<BestPoint>,
}

/// Budgeted, memoized access to an evaluator for one exploration run.
pub struct Session<'a> {
    evaluator: &'a dyn Evaluator,
    budget: Budget,
    state: SessionState,
    started: Instant,
    stop: Option<Arc<AtomicBool>>,
}

impl<'a> Session<'a> {
    pub fn new(evaluator: &'a dyn Evaluator, budget: Budget) -> Self {
        Session::resume(evaluator, budget, SessionState::default())
    }

    pub fn resume(evaluator: &'a dyn Evaluator, budget: Budget, state: SessionState) -> Self {
        Session {
            evaluator,
            budget,
            state,
            started: Instant::now(),
            stop: None,
        }
    }

    pub fn with_stop(mut self, stop: Option<Arc<AtomicBool>>) -> Self {
        self.stop = stop;
        self
    }

    pub fn state(&self) -> &SessionState {
        &self.state
    }

    pub fn into_state(mut self) -> SessionState {
        self.state.elapsed = self.elapsed();
        self.state
    }

    /// Snapshot for checkpointing.
    pub fn snapshot(&self) -> SessionState {
        let mut s = self.state.clone();
        s.elapsed = self.elapsed();
        s
    }

    pub fn elapsed(&self) -> f64 {
        match self.budget.clock {
            Clock::Simulated => self.state.elapsed,
            Clock::Wall => self.state.elapsed + self.started.elapsed().as_secs_f64(),
        }
    }

    pub fn evaluations(&self) -> u64 {
        self.state.evaluations
    }

    pub fn stop_requested(&self) -> bool {
        self.stop.as_ref().is_some_and(|s| s.load(Ordering::SeqCst))
    }

    /// Whether another new evaluation may start.
    pub fn exhausted(&self) -> bool {
        self.budget.max_evals.is_some_and(|m| self.state.evaluations >= m)
            || self.budget.time_limit.is_some_and(|t| self.elapsed() >= t)
    }

    pub fn seen(&self, cfg: &Config) -> Option<&EvalResult> {
        self.state.memo.get(&cfg.key())
    }

    /// Evaluates `cfg`, or returns `None` when the budget does not allow a
    /// new evaluation. Repeats are answered from the memo for free.
    pub fn evaluate(&mut self, cfg: &Config) -> Option<EvalResult> {
        let key = cfg.key();
        if let Some(r) = self.state.memo.get(&key) {
            return Some(r.clone());
        }
        if self.exhausted() {
            return None;
        }
        let r = self.evaluator.evaluate(cfg);
        self.state.evaluations += 1;
        if self.budget.clock == Clock::Simulated {
            self.state.elapsed += r.eval_seconds;
        }
        if let Some(c) = r.cycles.filter(|_| r.is_ok()) {
            let better = match &self.state.best {
                None => true,
                Some(b) => (c, &key) < (b.cycles(), &b.config.key()),
            };
            if better {
                self.state.best = Some(BestPoint {
                    config: cfg.clone(),
                    result: r.clone(),
                });
            }
        }
        let entry = TraceEntry {
            index: self.state.evaluations,
            elapsed: self.elapsed(),
            key: key.clone(),
            status: r.status,
            cycles: r.cycles,
            best_cycles: self.state.best.as_ref().map(BestPoint::cycles),
        };
        self.state.trace.entries.push(entry);
        self.state.memo.insert(key, r.clone());
        Some(r)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    /// The strategy ran out of things to try.
    Completed,
    Budget,
    Interrupted,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExploreOutcome {
    /// Best feasible configuration, or the default one when nothing was feasible.
    pub best_config: Config,
    pub best_result: Option<EvalResult>,
    pub feasible: bool,
    pub trace: ExploreTrace,
    pub evaluations: u64,
    pub elapsed: f64,
    pub stop: StopReason,
}

impl ExploreOutcome {
    fn from_session(ds: &DesignSpace, s: SessionState, stop: StopReason) -> Self {
        let (best_config, best_result, feasible) = match s.best {
            Some(b) => (b.config, Some(b.result), true),
            None => (ds.default_config(), None, false),
        };
        ExploreOutcome {
            best_config,
            best_result,
            feasible,
            trace: s.trace,
            evaluations: s.evaluations,
            elapsed: s.elapsed,
            stop,
        }
    }

    pub fn best_cycles(&self) -> Option<u64> {
        self.best_result.as_ref().and_then(|r| r.cycles)
    }

    pub fn require_feasible(self) -> Result<Self, ExploreError> {
        if self.feasible {
            Ok(self)
        } else {
            Err(ExploreError::NoFeasiblePoint)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::ResourceUtil;
    use crate::space::OptionValue;
    use std::sync::atomic::AtomicU64;

    struct Fixed(AtomicU64);

    impl Evaluator for Fixed {
        fn evaluate(&self, cfg: &Config) -> EvalResult {
            self.0.fetch_add(1, Ordering::SeqCst);
            let v = cfg.get("P").and_then(|v| v.as_factor()).unwrap_or(0) as u64;
            EvalResult {
                status: if v == 3 { EvalStatus::Timeout } else { EvalStatus::Ok },
                cycles: (v != 3).then_some(100 - v),
                util: ResourceUtil::default(),
                report: None,
                eval_seconds: 10.0,
            }
        }
    }

    fn p(v: i64) -> Config {
        Config::default().with("P", OptionValue::Factor(v))
    }

    #[test]
    fn memo_budget_and_best() {
        let ev = Fixed(AtomicU64::new(0));
        let mut s = Session::new(&ev, Budget::evals(3));
        assert!(s.evaluate(&p(1)).is_some());
        assert!(s.evaluate(&p(1)).is_some());
        assert!(s.evaluate(&p(3)).is_some());
        assert!(s.evaluate(&p(2)).is_some());
        assert!(s.evaluate(&p(5)).is_none());
        assert!(s.evaluate(&p(2)).is_some());
        assert_eq!(ev.0.load(Ordering::SeqCst), 3);
        let st = s.into_state();
        assert_eq!(st.trace.len(), 3);
        assert_eq!(st.best.unwrap().cycles(), 98);
        assert_eq!(st.elapsed, 30.0);
        let best: Vec<_> = st.trace.entries.iter().map(|e| e.best_cycles).collect();
        assert_eq!(best, [Some(99), Some(99), Some(98)]);
    }

    #[test]
    fn simulated_time_limit() {
        let ev = Fixed(AtomicU64::new(0));
        let mut s = Session::new(&ev, Budget::seconds(25.0, Clock::Simulated));
        let n = (1..10).take_while(|&v| s.evaluate(&p(v)).is_some()).count();
        assert_eq!(n, 3);
    }
}
