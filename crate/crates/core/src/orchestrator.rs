//! End-to-end runs: load inputs, partition, explore the representatives on
//! a pool of workers, and write the reports.
//!
//! Output directory layout:
//!
//! ```text
//! design_space.txt      the space that was explored
//! results.jsonl         every evaluation (shared cache, used on resume)
//! partitions.json       partition manifest with profiles and selection
//! checkpoints/          per-partition search state
//! report.json           run report (deterministic for a fixed seed)
//! timing.json           wall time and cache statistics
//! traces/partition-N.csv
//! best_config.txt       best configuration as pinned pragmas
//! summary.txt
//! ```

use std::collections::VecDeque;
use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::{Arc, Mutex};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::eval::{
    CachedEvaluator, EvalResult, Evaluator, MockHls, MockOptions, ResourceUtil, ResultStore, StorageError,
    DEFAULT_EVAL_TIMEOUT_S, DEFAULT_TU,
};
use crate::explore::{BottleneckSearch, Budget, Clock, ExploreError, ExploreTrace, SearchState, StopReason};
use crate::generator::{generate_design_space, space_size, SpaceSize};
use crate::kernel::{KernelModel, ModelError};
use crate::partition::{
    enumerate_partitions, profile_partition, select_representatives, Partition, PartitionError, PartitionProfile,
    SplitEntry, DEFAULT_PARTITION_CAP,
};
use crate::space::{Config, DesignSpace, SpaceError};

const VERSION: u32 = 1;
pub const REPORT_FORMAT: &str = "autodse-run-report";
pub const MANIFEST_FORMAT: &str = "autodse-partitions";
pub const CHECKPOINT_FORMAT: &str = "autodse-checkpoint";
pub const TIMING_FORMAT: &str = "autodse-timing";
/// Valid points counted exactly before falling back to an estimate.
const SIZE_CAP: u64 = 100_000;
/// Steps between periodic checkpoint writes.
const CHECKPOINT_EVERY: u64 = 32;

#[derive(Debug, Error)]
pub enum OrchestratorError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("kernel model: {0}")]
    Model(#[from] ModelError),
    #[error("design space: {0}")]
    Space(#[from] SpaceError),
    #[error(transparent)]
    Partition(#[from] PartitionError),
    #[error(transparent)]
    Explore(#[from] ExploreError),
    #[error(transparent)]
    Storage(#[from] StorageError),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },
    #[error("{0} not found")]
    NotFound(PathBuf),
}

impl OrchestratorError {
    fn io(path: &Path, source: io::Error) -> Self {
        OrchestratorError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    /// Whether the error stems from bad user input rather than a failure.
    pub fn is_config_error(&self) -> bool {
        matches!(
            self,
            OrchestratorError::Config(_)
                | OrchestratorError::Model(_)
                | OrchestratorError::Space(_)
                | OrchestratorError::Partition(_)
                | OrchestratorError::NotFound(_)
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EvaluatorKind {
    #[default]
    Mock,
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub model: PathBuf,
    /// Generated from the model when absent.
    pub space: Option<PathBuf>,
    pub evaluator: EvaluatorKind,
    pub threads: usize,
    /// Global exploration budget in seconds on `clock`.
    pub dse_timeout: f64,
    pub clock: Clock,
    /// Optional global cap on distinct evaluations.
    pub max_evals: Option<u64>,
    pub tu: f64,
    pub eval_timeout: f64,
    pub seed: u64,
    pub out: PathBuf,
    pub resume: bool,
    /// Run partitions one after another, deterministically.
    pub serial: bool,
    /// Number of representative partitions; defaults to `threads`.
    pub representatives: Option<usize>,
    pub partition_cap: u64,
    /// Stop exploring after this many new evaluations (for testing resume).
    pub interrupt_after: Option<u64>,
    pub stop: Option<Arc<AtomicBool>>,
}

impl RunConfig {
    pub fn new(model: impl Into<PathBuf>, out: impl Into<PathBuf>) -> Self {
        RunConfig {
            model: model.into(),
            space: None,
            evaluator: EvaluatorKind::Mock,
            threads: 1,
            dse_timeout: 86_400.0,
            clock: Clock::Simulated,
            max_evals: None,
            tu: DEFAULT_TU,
            eval_timeout: DEFAULT_EVAL_TIMEOUT_S,
            seed: 0,
            out: out.into(),
            resume: false,
            serial: false,
            representatives: None,
            partition_cap: DEFAULT_PARTITION_CAP,
            interrupt_after: None,
            stop: None,
        }
    }

    pub fn validate(&self) -> Result<(), OrchestratorError> {
        let bad = |m: &str| Err(OrchestratorError::Config(m.to_string()));
        if self.threads < 1 {
            return bad("threads must be at least 1");
        }
        if !(self.dse_timeout > 0.0) {
            return bad("timeout must be positive");
        }
        if !(self.tu > 0.0 && self.tu < 1.0) {
            return bad("utilization threshold must lie strictly between 0 and 1");
        }
        if !(self.eval_timeout > 0.0) {
            return bad("per-evaluation timeout must be positive");
        }
        if self.representatives == Some(0) {
            return bad("at least one representative partition is needed");
        }
        Ok(())
    }

    fn global_budget(&self) -> Budget {
        Budget {
            max_evals: self.max_evals,
            time_limit: Some(self.dse_timeout),
            clock: self.clock,
        }
    }
}

/// Reads the kernel model and the design space (or generates it).
pub fn load_inputs(model: &Path, space: Option<&Path>) -> Result<(KernelModel, DesignSpace), OrchestratorError> {
    let read = |p: &Path| match fs::read_to_string(p) {
        Ok(s) => Ok(s),
        Err(e) if e.kind() == io::ErrorKind::NotFound => Err(OrchestratorError::NotFound(p.to_path_buf())),
        Err(e) => Err(OrchestratorError::io(p, e)),
    };
    let kernel = KernelModel::parse(&read(model)?)?;
    let ds = match space {
        Some(p) => DesignSpace::parse(&read(p)?)?.with_loops(kernel.hierarchy())?,
        None => generate_design_space(&kernel)?,
    };
    Ok((kernel, ds))
}

pub fn build_evaluator(
    kind: EvaluatorKind,
    kernel: &KernelModel,
    ds: &DesignSpace,
    opts: MockOptions,
) -> Result<Arc<dyn Evaluator>, OrchestratorError> {
    match kind {
        EvaluatorKind::Mock => Ok(Arc::new(MockHls::new(kernel.clone(), ds.clone(), opts)?)),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub id: u64,
    pub mode_split: Vec<SplitEntry>,
    pub profile: PartitionProfile,
    pub selected: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartitionManifest {
    pub format: String,
    pub version: u32,
    pub seed: u64,
    pub representatives: usize,
    pub entries: Vec<ManifestEntry>,
    /// Selected ids in scheduling order.
    pub selected: Vec<u64>,
}

/// Enumerates and profiles partitions, then picks representatives.
pub fn partition_stage(
    ds: &DesignSpace,
    evaluator: &dyn Evaluator,
    representatives: usize,
    cap: u64,
    seed: u64,
    threads: usize,
) -> Result<(Vec<Partition>, PartitionManifest), OrchestratorError> {
    let parts = enumerate_partitions(ds, cap)?;
    let profiles: Vec<PartitionProfile> = if threads <= 1 || parts.len() <= 1 {
        parts.iter().map(|p| profile_partition(p, evaluator)).collect()
    } else {
        let next = AtomicU64::new(0);
        let slots: Mutex<Vec<Option<PartitionProfile>>> = Mutex::new(vec![None; parts.len()]);
        std::thread::scope(|s| {
            for _ in 0..threads.min(parts.len()) {
                s.spawn(|| loop {
                    let i = next.fetch_add(1, Ordering::SeqCst) as usize;
                    let Some(p) = parts.get(i) else { break };
                    let prof = profile_partition(p, evaluator);
                    slots.lock().expect("profile lock poisoned")[i] = Some(prof);
                });
            }
        });
        slots
            .into_inner()
            .expect("profile lock poisoned")
            .into_iter()
            .map(|p| p.expect("every partition profiled"))
            .collect()
    };
    let selected = select_representatives(&profiles, representatives, seed);
    let entries = parts
        .iter()
        .zip(&profiles)
        .map(|(p, prof)| ManifestEntry {
            id: p.id,
            mode_split: p.mode_split.clone(),
            profile: prof.clone(),
            selected: selected.contains(&p.id),
        })
        .collect();
    Ok((
        parts,
        PartitionManifest {
            format: MANIFEST_FORMAT.to_string(),
            version: VERSION,
            seed,
            representatives,
            entries,
            selected,
        },
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartitionReport {
    pub id: u64,
    pub mode_split: Vec<SplitEntry>,
    pub budget: Budget,
    pub evaluations: u64,
    pub stop: StopReason,
    pub feasible: bool,
    pub best_config: Config,
    pub best_cycles: Option<u64>,
    pub trace: ExploreTrace,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GlobalBest {
    pub partition: u64,
    pub config: Config,
    pub cycles: u64,
    pub util: ResourceUtil,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Totals {
    /// Distinct evaluations charged to explorers.
    pub evaluations: u64,
    pub profiling_evaluations: u64,
    pub partitions_total: usize,
    pub partitions_explored: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub format: String,
    pub version: u32,
    pub kernel: String,
    pub seed: u64,
    pub threads: usize,
    pub tu: f64,
    pub space: SpaceSize,
    pub parameters: usize,
    pub default_config: Config,
    /// False when the run was interrupted before every partition finished.
    pub complete: bool,
    pub feasible: bool,
    pub best: Option<GlobalBest>,
    pub partitions: Vec<PartitionReport>,
    pub totals: Totals,
}

/// Run statistics that vary between otherwise identical runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub format: String,
    pub version: u32,
    pub wall_seconds: f64,
    pub backend_calls: u64,
    pub cache_hits: u64,
    pub resumed: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct Checkpoint {
    format: String,
    version: u32,
    partition: u64,
    budget: Budget,
    done: bool,
    state: SearchState,
}

/// Splits the global budget among partitions as they are pulled.
struct BudgetLedger {
    evals: Option<u64>,
    /// Worker-seconds: the time limit times the number of workers.
    seconds: Option<f64>,
    clock: Clock,
    queued: usize,
}

impl BudgetLedger {
    fn share(&mut self) -> Budget {
        let q = self.queued.max(1);
        self.queued = self.queued.saturating_sub(1);
        let evals = self.evals.map(|e| e / q as u64);
        let seconds = self.seconds.map(|s| s / q as f64);
        self.take(Budget {
            max_evals: evals,
            time_limit: seconds,
            clock: self.clock,
        })
    }

    fn take(&mut self, b: Budget) -> Budget {
        if let (Some(e), Some(x)) = (&mut self.evals, b.max_evals) {
            *e = e.saturating_sub(x);
        }
        if let (Some(s), Some(x)) = (&mut self.seconds, b.time_limit) {
            *s = (*s - x).max(0.0);
        }
        b
    }

    fn refund(&mut self, b: &Budget, used_evals: u64, used_seconds: f64) {
        if let (Some(e), Some(x)) = (&mut self.evals, b.max_evals) {
            *e += x.saturating_sub(used_evals);
        }
        if let (Some(s), Some(x)) = (&mut self.seconds, b.time_limit) {
            *s += (x - used_seconds).max(0.0);
        }
    }
}

/// Counts new evaluations and raises the stop flag after a limit.
struct InterruptAfter {
    inner: Arc<dyn Evaluator>,
    seen: AtomicU64,
    limit: u64,
    stop: Arc<AtomicBool>,
}

impl Evaluator for InterruptAfter {
    fn evaluate(&self, cfg: &Config) -> EvalResult {
        let r = self.inner.evaluate(cfg);
        if self.seen.fetch_add(1, Ordering::SeqCst) + 1 >= self.limit {
            self.stop.store(true, Ordering::SeqCst);
        }
        r
    }
}

fn write_atomic(path: &Path, contents: &str) -> Result<(), OrchestratorError> {
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, contents).map_err(|e| OrchestratorError::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| OrchestratorError::io(path, e))
}

fn to_json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("report types serialize");
    s.push('\n');
    s
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, OrchestratorError> {
    let text = match fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) if e.kind() == io::ErrorKind::NotFound => return Err(OrchestratorError::NotFound(path.to_path_buf())),
        Err(e) => return Err(OrchestratorError::io(path, e)),
    };
    serde_json::from_str(&text).map_err(|e| OrchestratorError::Format {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

fn checkpoint_path(out: &Path, id: u64) -> PathBuf {
    out.join("checkpoints").join(format!("partition-{id}.json"))
}

fn load_checkpoint(out: &Path, id: u64) -> Result<Option<Checkpoint>, OrchestratorError> {
    let path = checkpoint_path(out, id);
    if !path.exists() {
        return Ok(None);
    }
    let c: Checkpoint = read_json(&path)?;
    if c.format != CHECKPOINT_FORMAT || c.version != VERSION || c.partition != id {
        return Err(OrchestratorError::Format {
            path,
            message: "not a checkpoint for this partition".to_string(),
        });
    }
    Ok(Some(c))
}

fn save_checkpoint(out: &Path, c: &Checkpoint) -> Result<(), OrchestratorError> {
    write_atomic(&checkpoint_path(out, c.partition), &to_json(c))
}

struct Shared<'a> {
    out: &'a Path,
    evaluator: &'a dyn Evaluator,
    stop: Arc<AtomicBool>,
    best_cycles: AtomicU64,
    ledger: Mutex<BudgetLedger>,
}

fn explore_partition(sh: &Shared<'_>, p: &Partition, resume: bool) -> Result<PartitionReport, OrchestratorError> {
    let saved = if resume { load_checkpoint(sh.out, p.id)? } else { None };
    let (budget, mut state, done) = match saved {
        Some(c) => {
            sh.ledger.lock().expect("ledger lock poisoned").take(c.budget);
            (c.budget, c.state, c.done)
        }
        None => (
            sh.ledger.lock().expect("ledger lock poisoned").share(),
            SearchState::default(),
            false,
        ),
    };
    if state.stop == Some(StopReason::Interrupted) {
        state.stop = None;
    }
    let mut search =
        BottleneckSearch::resume(&p.space, sh.evaluator, budget, state).with_stop(Some(sh.stop.clone()));
    let mut steps = 0u64;
    let mut io_error = None;
    if !done {
        search.run_with(|s| {
            steps += 1;
            if let Some(b) = s.session().state().best.as_ref() {
                let prev = sh.best_cycles.fetch_min(b.cycles(), Ordering::SeqCst);
                if b.cycles() < prev {
                    log::info!("partition {}: new global best {} cycles", p.id, b.cycles());
                }
            }
            if steps % CHECKPOINT_EVERY == 0 && io_error.is_none() {
                let c = Checkpoint {
                    format: CHECKPOINT_FORMAT.to_string(),
                    version: VERSION,
                    partition: p.id,
                    budget,
                    done: false,
                    state: s.state(),
                };
                io_error = save_checkpoint(sh.out, &c).err();
            }
        })?;
    }
    if let Some(e) = io_error {
        return Err(e);
    }
    let state = search.state();
    let finished = state.stop != Some(StopReason::Interrupted);
    save_checkpoint(
        sh.out,
        &Checkpoint {
            format: CHECKPOINT_FORMAT.to_string(),
            version: VERSION,
            partition: p.id,
            budget,
            done: finished,
            state,
        },
    )?;
    let outcome = search.into_outcome();
    if finished {
        sh.ledger
            .lock()
            .expect("ledger lock poisoned")
            .refund(&budget, outcome.evaluations, outcome.elapsed);
    }
    Ok(PartitionReport {
        id: p.id,
        mode_split: p.mode_split.clone(),
        budget,
        evaluations: outcome.evaluations,
        stop: outcome.stop,
        feasible: outcome.feasible,
        best_cycles: outcome.best_cycles(),
        best_config: outcome.best_config,
        trace: outcome.trace,
    })
}

fn prepare_out_dir(rc: &RunConfig) -> Result<(), OrchestratorError> {
    let out = &rc.out;
    fs::create_dir_all(out.join("checkpoints")).map_err(|e| OrchestratorError::io(out, e))?;
    fs::create_dir_all(out.join("traces")).map_err(|e| OrchestratorError::io(out, e))?;
    if !rc.resume {
        let results = out.join("results.jsonl");
        if results.exists() {
            fs::remove_file(&results).map_err(|e| OrchestratorError::io(&results, e))?;
        }
        for dir in ["checkpoints", "traces"] {
            let d = out.join(dir);
            for entry in fs::read_dir(&d).map_err(|e| OrchestratorError::io(&d, e))? {
                let path = entry.map_err(|e| OrchestratorError::io(&d, e))?.path();
                fs::remove_file(&path).map_err(|e| OrchestratorError::io(&path, e))?;
            }
        }
    }
    Ok(())
}

/// Full exploration run.
pub fn run(rc: &RunConfig) -> Result<RunReport, OrchestratorError> {
    rc.validate()?;
    let started = Instant::now();
    let (kernel, ds) = load_inputs(&rc.model, rc.space.as_deref())?;
    prepare_out_dir(rc)?;
    fs::write(rc.out.join("design_space.txt"), ds.to_text()).map_err(|e| OrchestratorError::io(&rc.out, e))?;

    let opts = MockOptions {
        tu: rc.tu,
        eval_timeout_s: rc.eval_timeout,
    };
    let backend = build_evaluator(rc.evaluator, &kernel, &ds, opts)?;
    let store = Arc::new(ResultStore::open(rc.out.join("results.jsonl"))?);
    let cached = Arc::new(CachedEvaluator::new(backend, store));

    let t = rc.threads;
    let reps = rc.representatives.unwrap_or(t);
    let profile_calls_before = cached.backend_calls() + cached.hits();
    let (parts, manifest) = partition_stage(&ds, cached.as_ref(), reps, rc.partition_cap, rc.seed, if rc.serial { 1 } else { t })?;
    let profiling_evaluations = cached.backend_calls() + cached.hits() - profile_calls_before;
    write_atomic(&rc.out.join("partitions.json"), &to_json(&manifest))?;

    let stop = rc.stop.clone().unwrap_or_default();
    let explorer_eval: Arc<dyn Evaluator> = match rc.interrupt_after {
        Some(limit) => Arc::new(InterruptAfter {
            inner: cached.clone(),
            seen: AtomicU64::new(0),
            limit,
            stop: stop.clone(),
        }),
        None => cached.clone(),
    };
    let global = rc.global_budget();
    let shared = Shared {
        out: &rc.out,
        evaluator: explorer_eval.as_ref(),
        stop: stop.clone(),
        best_cycles: AtomicU64::new(u64::MAX),
        ledger: Mutex::new(BudgetLedger {
            evals: global.max_evals,
            seconds: global.time_limit.map(|s| s * t as f64),
            clock: global.clock,
            queued: manifest.selected.len(),
        }),
    };
    let by_id = |id: u64| parts.iter().find(|p| p.id == id).expect("selected partitions exist");
    let mut reports: Vec<PartitionReport> = Vec::new();
    if rc.serial || t == 1 {
        for &id in &manifest.selected {
            if stop.load(Ordering::SeqCst) {
                break;
            }
            reports.push(explore_partition(&shared, by_id(id), rc.resume)?);
        }
    } else {
        let queue = Mutex::new(manifest.selected.iter().copied().collect::<VecDeque<u64>>());
        let results: Mutex<Vec<Result<PartitionReport, OrchestratorError>>> = Mutex::new(Vec::new());
        std::thread::scope(|s| {
            for _ in 0..t.min(manifest.selected.len()) {
                s.spawn(|| loop {
                    if stop.load(Ordering::SeqCst) {
                        break;
                    }
                    let Some(id) = queue.lock().expect("queue lock poisoned").pop_front() else {
                        break;
                    };
                    let r = explore_partition(&shared, by_id(id), rc.resume);
                    results.lock().expect("results lock poisoned").push(r);
                });
            }
        });
        for r in results.into_inner().expect("results lock poisoned") {
            reports.push(r?);
        }
        let order = |id: u64| manifest.selected.iter().position(|&s| s == id);
        reports.sort_by_key(|r| order(r.id));
    }

    let complete = reports.len() == manifest.selected.len() && reports.iter().all(|r| r.stop != StopReason::Interrupted);
    let best = reports
        .iter()
        .filter_map(|r| r.best_cycles.map(|c| (c, r)))
        .min_by(|a, b| a.0.cmp(&b.0).then(a.1.id.cmp(&b.1.id)))
        .map(|(cycles, r)| GlobalBest {
            partition: r.id,
            config: r.best_config.clone(),
            cycles,
            util: cached.store().get(&r.best_config.key()).map(|x| x.util).unwrap_or_default(),
        });
    let report = RunReport {
        format: REPORT_FORMAT.to_string(),
        version: VERSION,
        kernel: kernel.name.clone(),
        seed: rc.seed,
        threads: t,
        tu: rc.tu,
        space: space_size(&ds, SIZE_CAP, rc.seed),
        parameters: ds.len(),
        default_config: ds.default_config(),
        complete,
        feasible: best.is_some(),
        best,
        totals: Totals {
            evaluations: reports.iter().map(|r| r.evaluations).sum(),
            profiling_evaluations,
            partitions_total: parts.len(),
            partitions_explored: reports.len(),
        },
        partitions: reports,
    };
    write_atomic(&rc.out.join("report.json"), &to_json(&report))?;
    let timing = Timing {
        format: TIMING_FORMAT.to_string(),
        version: VERSION,
        wall_seconds: started.elapsed().as_secs_f64(),
        backend_calls: cached.backend_calls(),
        cache_hits: cached.hits(),
        resumed: rc.resume,
    };
    write_atomic(&rc.out.join("timing.json"), &to_json(&timing))?;
    render_artifacts(&report, &ds, &rc.out)?;
    Ok(report)
}

/// Human-readable summary of a run report.
pub fn summary_text(r: &RunReport) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "autodse summary v{VERSION}");
    let _ = writeln!(s, "kernel: {}", r.kernel);
    let _ = writeln!(s, "parameters: {}", r.parameters);
    let _ = writeln!(s, "grid points: {}", r.space.grid_points);
    match r.space.valid_points {
        crate::generator::ValidCount::Exact { count } => {
            let _ = writeln!(s, "valid points: {count}");
        }
        crate::generator::ValidCount::Estimated { estimate, samples } => {
            let _ = writeln!(s, "valid points: ~{estimate:.0} (estimated from {samples} samples)");
        }
    }
    let _ = writeln!(
        s,
        "partitions: {} total, {} explored",
        r.totals.partitions_total, r.totals.partitions_explored
    );
    let _ = writeln!(
        s,
        "evaluations: {} exploring, {} profiling",
        r.totals.evaluations, r.totals.profiling_evaluations
    );
    if !r.complete {
        let _ = writeln!(s, "status: interrupted (rerun with --resume to continue)");
    }
    for p in &r.partitions {
        let cycles = p.best_cycles.map(|c| c.to_string()).unwrap_or_else(|| "-".to_string());
        let _ = writeln!(
            s,
            "  partition {:>4}: {:>4} evals, best {cycles} cycles ({:?})",
            p.id, p.evaluations, p.stop
        );
    }
    match &r.best {
        Some(b) => {
            let _ = writeln!(s, "best: {} cycles in partition {}", b.cycles, b.partition);
            let _ = writeln!(
                s,
                "utilization: lut {:.3} ff {:.3} dsp {:.3} bram {:.3}",
                b.util.lut, b.util.ff, b.util.dsp, b.util.bram
            );
            let _ = writeln!(s, "config: {}", b.config);
        }
        None => {
            let _ = writeln!(s, "best: no feasible configuration found; default config kept");
            let _ = writeln!(s, "config: {}", r.default_config);
        }
    }
    s
}

fn render_artifacts(r: &RunReport, ds: &DesignSpace, out: &Path) -> Result<(), OrchestratorError> {
    let traces = out.join("traces");
    fs::create_dir_all(&traces).map_err(|e| OrchestratorError::io(&traces, e))?;
    for p in &r.partitions {
        let body = format!("# autodse-trace v{VERSION} partition={}\n{}", p.id, p.trace.to_csv());
        write_atomic(&traces.join(format!("partition-{}.csv", p.id)), &body)?;
    }
    let cfg = r.best.as_ref().map(|b| &b.config).unwrap_or(&r.default_config);
    write_atomic(&out.join("best_config.txt"), &ds.pinned_text(cfg))?;
    write_atomic(&out.join("summary.txt"), &summary_text(r))
}

/// Re-renders summary, traces and best config from a run directory.
pub fn report(out: &Path) -> Result<String, OrchestratorError> {
    let r: RunReport = read_json(&out.join("report.json"))?;
    if r.format != REPORT_FORMAT || r.version != VERSION {
        return Err(OrchestratorError::Format {
            path: out.join("report.json"),
            message: "not a run report".to_string(),
        });
    }
    let ds_path = out.join("design_space.txt");
    let text = fs::read_to_string(&ds_path).map_err(|e| match e.kind() {
        io::ErrorKind::NotFound => OrchestratorError::NotFound(ds_path.clone()),
        _ => OrchestratorError::io(&ds_path, e),
    })?;
    let ds = DesignSpace::parse(&text)?;
    render_artifacts(&r, &ds, out)?;
    Ok(summary_text(&r))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn run_config_validation() {
        let mut rc = RunConfig::new("m", "o");
        assert!(rc.validate().is_ok());
        rc.tu = 1.0;
        assert!(matches!(rc.validate(), Err(OrchestratorError::Config(_))));
        rc.tu = 0.8;
        rc.threads = 0;
        assert!(rc.validate().is_err());
        rc.threads = 2;
        rc.dse_timeout = 0.0;
        assert!(rc.validate().is_err());
    }

    #[test]
    fn ledger_shares_remaining_budget() {
        let mut l = BudgetLedger {
            evals: Some(10),
            seconds: None,
            clock: Clock::Simulated,
            queued: 3,
        };
        let a = l.share();
        assert_eq!(a.max_evals, Some(3));
        l.refund(&a, 1, 0.0);
        assert_eq!(l.share().max_evals, Some(4));
        assert_eq!(l.share().max_evals, Some(5));
    }
}
