use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};

use autodse::eval::{CachedEvaluator, MockOptions, ResultStore, DEFAULT_EVAL_TIMEOUT_S, DEFAULT_TU};
use autodse::explore::{explore_exhaustive, Clock};
use autodse::generator::{space_size, ValidCount};
use autodse::orchestrator::{
    build_evaluator, load_inputs, partition_stage, report, run, EvaluatorKind, OrchestratorError, RunConfig,
};
use autodse::partition::DEFAULT_PARTITION_CAP;

const EXIT_CONFIG: u8 = 2;
const EXIT_FAILURE: u8 = 3;

#[derive(Parser)]
#[command(name = "autodse", version, about = "Bottleneck-guided design space exploration for HLS pragmas")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate or load a design space and report its size.
    Space {
        #[command(flatten)]
        input: Input,
        /// Write the design space text here.
        #[arg(long)]
        emit: Option<PathBuf>,
        /// Count valid points exactly up to this many.
        #[arg(long, default_value_t = 100_000)]
        cap: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Enumerate and profile partitions, then pick representatives.
    Partition {
        #[command(flatten)]
        input: Input,
        #[command(flatten)]
        eval: EvalFlags,
        #[arg(long, default_value_t = 1)]
        threads: usize,
        /// Representatives to pick; defaults to --threads.
        #[arg(long)]
        representatives: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Write the partition manifest here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the full exploration.
    Explore(ExploreArgs),
    /// Re-render summary, traces and best config of a finished run.
    Report {
        #[arg(long)]
        out: PathBuf,
    },
    /// Exhaustively evaluate a small space.
    Oracle {
        #[command(flatten)]
        input: Input,
        #[command(flatten)]
        eval: EvalFlags,
        /// Refuse spaces with more valid points than this.
        #[arg(long, default_value_t = 100_000)]
        cap: u64,
    },
}

#[derive(Args)]
struct Input {
    /// Kernel model file.
    #[arg(long)]
    model: PathBuf,
    /// Design space file; generated from the model when omitted.
    #[arg(long)]
    space: Option<PathBuf>,
}

#[derive(Args)]
struct EvalFlags {
    #[arg(long, value_enum, default_value_t = EvalKind::Mock)]
    evaluator: EvalKind,
    /// Utilization threshold.
    #[arg(long, default_value_t = DEFAULT_TU)]
    tu: f64,
    /// Per-evaluation timeout in seconds.
    #[arg(long, default_value_t = DEFAULT_EVAL_TIMEOUT_S)]
    eval_timeout: f64,
}

#[derive(Args)]
struct ExploreArgs {
    #[command(flatten)]
    input: Input,
    #[command(flatten)]
    eval: EvalFlags,
    #[arg(long, default_value_t = 1)]
    threads: usize,
    /// Exploration time budget in seconds.
    #[arg(long, default_value_t = 86_400.0)]
    timeout: f64,
    /// Which clock the time budget is measured on.
    #[arg(long, value_enum, default_value_t = ClockArg::Sim)]
    clock: ClockArg,
    /// Global cap on distinct evaluations.
    #[arg(long)]
    max_evals: Option<u64>,
    #[arg(long)]
    representatives: Option<usize>,
    #[arg(long, default_value_t = DEFAULT_PARTITION_CAP)]
    partition_cap: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    /// Continue from the checkpoints in --out.
    #[arg(long)]
    resume: bool,
    /// Explore partitions one at a time in a fixed order.
    #[arg(long)]
    serial: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum EvalKind {
    Mock,
}

#[derive(Clone, Copy, ValueEnum)]
enum ClockArg {
    Sim,
    Wall,
}

impl EvalFlags {
    fn kind(&self) -> EvaluatorKind {
        match self.evaluator {
            EvalKind::Mock => EvaluatorKind::Mock,
        }
    }

    fn options(&self) -> Result<MockOptions, OrchestratorError> {
        if !(self.tu > 0.0 && self.tu < 1.0) {
            return Err(OrchestratorError::Config("--tu must lie strictly between 0 and 1".into()));
        }
        if !(self.eval_timeout > 0.0) {
            return Err(OrchestratorError::Config("--eval-timeout must be positive".into()));
        }
        Ok(MockOptions {
            tu: self.tu,
            eval_timeout_s: self.eval_timeout,
        })
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_config_error() { EXIT_CONFIG } else { EXIT_FAILURE })
        }
    }
}

fn dispatch(cmd: Command) -> Result<(), OrchestratorError> {
    match cmd {
        Command::Space { input, emit, cap, seed } => {
            let (_, ds) = load_inputs(&input.model, input.space.as_deref())?;
            let size = space_size(&ds, cap, seed);
            println!("parameters: {}", ds.len());
            println!("grid points: {}", size.grid_points);
            match size.valid_points {
                ValidCount::Exact { count } => println!("valid points: {count}"),
                ValidCount::Estimated { estimate, samples } => {
                    println!("valid points: ~{estimate:.0} (estimated from {samples} samples)")
                }
            }
            if let Some(path) = emit {
                std::fs::write(&path, ds.to_text()).map_err(|source| OrchestratorError::Io { path, source })?;
            }
        }
        Command::Partition {
            input,
            eval,
            threads,
            representatives,
            seed,
            out,
        } => {
            let (kernel, ds) = load_inputs(&input.model, input.space.as_deref())?;
            let backend = build_evaluator(eval.kind(), &kernel, &ds, eval.options()?)?;
            let cached = CachedEvaluator::new(backend, Arc::new(ResultStore::in_memory()));
            let reps = representatives.unwrap_or(threads.max(1));
            let (_, manifest) = partition_stage(&ds, &cached, reps, DEFAULT_PARTITION_CAP, seed, threads.max(1))?;
            for e in &manifest.entries {
                let cycles = e.profile.cycles.map(|c| c.to_string()).unwrap_or_else(|| "-".into());
                let penalty = e.profile.penalty.map(|p| format!("{p:.3}")).unwrap_or_else(|| "-".into());
                let split: Vec<String> = e.mode_split.iter().map(|s| format!("{}={:?}", s.param, s.half)).collect();
                println!(
                    "{}{:>4} {:<10} cycles {cycles:>10} penalty {penalty:>10}  {}",
                    if e.selected { '*' } else { ' ' },
                    e.id,
                    e.profile.status.as_str(),
                    split.join(" ")
                );
            }
            println!("selected: {:?}", manifest.selected);
            if let Some(path) = out {
                let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
                std::fs::write(&path, text).map_err(|source| OrchestratorError::Io { path, source })?;
            }
        }
        Command::Explore(a) => {
            let opts = a.eval.options()?;
            let stop = Arc::new(AtomicBool::new(false));
            let flag = stop.clone();
            if let Err(e) = ctrlc::set_handler(move || flag.store(true, Ordering::SeqCst)) {
                log::warn!("cannot install interrupt handler: {e}");
            }
            let mut rc = RunConfig::new(a.input.model, a.out);
            rc.space = a.input.space;
            rc.evaluator = a.eval.kind();
            rc.threads = a.threads;
            rc.dse_timeout = a.timeout;
            rc.clock = match a.clock {
                ClockArg::Sim => Clock::Simulated,
                ClockArg::Wall => Clock::Wall,
            };
            rc.max_evals = a.max_evals;
            rc.tu = opts.tu;
            rc.eval_timeout = opts.eval_timeout_s;
            rc.seed = a.seed;
            rc.resume = a.resume;
            rc.serial = a.serial;
            rc.representatives = a.representatives;
            rc.partition_cap = a.partition_cap;
            rc.stop = Some(stop);
            let r = run(&rc)?;
            print!("{}", autodse::orchestrator::summary_text(&r));
        }
        Command::Report { out } => print!("{}", report(&out)?),
        Command::Oracle { input, eval, cap } => {
            let (kernel, ds) = load_inputs(&input.model, input.space.as_deref())?;
            let ev = build_evaluator(eval.kind(), &kernel, &ds, eval.options()?)?;
            match explore_exhaustive(&ds, ev.as_ref(), cap) {
                Ok(o) => {
                    println!("evaluations: {}", o.evaluations);
                    println!("best cycles: {}", o.best_cycles().expect("feasible"));
                    println!("config: {}", o.best_config);
                }
                Err(autodse::explore::ExploreError::NoFeasiblePoint) => {
                    println!("no feasible configuration");
                }
                Err(e) => return Err(e.into()),
            }
        }
    }
    Ok(())
}
