//! Python bindings: kernel models, design spaces, the mock evaluator, the
//! explorers and the full orchestrated run.
//!
//! Configurations cross the boundary as dicts of parameter name to `int`
//! (factors) or `str` (pipeline modes). Structured results come back as
//! plain dicts decoded from their JSON form.

use std::path::PathBuf;

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyList};
use serde::Serialize;

use autodse::eval::{Evaluator, MockHls, MockOptions};
use autodse::explore::{
    explore_bottleneck, explore_coordinate_descent, explore_exhaustive, explore_random, Budget, ExploreOutcome,
};
use autodse::generator::generate_design_space;
use autodse::kernel::KernelModel as CoreKernel;
use autodse::orchestrator::{run as run_core, RunConfig};
use autodse::quality::{fd_from_deltas, util_penalty_of, Score};
use autodse::space::{Config, DesignSpace as CoreSpace, OptionValue, Step};

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn to_py<'py, T: Serialize>(py: Python<'py>, v: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(v).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

fn option_to_py<'py>(py: Python<'py>, v: OptionValue) -> PyResult<Bound<'py, PyAny>> {
    Ok(match v {
        OptionValue::Factor(f) => f.into_pyobject(py)?.into_any(),
        OptionValue::Mode(m) => m.to_string().into_pyobject(py)?.into_any(),
    })
}

fn option_from_py(v: &Bound<'_, PyAny>) -> PyResult<OptionValue> {
    if let Ok(i) = v.extract::<i64>() {
        return Ok(OptionValue::Factor(i));
    }
    let s: String = v.extract()?;
    s.parse().map_err(PyValueError::new_err)
}

fn config_to_py<'py>(py: Python<'py>, cfg: &Config) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    for (k, v) in &cfg.0 {
        d.set_item(k, option_to_py(py, *v)?)?;
    }
    Ok(d)
}

fn config_from_py(d: &Bound<'_, PyDict>) -> PyResult<Config> {
    let mut cfg = Config::default();
    for (k, v) in d.iter() {
        cfg.set(&k.extract::<String>()?, option_from_py(&v)?);
    }
    Ok(cfg)
}

/// Loop-hierarchy model of a kernel.
#[pyclass(frozen, skip_from_py_object)]
#[derive(Clone)]
struct KernelModel {
    inner: CoreKernel,
}

#[pymethods]
impl KernelModel {
    #[staticmethod]
    fn parse(text: &str) -> PyResult<Self> {
        Ok(KernelModel {
            inner: CoreKernel::parse(text).map_err(value_err)?,
        })
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        let text = std::fs::read_to_string(&path).map_err(|e| value_err(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    #[getter]
    fn name(&self) -> String {
        self.inner.name.clone()
    }

    fn to_text(&self) -> String {
        self.inner.to_text()
    }

    /// The design space generated from this kernel.
    fn design_space(&self) -> PyResult<DesignSpace> {
        Ok(DesignSpace {
            inner: generate_design_space(&self.inner).map_err(value_err)?,
        })
    }
}

/// Tuning parameters with conditional option lists.
#[pyclass(frozen, skip_from_py_object)]
#[derive(Clone)]
struct DesignSpace {
    inner: CoreSpace,
}

#[pymethods]
impl DesignSpace {
    #[staticmethod]
    fn parse(text: &str) -> PyResult<Self> {
        Ok(DesignSpace {
            inner: CoreSpace::parse(text).map_err(value_err)?,
        })
    }

    fn to_text(&self) -> String {
        self.inner.to_text()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn params(&self) -> Vec<String> {
        self.inner.params().iter().map(|p| p.name.clone()).collect()
    }

    /// Unconditioned options of one parameter.
    fn grid<'py>(&self, py: Python<'py>, name: &str) -> PyResult<Bound<'py, PyList>> {
        let p = self
            .inner
            .param(name)
            .ok_or_else(|| value_err(format!("unknown parameter `{name}`")))?;
        let items = p.grid.iter().map(|v| option_to_py(py, *v)).collect::<PyResult<Vec<_>>>()?;
        PyList::new(py, items)
    }

    /// Options of `name` under the other values in `cfg`.
    fn options<'py>(&self, py: Python<'py>, name: &str, cfg: &Bound<'py, PyDict>) -> PyResult<Bound<'py, PyList>> {
        let opts = self.inner.eval_options(name, &config_from_py(cfg)?).map_err(value_err)?;
        let items = opts.into_iter().map(|v| option_to_py(py, v)).collect::<PyResult<Vec<_>>>()?;
        PyList::new(py, items)
    }

    fn default_config<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        config_to_py(py, &self.inner.default_config())
    }

    fn is_valid(&self, cfg: &Bound<'_, PyDict>) -> PyResult<bool> {
        Ok(self.inner.is_valid(&config_from_py(cfg)?))
    }

    /// Next option of `name` after its current value, or None at the end.
    fn next_value<'py>(&self, py: Python<'py>, cfg: &Bound<'py, PyDict>, name: &str) -> PyResult<Option<Bound<'py, PyAny>>> {
        match self.inner.next_value(&config_from_py(cfg)?, name).map_err(value_err)? {
            Step::Next(v) => Ok(Some(option_to_py(py, v)?)),
            Step::Exhausted => Ok(None),
        }
    }

    /// Sets `name` to `value` and repairs dependent parameters.
    fn manipulate<'py>(
        &self,
        py: Python<'py>,
        cfg: &Bound<'py, PyDict>,
        name: &str,
        value: &Bound<'py, PyAny>,
    ) -> PyResult<Bound<'py, PyDict>> {
        let out = self
            .inner
            .manipulate(&config_from_py(cfg)?, name, option_from_py(value)?)
            .map_err(value_err)?;
        config_to_py(py, &out)
    }

    /// Grid and valid-point counts; the latter is exact below `cap`.
    #[pyo3(signature = (cap = 100_000, seed = 0))]
    fn size<'py>(&self, py: Python<'py>, cap: u64, seed: u64) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &autodse::generator::space_size(&self.inner, cap, seed))
    }
}

/// Analytical stand-in for an HLS tool.
#[pyclass(frozen)]
struct MockEvaluator {
    inner: MockHls,
    space: CoreSpace,
}

#[pymethods]
impl MockEvaluator {
    #[new]
    #[pyo3(signature = (kernel, space = None, tu = 0.8))]
    fn new(kernel: &KernelModel, space: Option<&DesignSpace>, tu: f64) -> PyResult<Self> {
        let space = match space {
            Some(s) => s.inner.clone(),
            None => generate_design_space(&kernel.inner).map_err(value_err)?,
        };
        let opts = MockOptions { tu, ..MockOptions::default() };
        let inner = MockHls::new(kernel.inner.clone(), space.clone(), opts).map_err(value_err)?;
        Ok(MockEvaluator { inner, space })
    }

    #[getter]
    fn space(&self) -> DesignSpace {
        DesignSpace {
            inner: self.space.clone(),
        }
    }

    fn evaluate<'py>(&self, py: Python<'py>, cfg: &Bound<'py, PyDict>) -> PyResult<Bound<'py, PyAny>> {
        let cfg = config_from_py(cfg)?;
        let r = py.detach(|| self.inner.evaluate(&cfg));
        to_py(py, &r)
    }

    /// Runs one exploration strategy: bottleneck, cd, exhaustive or random.
    #[pyo3(signature = (strategy = "bottleneck", max_evals = None, seed = 0, cap = 100_000))]
    fn explore<'py>(
        &self,
        py: Python<'py>,
        strategy: &str,
        max_evals: Option<u64>,
        seed: u64,
        cap: u64,
    ) -> PyResult<Bound<'py, PyDict>> {
        let budget = max_evals.map(Budget::evals).unwrap_or_else(Budget::unlimited);
        if !["bottleneck", "cd", "exhaustive", "random"].contains(&strategy) {
            return Err(value_err(format!("unknown strategy `{strategy}`")));
        }
        let (ds, ev) = (&self.space, &self.inner);
        let out = py
            .detach(|| match strategy {
                "bottleneck" => explore_bottleneck(ds, ev, budget),
                "cd" => explore_coordinate_descent(ds, ev, budget),
                "exhaustive" => explore_exhaustive(ds, ev, cap),
                _ => explore_random(ds, ev, budget, seed),
            })
            .map_err(value_err)?;
        outcome_to_py(py, &out)
    }
}

fn outcome_to_py<'py>(py: Python<'py>, o: &ExploreOutcome) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("best_config", config_to_py(py, &o.best_config)?)?;
    d.set_item("best_cycles", o.best_cycles())?;
    d.set_item("feasible", o.feasible)?;
    d.set_item("evaluations", o.evaluations)?;
    d.set_item("stop", to_py(py, &o.stop)?)?;
    d.set_item("trace", to_py(py, &o.trace.entries)?)?;
    Ok(d)
}

/// Utilization penalty: sum of 2^(1/(1-u)) over the given fractions.
#[pyfunction]
fn util_penalty(fractions: Vec<f64>) -> PyResult<f64> {
    util_penalty_of(&fractions).map_err(value_err)
}

/// Finite-difference score of a cycle and penalty change. Zero penalty
/// changes give "pure_gain" or "pure_loss".
#[pyfunction]
fn finite_difference<'py>(py: Python<'py>, d_cycles: f64, d_penalty: f64) -> PyResult<Bound<'py, PyAny>> {
    Ok(match fd_from_deltas(d_cycles, d_penalty) {
        Score::Finite(g) => g.into_pyobject(py)?.into_any(),
        Score::PureGain => "pure_gain".into_pyobject(py)?.into_any(),
        Score::PureLoss => "pure_loss".into_pyobject(py)?.into_any(),
        Score::Infeasible => "infeasible".into_pyobject(py)?.into_any(),
    })
}

/// Full partitioned exploration writing its artifacts under `out`.
#[pyfunction]
#[pyo3(signature = (model, out, threads = 1, max_evals = None, seed = 0, serial = false, resume = false, space = None))]
#[allow(clippy::too_many_arguments)]
fn run<'py>(
    py: Python<'py>,
    model: PathBuf,
    out: PathBuf,
    threads: usize,
    max_evals: Option<u64>,
    seed: u64,
    serial: bool,
    resume: bool,
    space: Option<PathBuf>,
) -> PyResult<Bound<'py, PyAny>> {
    let mut rc = RunConfig::new(model, out);
    rc.threads = threads;
    rc.max_evals = max_evals;
    rc.seed = seed;
    rc.serial = serial;
    rc.resume = resume;
    rc.space = space;
    let report = py.detach(|| run_core(&rc)).map_err(|e| {
        if e.is_config_error() {
            value_err(e)
        } else {
            PyRuntimeError::new_err(e.to_string())
        }
    })?;
    to_py(py, &report)
}

#[pymodule]
#[pyo3(name = "autodse")]
fn autodse_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<KernelModel>()?;
    m.add_class::<DesignSpace>()?;
    m.add_class::<MockEvaluator>()?;
    m.add_function(wrap_pyfunction!(util_penalty, m)?)?;
    m.add_function(wrap_pyfunction!(finite_difference, m)?)?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    Ok(())
}
