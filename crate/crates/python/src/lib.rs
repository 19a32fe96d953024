use mmo_core::batch::{pooled_samples, run_batch, BatchConfig, System};
use mmo_core::equilibrium::{classify_regime, hopf_data, jacobian_summary, solve_equilibrium};
use mmo_core::events::{repeated_outbreak_count, NSamples};
use mmo_core::integrator::{milstein_path, stochastic_nf_path, SimConfig};
use mmo_core::model::{parse_params, NondimParams};
use mmo_core::normal_form::{repeated_spike_probability_or_limit, stoch_nf_coeffs};
use mmo_core::stats::{default_n_min, estimate_lambda0, estimate_lambda0_pgf, summarize, PgfScan};
use mmo_core::sweep::{run_sweep, Axis, SweepConfig};
use mmo_core::Trajectory;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyList};
use pyo3::IntoPyObjectExt;
use serde_json::Value;

fn err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// Converts a JSON value into plain Python objects.
fn to_py(py: Python<'_>, v: &Value) -> PyResult<Py<PyAny>> {
    match v {
        Value::Null => Ok(py.None()),
        Value::Bool(b) => b.into_py_any(py),
        Value::Number(n) => match n.as_u64() {
            Some(u) => u.into_py_any(py),
            None => n.as_f64().unwrap_or(f64::NAN).into_py_any(py),
        },
        Value::String(s) => s.into_py_any(py),
        Value::Array(a) => {
            let items = a.iter().map(|x| to_py(py, x)).collect::<PyResult<Vec<_>>>()?;
            PyList::new(py, items)?.into_py_any(py)
        }
        Value::Object(o) => {
            let d = PyDict::new(py);
            for (k, x) in o {
                d.set_item(k, to_py(py, x)?)?;
            }
            d.into_py_any(py)
        }
    }
}

/// Dimensionless model parameters.
#[pyclass(name = "Params", from_py_object)]
#[derive(Clone, Copy)]
struct Params {
    inner: NondimParams,
}

#[pymethods]
impl Params {
    #[new]
    #[pyo3(signature = (beta=0.25, d=0.25, h=0.91, eps=0.05, sigma1=0.0, sigma2=0.0))]
    fn new(beta: f64, d: f64, h: f64, eps: f64, sigma1: f64, sigma2: f64) -> PyResult<Self> {
        let inner = NondimParams::new(beta, d, h, eps).with_noise(sigma1, sigma2);
        inner.validate_relaxed().map_err(err)?;
        Ok(Self { inner })
    }

    /// Parses a JSON document with nondimensional or dimensional keys.
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(Self {
            inner: parse_params(text).map_err(err)?,
        })
    }

    #[getter]
    fn beta(&self) -> f64 {
        self.inner.beta
    }
    #[getter]
    fn d(&self) -> f64 {
        self.inner.d
    }
    #[getter]
    fn h(&self) -> f64 {
        self.inner.h
    }
    #[getter]
    fn eps(&self) -> f64 {
        self.inner.eps
    }
    #[getter]
    fn sigma1(&self) -> f64 {
        self.inner.sigma1
    }
    #[getter]
    fn sigma2(&self) -> f64 {
        self.inner.sigma2
    }

    /// Copy with a new h.
    fn with_h(&self, h: f64) -> Self {
        Self { inner: self.inner.with_h(h) }
    }

    /// Copy with new noise intensities.
    fn with_noise(&self, sigma1: f64, sigma2: f64) -> Self {
        Self {
            inner: self.inner.with_noise(sigma1, sigma2),
        }
    }

    fn __repr__(&self) -> String {
        let p = &self.inner;
        format!(
            "Params(beta={}, d={}, h={}, eps={}, sigma1={}, sigma2={})",
            p.beta, p.d, p.h, p.eps, p.sigma1, p.sigma2
        )
    }
}

/// Equilibrium, Hopf data, regime and Jacobian at one parameter point.
#[pyfunction]
fn analyze(py: Python<'_>, params: Params) -> PyResult<Py<PyAny>> {
    let p = &params.inner;
    let eq = solve_equilibrium(p).map_err(err)?;
    let j = jacobian_summary(p, &eq);
    let out = PyDict::new(py);
    out.set_item("alpha", eq.alpha)?;
    out.set_item("equilibrium", (eq.x, eq.y))?;
    out.set_item("regime", classify_regime(p).to_string())?;
    let hd = serde_json::to_value(hopf_data(p)).map_err(err)?;
    for (k, v) in hd.as_object().into_iter().flatten() {
        out.set_item(k, to_py(py, v)?)?;
    }
    out.set_item("trace", j.trace)?;
    out.set_item("det", j.det)?;
    out.set_item("jacobian", j.entries)?;
    let eig: Vec<Py<PyAny>> = j
        .eigenvalues
        .iter()
        .map(|z| pyo3::types::PyComplex::from_doubles(py, z.re, z.im).into_py_any(py))
        .collect::<PyResult<_>>()?;
    out.set_item("eigenvalues", eig)?;
    out.into_py_any(py)
}

fn columns(t: Trajectory) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let (a, b) = t.states.iter().map(|u| (u[0], u[1])).unzip();
    (t.times, a, b)
}

/// One Milstein path as `(t, x, y)`; starts at the equilibrium by default.
#[pyfunction]
#[pyo3(signature = (params, t_end, dt=1e-3, seed=0, stride=1, initial=None))]
fn simulate(
    py: Python<'_>,
    params: Params,
    t_end: f64,
    dt: f64,
    seed: u64,
    stride: usize,
    initial: Option<(f64, f64)>,
) -> PyResult<(Vec<f64>, Vec<f64>, Vec<f64>)> {
    let p = params.inner;
    let start = initial
        .map(|(x, y)| [x, y])
        .unwrap_or_else(|| System::Original(p).default_initial([0.4, 0.4]));
    let cfg = SimConfig::new(t_end, seed, start).with_dt(dt).with_stride(stride);
    py.detach(|| milstein_path(&p, &cfg)).map(columns).map_err(err)
}

/// One stochastic normal-form path as `(t, l, z)`.
#[pyfunction]
#[pyo3(signature = (params, t_end, dt=1e-3, seed=0, stride=1, initial=(0.0, 0.5)))]
fn simulate_nf(
    py: Python<'_>,
    params: Params,
    t_end: f64,
    dt: f64,
    seed: u64,
    stride: usize,
    initial: (f64, f64),
) -> PyResult<(Vec<f64>, Vec<f64>, Vec<f64>)> {
    let c = stoch_nf_coeffs(&params.inner).map_err(err)?;
    let cfg = SimConfig::new(t_end, seed, [initial.0, initial.1]).with_dt(dt).with_stride(stride);
    py.detach(|| stochastic_nf_path(&c, &cfg)).map(columns).map_err(err)
}

/// Pooled SAO counts between consecutive outbreaks over `paths` paths
/// with seeds `seed + i`, using the default channel and thresholds.
#[pyfunction]
#[pyo3(signature = (params, paths, t_end=500.0, seed=0, stride=1, normal_form=false))]
fn n_samples(
    py: Python<'_>,
    params: Params,
    paths: usize,
    t_end: f64,
    seed: u64,
    stride: usize,
    normal_form: bool,
) -> PyResult<Vec<u64>> {
    let p = params.inner;
    let system = if normal_form {
        System::NormalForm(stoch_nf_coeffs(&p).map_err(err)?)
    } else {
        System::Original(p)
    };
    let sim = SimConfig::new(t_end, seed, system.default_initial([0.4, 0.4])).with_stride(stride);
    let cfg = BatchConfig::new(system, sim, paths);
    let out = py.detach(|| run_batch(&cfg)).map_err(err)?;
    Ok(pooled_samples(&out).values)
}

/// Mean, std, both λ₀ estimates and Σ for a list of N values. Entries that
/// cannot be estimated are `None`.
#[pyfunction]
#[pyo3(signature = (values, n_min=None, seed=0))]
fn summarize_n(py: Python<'_>, values: Vec<u64>, n_min: Option<u64>, seed: u64) -> PyResult<Py<PyAny>> {
    let ns = NSamples::from_values(values);
    let s = summarize(&ns).ok();
    let n_min = n_min.unwrap_or_else(|| default_n_min(&ns));
    let tail = estimate_lambda0(&ns, n_min, seed).ok();
    let pole = estimate_lambda0_pgf(&ns, &PgfScan::default(), seed);
    let out = PyDict::new(py);
    out.set_item("mean", s.as_ref().map(|s| s.mean))?;
    out.set_item("std", s.as_ref().map(|s| s.std))?;
    out.set_item("lambda0_tail", tail.map(|t| t.fit.lambda0))?;
    out.set_item("lambda0_pgf", pole.map(|p| p.lambda0))?;
    out.set_item("sigma_count", repeated_outbreak_count(&ns))?;
    out.set_item("histogram", s.map(|s| s.histogram.counts))?;
    out.into_py_any(py)
}

/// Normal-form constants, scaled noise, μ̂, κ and Φ(−κ).
#[pyfunction]
fn normal_form(py: Python<'_>, params: Params) -> PyResult<Py<PyAny>> {
    let c = stoch_nf_coeffs(&params.inner).map_err(err)?;
    let sp = mmo_core::normal_form::repeated_spike_probability(&c).ok();
    let doc = serde_json::json!({
        "constants": c.k,
        "sigma_hat1": c.sigma_hat1,
        "sigma_hat2": c.sigma_hat2,
        "mu_hat": c.mu_hat,
        "kappa": sp.map(|s| s.kappa),
        "phi_neg_kappa": repeated_spike_probability_or_limit(&c),
    });
    to_py(py, &doc)
}

fn parse_axis(s: &str) -> PyResult<Axis> {
    let parts: Vec<&str> = s.split(':').collect();
    let [name, min, max, steps] = parts[..] else {
        return Err(err(format!("expected PARAM:MIN:MAX:STEPS, got {s:?}")));
    };
    Ok(Axis::new(
        name.parse().map_err(err)?,
        min.parse().map_err(err)?,
        max.parse().map_err(err)?,
        steps.parse().map_err(err)?,
    ))
}

/// Runs a two-axis sweep; axes are written `PARAM:MIN:MAX:STEPS`. Returns
/// one dict per cell, row-major.
#[pyfunction]
#[pyo3(signature = (axis1, axis2, params=None, seeds=1, t_end=200.0, seed=0))]
fn sweep(
    py: Python<'_>,
    axis1: &str,
    axis2: &str,
    params: Option<Params>,
    seeds: usize,
    t_end: f64,
    seed: u64,
) -> PyResult<Py<PyAny>> {
    let base = params.map_or_else(NondimParams::default, |p| p.inner);
    let mut cfg = SweepConfig::new(parse_axis(axis1)?, parse_axis(axis2)?, base);
    cfg.seeds = seeds;
    cfg.sim.t_end = t_end;
    cfg.sim.seed = seed;
    let res = py.detach(|| run_sweep(&cfg)).map_err(err)?;
    to_py(py, &serde_json::to_value(&res.cells).map_err(err)?)
}

#[pymodule]
fn mmo(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Params>()?;
    m.add_function(wrap_pyfunction!(analyze, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(simulate_nf, m)?)?;
    m.add_function(wrap_pyfunction!(n_samples, m)?)?;
    m.add_function(wrap_pyfunction!(summarize_n, m)?)?;
    m.add_function(wrap_pyfunction!(normal_form, m)?)?;
    m.add_function(wrap_pyfunction!(sweep, m)?)?;
    Ok(())
}
