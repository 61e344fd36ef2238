//! Python bindings. Configurations, parameters and reports cross the boundary
//! as JSON strings so the Python side can use plain dicts.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use rrm_core::algorithms::{self, AlgoParams, RrmSolution};
use rrm_core::channel::{self, ChannelParams, PerturbationScope, PerturbationSpec};
use rrm_core::scenario::{self as sc, ScenarioSpec};
use rrm_core::system::{self, TopologyParams};
use rrm_core::verify;

fn err(e: rrm_core::Error) -> PyErr {
    match e {
        rrm_core::Error::InvalidConfig(_) | rrm_core::Error::Json(_) => PyValueError::new_err(e.to_string()),
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

fn json_err(e: serde_json::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn parse_or_default<T: serde::de::DeserializeOwned + Default>(s: Option<&str>) -> PyResult<T> {
    s.map_or_else(|| Ok(T::default()), |s| serde_json::from_str(s).map_err(json_err))
}

#[pyclass(name = "SystemConfig", module = "rrm_py", from_py_object)]
#[derive(Clone)]
struct PySystemConfig {
    inner: system::SystemConfig,
}

#[pymethods]
impl PySystemConfig {
    /// The five-cluster evaluation setting.
    #[new]
    fn new() -> Self {
        Self { inner: system::SystemConfig::default() }
    }

    /// The two-cluster desk-scale setting.
    #[staticmethod]
    fn small() -> Self {
        Self { inner: system::SystemConfig::small() }
    }

    #[staticmethod]
    fn from_json(s: &str) -> PyResult<Self> {
        Ok(Self { inner: serde_json::from_str(s).map_err(json_err)? })
    }

    fn to_json(&self) -> PyResult<String> {
        serde_json::to_string(&self.inner).map_err(json_err)
    }

    /// Violations as `"field: message"` strings; empty when valid.
    fn validate(&self) -> Vec<String> {
        system::validate_config(&self.inner)
            .violations
            .iter()
            .map(|v| format!("{}: {}", v.field, v.message))
            .collect()
    }

    fn lower_bound_rate(&self) -> f64 {
        system::lower_bound_rate(&self.inner)
    }

    fn set_powers_dbm(&mut self, mbs_dbm: f64, sbs_dbm: f64) {
        self.inner.mbs_power_w = system::dbm_to_watts(mbs_dbm);
        self.inner.sbs_power_w = system::dbm_to_watts(sbs_dbm);
    }

    #[getter]
    fn clusters(&self) -> usize {
        self.inner.clusters
    }

    #[getter]
    fn num_sbs(&self) -> usize {
        self.inner.num_sbs()
    }

    #[getter]
    fn num_ues(&self) -> usize {
        self.inner.num_ues()
    }

    fn __repr__(&self) -> String {
        let c = &self.inner;
        format!(
            "SystemConfig(L={}, B={}, U={}, U_served={}, N_mbs={}, N_sbs={})",
            c.clusters,
            c.sbs_per_cluster,
            c.ues_per_cluster,
            c.ues_served,
            c.n_mbs(),
            c.n_sbs()
        )
    }
}

#[pyclass(name = "ChannelSet", module = "rrm_py", from_py_object)]
#[derive(Clone)]
struct PyChannelSet {
    inner: channel::ChannelSet,
}

#[pymethods]
impl PyChannelSet {
    /// Draws a topology and channels for `cfg` from `seed`.
    #[staticmethod]
    #[pyo3(signature = (cfg, seed, topology_json=None, channel_json=None))]
    fn generate(cfg: &PySystemConfig, seed: u64, topology_json: Option<&str>, channel_json: Option<&str>) -> PyResult<Self> {
        let tp: TopologyParams = parse_or_default(topology_json)?;
        let cp: ChannelParams = parse_or_default(channel_json)?;
        let topo = system::Topology::generate(&cfg.inner, &tp, seed);
        Ok(Self { inner: channel::ChannelSet::generate(&topo, &cfg.inner, &cp, seed) })
    }

    #[staticmethod]
    fn from_json(s: &str) -> PyResult<Self> {
        Ok(Self { inner: serde_json::from_str(s).map_err(json_err)? })
    }

    fn to_json(&self) -> PyResult<String> {
        serde_json::to_string(&self.inner).map_err(json_err)
    }

    fn content_hash(&self) -> String {
        self.inner.content_hash()
    }

    /// `scope` is `"backhaul"`, `"access"` or `"both"`.
    fn perturb(&self, chi: f64, scope: &str, seed: u64) -> PyResult<Self> {
        let scope: PerturbationScope = serde_json::from_value(serde_json::Value::String(scope.into())).map_err(json_err)?;
        let spec = PerturbationSpec { chi, scope, seed };
        Ok(Self { inner: channel::perturb_channels(&self.inner, &spec).map_err(err)? })
    }
}

#[pyclass(name = "Solution", module = "rrm_py", skip_from_py_object)]
struct PySolution {
    inner: RrmSolution,
    cfg: system::SystemConfig,
}

#[pymethods]
impl PySolution {
    #[getter]
    fn algorithm(&self) -> &'static str {
        self.inner.algorithm.name()
    }

    #[getter]
    fn status(&self) -> String {
        format!("{:?}", self.inner.status).to_lowercase()
    }

    #[getter]
    fn objective(&self) -> f64 {
        self.inner.objective
    }

    #[getter]
    fn throughput_bps(&self) -> f64 {
        self.inner.access_throughput_bps
    }

    #[getter]
    fn backhaul_throughput_bps(&self) -> f64 {
        self.inner.backhaul_throughput_bps
    }

    #[getter]
    fn wall_time_s(&self) -> f64 {
        self.inner.stats.wall_time_s
    }

    #[getter]
    fn has_allocation(&self) -> bool {
        self.inner.has_allocation()
    }

    /// Rate index per UE, `None` when unserved.
    fn ue_rates(&self) -> Vec<Option<usize>> {
        self.inner.allocation.as_ref().map(|a| a.ue_rates(&self.cfg)).unwrap_or_default()
    }

    /// `(iteration, objective, binary_mse, lambda)` per step.
    fn trace(&self) -> Vec<(usize, f64, f64, f64)> {
        self.inner.trace.iter().map(|r| (r.iteration, r.objective, r.binary_mse, r.lambda)).collect()
    }

    /// Re-checks every constraint of the original problem on `channels`.
    #[pyo3(signature = (channels, tol=1e-6))]
    fn check_feasibility(&self, channels: &PyChannelSet, tol: f64) -> PyResult<bool> {
        let Some(a) = &self.inner.allocation else { return Ok(false) };
        Ok(verify::check_feasibility_pprime(&self.cfg, &channels.inner, a, tol).map_err(err)?.feasible)
    }

    fn to_json(&self) -> PyResult<String> {
        serde_json::to_string(&self.inner).map_err(json_err)
    }

    fn __repr__(&self) -> String {
        format!("Solution({}, {}, objective={:.6})", self.algorithm(), self.status(), self.inner.objective)
    }
}

fn wrap(py: Python<'_>, cfg: &PySystemConfig, f: impl FnOnce() -> rrm_core::Result<RrmSolution> + Send) -> PyResult<PySolution> {
    let inner = py.detach(f).map_err(err)?;
    Ok(PySolution { inner, cfg: cfg.inner.clone() })
}

/// Exact branch-and-bound; `params_json` overrides algorithm parameters.
#[pyfunction]
#[pyo3(signature = (cfg, channels, params_json=None))]
fn solve_bnc(py: Python<'_>, cfg: &PySystemConfig, channels: &PyChannelSet, params_json: Option<&str>) -> PyResult<PySolution> {
    let p: AlgoParams = parse_or_default(params_json)?;
    wrap(py, cfg, || algorithms::solve_bnc_misocp(&cfg.inner, &channels.inner, &p))
}

/// Relax-and-penalize heuristic over full beamformers.
#[pyfunction]
#[pyo3(signature = (cfg, channels, params_json=None))]
fn solve_rnp1(py: Python<'_>, cfg: &PySystemConfig, channels: &PyChannelSet, params_json: Option<&str>) -> PyResult<PySolution> {
    let p: AlgoParams = parse_or_default(params_json)?;
    wrap(py, cfg, || algorithms::solve_rnp1(&cfg.inner, &channels.inner, &p))
}

/// Relax-and-penalize heuristic over gains of predesigned beams.
#[pyfunction]
#[pyo3(signature = (cfg, channels, seed, beam_realizations=50, params_json=None))]
fn solve_rnp2(
    py: Python<'_>,
    cfg: &PySystemConfig,
    channels: &PyChannelSet,
    seed: u64,
    beam_realizations: usize,
    params_json: Option<&str>,
) -> PyResult<PySolution> {
    let p: AlgoParams = parse_or_default(params_json)?;
    wrap(py, cfg, || {
        let topo = system::Topology::generate(&cfg.inner, &TopologyParams::default(), seed);
        let beams = algorithms::predesign_beams(
            &cfg.inner,
            &channels.inner,
            &topo,
            &ChannelParams::default(),
            beam_realizations,
            seed,
            &p,
        )?;
        algorithms::solve_rnp2(&cfg.inner, &channels.inner, &p, &beams)
    })
}

/// Backhaul-only bound: `(throughput_bps, status, cluster rate indices)`.
#[pyfunction]
#[pyo3(signature = (cfg, channels, params_json=None))]
fn solve_upper_bound(
    py: Python<'_>,
    cfg: &PySystemConfig,
    channels: &PyChannelSet,
    params_json: Option<&str>,
) -> PyResult<(f64, String, Vec<Option<usize>>)> {
    let p: AlgoParams = parse_or_default(params_json)?;
    let ub = py.detach(|| algorithms::solve_upper_bound(&cfg.inner, &channels.inner, &p)).map_err(err)?;
    let js = cfg.inner.sbs_rates.len();
    let rates = (0..cfg.inner.clusters)
        .map(|l| (0..js).find(|&j| ub.beta[l * js + j] > 0.5))
        .collect();
    Ok((ub.throughput_bps, format!("{:?}", ub.status).to_lowercase(), rates))
}

/// Exhaustive optimum for tiny instances: `(feasible, objective, admissible tuples)`.
#[pyfunction]
fn brute_force_optimum(py: Python<'_>, cfg: &PySystemConfig, channels: &PyChannelSet) -> PyResult<(bool, f64, u128)> {
    let r = py
        .detach(|| verify::brute_force_optimum(&cfg.inner, &channels.inner, &verify::BruteForceParams::default()))
        .map_err(err)?;
    Ok((r.feasible, r.objective, r.admissible))
}

/// `(rate, sinr)` pairs of the default table.
#[pyfunction]
fn default_rate_table() -> Vec<(f64, f64)> {
    system::default_rate_table().entries.iter().map(|e| (e.rate, e.sinr)).collect()
}

/// Runs a scenario spec (JSON) and returns the output (records, failures, summary) as JSON.
#[pyfunction]
#[pyo3(signature = (spec_json, threads=1))]
fn run_scenario(py: Python<'_>, spec_json: &str, threads: usize) -> PyResult<String> {
    let spec = ScenarioSpec::from_json(spec_json).map_err(err)?;
    let out = py.detach(|| sc::run_scenario(&spec, threads)).map_err(err)?;
    serde_json::to_string(&out).map_err(json_err)
}

#[pymodule]
fn rrm_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PySystemConfig>()?;
    m.add_class::<PyChannelSet>()?;
    m.add_class::<PySolution>()?;
    m.add_function(wrap_pyfunction!(solve_bnc, m)?)?;
    m.add_function(wrap_pyfunction!(solve_rnp1, m)?)?;
    m.add_function(wrap_pyfunction!(solve_rnp2, m)?)?;
    m.add_function(wrap_pyfunction!(solve_upper_bound, m)?)?;
    m.add_function(wrap_pyfunction!(brute_force_optimum, m)?)?;
    m.add_function(wrap_pyfunction!(default_rate_table, m)?)?;
    m.add_function(wrap_pyfunction!(run_scenario, m)?)?;
    Ok(())
}
