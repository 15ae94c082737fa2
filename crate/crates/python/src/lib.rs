//! Python bindings: configuration, runs, chain mapping, spectra and mode solves.

use std::collections::HashMap;
use std::f64::consts::PI;

use pyo3::exceptions::{PyIOError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use cqed::atom::{calibrate_double_well, AtomSpectrum, TwoLevelAtom, DEFAULT_ANHARMONICITY, DEFAULT_QUARTIC};
use cqed::chainmap::{chain_map as map_chain, ChainTransform};
use cqed::fock::{FockTruncation, TruncationKind};
use cqed::hamiltonians::{self, Variant};
use cqed::modes::{
    analytic_modes_pec, assemble_eigenproblem, calibrate_dipole, coupling_coefficients, solve_modes, Boundary,
    PermittivityProfile, SpatialGrid,
};
use cqed::scenarios::{self, RunOptions};
use cqed::CqedError;

fn to_py(e: CqedError) -> PyErr {
    match e.exit_code() {
        2 => PyValueError::new_err(e.to_string()),
        3 => PyRuntimeError::new_err(e.to_string()),
        _ => PyIOError::new_err(e.to_string()),
    }
}

/// Run configuration; every key of the TOML format is accepted.
#[pyclass(name = "RunConfig", from_py_object)]
#[derive(Clone)]
struct PyRunConfig {
    inner: scenarios::RunConfig,
}

#[pymethods]
impl PyRunConfig {
    #[new]
    #[pyo3(signature = (text = "", overrides = Vec::new()))]
    fn new(text: &str, overrides: Vec<String>) -> PyResult<Self> {
        let inner = scenarios::RunConfig::parse_with_overrides(text, &overrides).map_err(to_py)?;
        Ok(Self { inner })
    }

    #[staticmethod]
    #[pyo3(signature = (path, overrides = Vec::new()))]
    fn from_file(path: std::path::PathBuf, overrides: Vec<String>) -> PyResult<Self> {
        let inner = scenarios::RunConfig::from_file(&path, &overrides).map_err(to_py)?;
        Ok(Self { inner })
    }

    fn to_toml(&self) -> String {
        self.inner.to_toml()
    }

    fn hash(&self) -> String {
        self.inner.hash()
    }

    /// Every violated constraint, empty when the configuration is valid.
    fn violations(&self) -> Vec<String> {
        self.inner.violations()
    }

    #[getter]
    fn scenario(&self) -> &'static str {
        self.inner.scenario.label()
    }

    #[getter]
    fn output_dir(&self) -> std::path::PathBuf {
        self.inner.output_dir.clone()
    }

    #[setter]
    fn set_output_dir(&mut self, dir: std::path::PathBuf) {
        self.inner.output_dir = dir;
    }

    fn __repr__(&self) -> String {
        format!("RunConfig(scenario={:?}, hash={})", self.inner.scenario.label(), &self.inner.hash()[..12])
    }
}

/// Run a scenario and return `{file name: data rows}`.
#[pyfunction]
#[pyo3(signature = (config, jobs = 1))]
fn run_scenario(py: Python<'_>, config: PyRunConfig, jobs: usize) -> PyResult<HashMap<String, usize>> {
    let bundle = py
        .detach(|| scenarios::run_scenario_with(&config.inner, RunOptions { jobs }))
        .map_err(to_py)?;
    Ok(bundle.manifest.entries.into_iter().collect())
}

/// Time evolution of a dynamic scenario without writing files.
#[pyclass(name = "Dynamics", skip_from_py_object)]
struct PyDynamics {
    #[pyo3(get)]
    mode_index: Vec<usize>,
    #[pyo3(get)]
    frequencies: Vec<f64>,
    #[pyo3(get)]
    couplings: Vec<f64>,
    #[pyo3(get)]
    population_times: Vec<f64>,
    #[pyo3(get)]
    population: Vec<f64>,
    #[pyo3(get)]
    sample_times: Vec<f64>,
    /// `photons[sample][mode]`, unclipped.
    #[pyo3(get)]
    photons: Vec<Vec<f64>>,
    #[pyo3(get)]
    field_positions: Vec<f64>,
    /// `field[sample][position]`.
    #[pyo3(get)]
    field: Vec<Vec<f64>>,
    #[pyo3(get)]
    max_bond: Vec<usize>,
    #[pyo3(get)]
    discarded_weight: Vec<f64>,
}

#[pyfunction]
fn run_dynamics(py: Python<'_>, config: PyRunConfig) -> PyResult<PyDynamics> {
    let r = py.detach(|| scenarios::run_dynamics(&config.inner)).map_err(to_py)?;
    Ok(PyDynamics {
        mode_index: r.mode_index,
        frequencies: r.couplings.frequencies,
        couplings: r.couplings.g_d,
        population_times: r.population_times,
        population: r.population,
        sample_times: r.sample_times,
        photons: r.photons,
        field_positions: r.field.positions,
        field: r.field.values,
        max_bond: r.steps.iter().map(|s| s.max_bond).collect(),
        discarded_weight: r.steps.iter().map(|s| s.total_discarded_weight).collect(),
    })
}

#[pyclass(name = "Chain", skip_from_py_object)]
struct PyChain {
    #[pyo3(get)]
    rho: f64,
    #[pyo3(get)]
    xi: Vec<f64>,
    #[pyo3(get)]
    t: Vec<f64>,
    #[pyo3(get)]
    orthogonality_defect: f64,
    /// Rows are chain sites, columns are modes.
    #[pyo3(get)]
    u: Vec<Vec<f64>>,
}

impl From<ChainTransform> for PyChain {
    fn from(c: ChainTransform) -> Self {
        Self {
            rho: c.rho,
            orthogonality_defect: c.orthogonality_defect(),
            u: (0..c.u.nrows()).map(|i| (0..c.u.ncols()).map(|k| c.u[(i, k)]).collect()).collect(),
            xi: c.xi,
            t: c.t,
        }
    }
}

/// Star-to-chain transform of frequencies `omega` and dipole couplings `g`.
#[pyfunction]
#[pyo3(signature = (omega, g, stabilize = true))]
fn chain_map(omega: Vec<f64>, g: Vec<f64>, stabilize: bool) -> PyResult<PyChain> {
    Ok(map_chain(&omega, &g, stabilize).map_err(to_py)?.into())
}

/// Normalized gaps `(E_i − E_0)/ω_1` of one Hamiltonian variant for the
/// homogeneous mirror cavity with a centred atom.
#[pyfunction]
#[pyo3(signature = (variant, coupling_ratio, modes = 3, cutoff = 8, levels = 9, total_number = false))]
fn rabi_gaps(
    py: Python<'_>,
    variant: &str,
    coupling_ratio: f64,
    modes: usize,
    cutoff: usize,
    levels: usize,
    total_number: bool,
) -> PyResult<Vec<f64>> {
    let v = Variant::parse(variant).ok_or_else(|| PyValueError::new_err(format!("unknown variant {variant:?}")))?;
    py.detach(|| -> cqed::Result<Vec<f64>> {
        let grid = SpatialGrid::bounded(PI, 1001)?;
        let basis = analytic_modes_pec(modes, 1.0, &grid)?;
        let atom = calibrate_dipole(&basis, &TwoLevelAtom::new(1.0, 1.0, 0.0)?, coupling_ratio)?;
        let c = coupling_coefficients(&basis, &atom)?;
        let kind = if total_number {
            TruncationKind::TotalNumber
        } else {
            TruncationKind::PerMode
        };
        let t = FockTruncation::new(modes, cutoff, kind)?;
        let spectrum = || -> cqed::Result<AtomSpectrum> {
            let p = calibrate_double_well(DEFAULT_ANHARMONICITY, DEFAULT_QUARTIC, 1.0)?;
            AtomSpectrum::solve(&p, 1.0, 40)
        };
        let h = match v {
            Variant::RabiCProper => hamiltonians::build_rabi_coulomb_proper(&atom, &c, &t)?,
            Variant::RabiDProper => hamiltonians::build_rabi_dipole_proper(&atom, &c, &t, true)?,
            Variant::RabiCDirect => hamiltonians::build_rabi_coulomb_direct(&atom, &c, &t)?,
            Variant::RabiDDirect => hamiltonians::build_rabi_dipole_direct(&spectrum()?, &atom, &c, &t, 40)?,
            Variant::FullC => hamiltonians::build_full_coulomb(&spectrum()?, &c, &t, 12)?,
            Variant::FullD => hamiltonians::build_full_dipole(&spectrum()?, &c, &t, 12)?,
            Variant::Chain => {
                let coupled = c.coupled();
                let chain = map_chain(&coupled.frequencies, &coupled.g_d, true)?;
                hamiltonians::build_chain_dense(&atom, &chain, &t)?
            }
        };
        hamiltonians::spectrum_gaps(&h, levels, c.frequencies[0])
    })
    .map_err(to_py)
}

/// Lowest mode frequencies of a mirror cavity (`L = π`) with an optional slab.
#[pyfunction]
#[pyo3(signature = (count, grid_points = 1001, slab = None))]
fn pec_frequencies(count: usize, grid_points: usize, slab: Option<(f64, f64, f64)>) -> PyResult<Vec<f64>> {
    let run = || -> cqed::Result<Vec<f64>> {
        let grid = SpatialGrid::bounded(PI, grid_points)?;
        let profile = match slab {
            Some((centre, thickness, eps)) => PermittivityProfile::slab(&grid, centre * PI, thickness * PI, eps)?,
            None => PermittivityProfile::homogeneous(&grid),
        };
        Ok(solve_modes(&assemble_eigenproblem(&profile, &grid, Boundary::Pec)?, count, &grid)?.frequencies)
    };
    run().map_err(to_py)
}

#[pymodule]
fn cqed_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", scenarios::VERSION)?;
    m.add_class::<PyRunConfig>()?;
    m.add_class::<PyDynamics>()?;
    m.add_class::<PyChain>()?;
    m.add_function(wrap_pyfunction!(run_scenario, m)?)?;
    m.add_function(wrap_pyfunction!(run_dynamics, m)?)?;
    m.add_function(wrap_pyfunction!(chain_map, m)?)?;
    m.add_function(wrap_pyfunction!(rabi_gaps, m)?)?;
    m.add_function(wrap_pyfunction!(pec_frequencies, m)?)?;
    Ok(())
}
