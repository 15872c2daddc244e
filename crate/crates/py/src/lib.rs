//! Python bindings. Reports come back as plain dicts and lists; masks,
//! labelled pore spaces, networks and pressure solutions are classes.

use porescope::flowfield;
use porescope::pnm::{self, ConductanceModel, PoreNetwork, PressureSolution, SampleGeometry};
use porescope::poreseg::{self, DistanceMap, LabeledPoreSpace};
use porescope::regime::{self, RegimeCurve, TransitionOptions};
use porescope::streamline::{self, AngleMode, Streamline};
use porescope::voxel::{self, BinaryPoreMask, Connectivity, Dims, VoxelGrid};
use porescope::FluidProps;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use serde::Serialize;

fn err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// Round-trips a serialisable report through `json.loads`.
fn to_py(py: Python<'_>, v: &impl Serialize) -> PyResult<Py<PyAny>> {
    let text = serde_json::to_string(v).map_err(err)?;
    Ok(py.import("json")?.call_method1("loads", (text,))?.unbind())
}

fn angle_mode(s: &str) -> PyResult<AngleMode> {
    match s {
        "axial" => Ok(AngleMode::Axial),
        "full" => Ok(AngleMode::Full),
        _ => Err(PyValueError::new_err(format!("mode must be 'axial' or 'full', got {s:?}"))),
    }
}

fn dims(d: (usize, usize, usize)) -> Dims {
    Dims::new(d.0, d.1, d.2)
}

#[pyclass(name = "FluidProps", module = "porescope", skip_from_py_object)]
#[derive(Clone)]
struct PyFluid {
    inner: FluidProps,
}

#[pymethods]
impl PyFluid {
    /// Defaults are water near 25 °C.
    #[new]
    #[pyo3(signature = (density = 997.0, dynamic_viscosity = 8.8871e-4, kinematic_viscosity = 8.93e-7))]
    fn new(density: f64, dynamic_viscosity: f64, kinematic_viscosity: f64) -> PyResult<Self> {
        let inner = FluidProps { density, dynamic_viscosity, kinematic_viscosity };
        inner.validate().map_err(err)?;
        Ok(PyFluid { inner })
    }

    #[getter]
    fn density(&self) -> f64 {
        self.inner.density
    }

    #[getter]
    fn dynamic_viscosity(&self) -> f64 {
        self.inner.dynamic_viscosity
    }

    #[getter]
    fn kinematic_viscosity(&self) -> f64 {
        self.inner.kinematic_viscosity
    }

    fn __repr__(&self) -> String {
        let f = &self.inner;
        format!("FluidProps(density={}, dynamic_viscosity={}, kinematic_viscosity={})", f.density, f.dynamic_viscosity, f.kinematic_viscosity)
    }
}

fn fluid_or_default(f: Option<PyRef<'_, PyFluid>>) -> FluidProps {
    f.map(|f| f.inner).unwrap_or_default()
}

/// Boolean pore mask, x fastest then y then z.
#[pyclass(name = "PoreMask", module = "porescope")]
struct PyMask {
    inner: BinaryPoreMask,
}

#[pymethods]
impl PyMask {
    #[new]
    fn new(shape: (usize, usize, usize), voxel_size_um: f64, pore: Vec<bool>) -> PyResult<Self> {
        Ok(PyMask { inner: BinaryPoreMask::new(dims(shape), voxel_size_um, pore).map_err(err)? })
    }

    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        Ok(PyMask { inner: BinaryPoreMask::load(path.as_ref()).map_err(err)? })
    }

    /// Cylinder of `radius` voxels along z through an `n × n × nz` block.
    #[staticmethod]
    fn tube(n: usize, nz: usize, radius: f64, voxel_size_um: f64) -> Self {
        PyMask { inner: poreseg::fixtures::tube(n, nz, radius, voxel_size_um) }
    }

    /// Two balls joined by a narrow neck in an `n³` block.
    #[staticmethod]
    fn dumbbell(n: usize) -> Self {
        PyMask { inner: poreseg::fixtures::dumbbell(n) }
    }

    fn save(&self, path: &str) -> PyResult<()> {
        self.inner.save(path.as_ref()).map_err(err)
    }

    #[getter]
    fn shape(&self) -> (usize, usize, usize) {
        let d = self.inner.dims();
        (d.nx, d.ny, d.nz)
    }

    #[getter]
    fn voxel_size_um(&self) -> f64 {
        self.inner.voxel_size()
    }

    #[getter]
    fn porosity(&self) -> f64 {
        self.inner.porosity()
    }

    #[getter]
    fn pore_count(&self) -> usize {
        self.inner.pore_count()
    }

    fn to_list(&self) -> Vec<bool> {
        self.inner.pore().to_vec()
    }

    /// Keeps large components spanning z; returns the cleaned mask and the
    /// clean-up report.
    #[pyo3(signature = (min_component_voxels = 64))]
    fn clean(&self, py: Python<'_>, min_component_voxels: usize) -> PyResult<(PyMask, Py<PyAny>)> {
        let (m, report) = voxel::clean_pore_space(&self.inner, min_component_voxels, Connectivity::TwentySix).map_err(err)?;
        Ok((PyMask { inner: m }, to_py(py, &report)?))
    }

    fn __repr__(&self) -> String {
        let (x, y, z) = self.shape();
        format!("PoreMask({x}×{y}×{z}, porosity={:.4})", self.porosity())
    }
}

/// Thresholds a u8 grayscale volume; values at or below `threshold` are pore.
#[pyfunction]
#[pyo3(signature = (values, shape, voxel_size_um, threshold = 34))]
fn binarise(values: Vec<u8>, shape: (usize, usize, usize), voxel_size_um: f64, threshold: u8) -> PyResult<PyMask> {
    let grid = VoxelGrid::new(dims(shape), voxel_size_um, values).map_err(err)?;
    Ok(PyMask { inner: voxel::binarise(&grid, threshold) })
}

/// Labelled pore families with their distance map.
#[pyclass(name = "PoreSpace", module = "porescope")]
struct PyPoreSpace {
    lps: LabeledPoreSpace,
    dmap: DistanceMap,
}

#[pymethods]
impl PyPoreSpace {
    #[getter]
    fn pore_count(&self) -> usize {
        self.lps.pore_count()
    }

    fn labels(&self) -> Vec<u32> {
        self.lps.labels().to_vec()
    }

    fn adjacency(&self) -> Vec<(u32, u32)> {
        self.lps.adjacency().iter().copied().collect()
    }

    fn coordination(&self) -> Vec<usize> {
        poreseg::pore_connectivity(&self.lps).coordination
    }

    fn pores(&self, py: Python<'_>) -> PyResult<Py<PyAny>> {
        to_py(py, &self.lps.pores())
    }

    /// Porosity, channel diameter and connectivity per section and overall.
    fn stats(&self, py: Python<'_>, mask: PyRef<'_, PyMask>, section_length_um: f64) -> PyResult<Py<PyAny>> {
        to_py(py, &poreseg::architectural_stats(&self.lps, &mask.inner, section_length_um).map_err(err)?)
    }

    #[pyo3(signature = (fluid = None))]
    fn network(&self, fluid: Option<PyRef<'_, PyFluid>>) -> PyResult<PyNetwork> {
        let net = pnm::extract_network(&self.lps, &self.dmap, &fluid_or_default(fluid), ConductanceModel::default()).map_err(err)?;
        Ok(PyNetwork { inner: net })
    }
}

/// Distance map, maximal inscribed spheres and pore-family labelling.
#[pyfunction]
fn segment(mask: PyRef<'_, PyMask>) -> PyResult<PyPoreSpace> {
    let dmap = poreseg::distance_transform(&mask.inner);
    let spheres = poreseg::maximal_inscribed_spheres(&dmap);
    let lps = poreseg::segment_pores(&dmap, &spheres).map_err(err)?;
    Ok(PyPoreSpace { lps, dmap })
}

#[pyclass(name = "PoreNetwork", module = "porescope")]
struct PyNetwork {
    inner: PoreNetwork,
}

#[pymethods]
impl PyNetwork {
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(PyNetwork { inner: PoreNetwork::from_json(text).map_err(err)? })
    }

    /// Straight chain of `n` pores, unit conductances.
    #[staticmethod]
    fn chain(n: usize) -> Self {
        PyNetwork { inner: pnm::fixtures::chain(n) }
    }

    /// Inlet splitting into two identical branches that rejoin.
    #[staticmethod]
    fn symmetric_y() -> Self {
        PyNetwork { inner: pnm::fixtures::symmetric_y() }
    }

    #[staticmethod]
    fn random(n: usize, seed: u64) -> Self {
        PyNetwork { inner: pnm::fixtures::random_network(n, seed) }
    }

    fn to_json(&self) -> String {
        self.inner.to_json()
    }

    #[getter]
    fn pore_count(&self) -> usize {
        self.inner.real_pore_count()
    }

    #[getter]
    fn throat_count(&self) -> usize {
        self.inner.throats.len()
    }

    #[getter]
    fn inlet(&self) -> Vec<u32> {
        self.inner.inlet.clone()
    }

    #[getter]
    fn outlet(&self) -> Vec<u32> {
        self.inner.outlet.clone()
    }

    fn solve(&self, p_in: f64, p_out: f64) -> PyResult<PySolution> {
        Ok(PySolution { inner: pnm::solve_pressure(&self.inner, p_in, p_out).map_err(err)? })
    }

    /// Flux-weighted random walks from the inlet; returns the tortuosity
    /// distribution as a dict.
    #[pyo3(signature = (solution, n_particles = 2000, seed = 1))]
    fn particle_tortuosity(&self, py: Python<'_>, solution: PyRef<'_, PySolution>, n_particles: usize, seed: u64) -> PyResult<Py<PyAny>> {
        to_py(py, &pnm::particle_tortuosity(&self.inner, &solution.inner, n_particles, seed).map_err(err)?)
    }
}

#[pyclass(name = "PressureSolution", module = "porescope")]
struct PySolution {
    inner: PressureSolution,
}

#[pymethods]
impl PySolution {
    #[getter]
    fn pore_pressure(&self) -> Vec<f64> {
        self.inner.pore_pressure.clone()
    }

    #[getter]
    fn throat_flux(&self) -> Vec<f64> {
        self.inner.throat_flux.clone()
    }

    #[getter]
    fn total_flux(&self) -> f64 {
        self.inner.total_flux
    }

    #[getter]
    fn residual(&self) -> f64 {
        self.inner.residual
    }

    #[getter]
    fn iterations(&self) -> usize {
        self.inner.iterations
    }

    #[getter]
    fn isolated(&self) -> Vec<u32> {
        self.inner.isolated.clone()
    }

    /// `(k_m2, k_darcy)` over a sample of face area `area_m2` and length
    /// `length_m`.
    #[pyo3(signature = (area_m2, length_m, fluid = None))]
    fn permeability(&self, area_m2: f64, length_m: f64, fluid: Option<PyRef<'_, PyFluid>>) -> PyResult<(f64, f64)> {
        let dp = self.inner.p_in - self.inner.p_out;
        let k = pnm::permeability(&self.inner, SampleGeometry { area_m2, length_m }, &fluid_or_default(fluid), dp).map_err(err)?;
        Ok((k.k_m2, k.k_darcy))
    }
}

/// Path length over end-to-end distance of a polyline of `(x, y, z)` µm.
#[pyfunction]
fn stream_tortuosity(points: Vec<[f64; 3]>) -> PyResult<f64> {
    let s = Streamline::new(0, points).map_err(err)?;
    streamline::stream_tortuosity(&s).map_err(err)
}

/// XY direction of the end-to-end displacement in degrees.
#[pyfunction]
#[pyo3(signature = (points, mode = "axial"))]
fn stream_orientation(points: Vec<[f64; 3]>, mode: &str) -> PyResult<f64> {
    let s = Streamline::new(0, points).map_err(err)?;
    streamline::stream_orientation_xy(&s, angle_mode(mode)?).map_err(err)
}

#[pyfunction]
#[pyo3(signature = (angles_deg, mode = "axial"))]
fn fit_von_mises(py: Python<'_>, angles_deg: Vec<f64>, mode: &str) -> PyResult<Py<PyAny>> {
    to_py(py, &streamline::fit_von_mises(&angles_deg, angle_mode(mode)?).map_err(err)?)
}

#[pyfunction]
fn sample_von_mises(mu_deg: f64, kappa: f64, n: usize, seed: u64) -> Vec<f64> {
    streamline::sample_von_mises(mu_deg, kappa, n, seed)
}

/// Darcy and Forchheimer fits and the transition velocity for one curve.
#[pyfunction]
#[pyo3(signature = (velocities, dp_per_length, fluid = None, deviation_tol = 0.05, reference_points = 3, section = "sample"))]
fn analyze_regime(
    py: Python<'_>,
    velocities: Vec<f64>,
    dp_per_length: Vec<f64>,
    fluid: Option<PyRef<'_, PyFluid>>,
    deviation_tol: f64,
    reference_points: usize,
    section: &str,
) -> PyResult<Py<PyAny>> {
    if velocities.len() != dp_per_length.len() {
        return Err(PyValueError::new_err("velocities and dp_per_length differ in length"));
    }
    let pairs: Vec<(f64, f64)> = velocities.into_iter().zip(dp_per_length).collect();
    let curve = RegimeCurve::from_pairs(section, &pairs).map_err(err)?;
    let opts = TransitionOptions { deviation_tol, reference_points };
    to_py(py, &regime::analyze_regime(&curve, &fluid_or_default(fluid), opts).map_err(err)?)
}

/// `√(4A/π)` for an area in any squared unit.
#[pyfunction]
fn hydraulic_diameter(area: f64) -> f64 {
    flowfield::hydraulic_diameter(area)
}

/// `u·D/ν` with SI inputs.
#[pyfunction]
fn reynolds(speed: f64, diameter_m: f64, kinematic_viscosity: f64) -> f64 {
    flowfield::reynolds(speed, diameter_m, kinematic_viscosity)
}

#[pyfunction]
fn darcy_to_m2(k_darcy: f64) -> f64 {
    porescope::darcy_to_m2(k_darcy)
}

#[pyfunction]
fn m2_to_darcy(k_m2: f64) -> f64 {
    porescope::m2_to_darcy(k_m2)
}

#[pymodule]
#[pyo3(name = "porescope")]
pub fn porescope_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("DARCY_M2", porescope::DARCY_M2)?;
    m.add_class::<PyFluid>()?;
    m.add_class::<PyMask>()?;
    m.add_class::<PyPoreSpace>()?;
    m.add_class::<PyNetwork>()?;
    m.add_class::<PySolution>()?;
    m.add_function(wrap_pyfunction!(binarise, m)?)?;
    m.add_function(wrap_pyfunction!(segment, m)?)?;
    m.add_function(wrap_pyfunction!(stream_tortuosity, m)?)?;
    m.add_function(wrap_pyfunction!(stream_orientation, m)?)?;
    m.add_function(wrap_pyfunction!(fit_von_mises, m)?)?;
    m.add_function(wrap_pyfunction!(sample_von_mises, m)?)?;
    m.add_function(wrap_pyfunction!(analyze_regime, m)?)?;
    m.add_function(wrap_pyfunction!(hydraulic_diameter, m)?)?;
    m.add_function(wrap_pyfunction!(reynolds, m)?)?;
    m.add_function(wrap_pyfunction!(darcy_to_m2, m)?)?;
    m.add_function(wrap_pyfunction!(m2_to_darcy, m)?)?;
    Ok(())
}
