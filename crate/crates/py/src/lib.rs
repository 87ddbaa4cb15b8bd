//! Python bindings for the `levy_branching` crate.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use levy_branching::formulas::{Pmf, SubordinatorFormulas, XStarFormulas};
use levy_branching::semigroup_solver::{
    solve_moment_pi, solve_occupation, solve_single_birth_u, CumulantSolution, MomentSolution, OccupationSolution,
};
use levy_branching::{
    batch_simulate, extract_x, extract_xstar, genealogy, occupation, run_suite, simulate_cmj, CmjOptions, JumpMeasure,
    LevyModel, OffspringLaw, Orientation, PathRecord, SolverOptions, Suite, SuiteConfig,
};

fn py_err(e: levy_branching::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn orientation(name: &str) -> PyResult<Orientation> {
    match name {
        "subordinator_negative_drift" | "x" => Ok(Orientation::SubordinatorNegativeDrift),
        "negative_subordinator_positive_drift" | "xstar" => Ok(Orientation::NegativeSubordinatorPositiveDrift),
        other => Err(PyValueError::new_err(format!("unknown orientation {other:?}"))),
    }
}

fn orientation_name(o: Orientation) -> &'static str {
    match o {
        Orientation::SubordinatorNegativeDrift => "subordinator_negative_drift",
        Orientation::NegativeSubordinatorPositiveDrift => "negative_subordinator_positive_drift",
    }
}

/// A spectrally one-sided Lévy model with drift `c` and jump measure `Π`.
#[pyclass(name = "Model", module = "levy_branching_py", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyModel {
    inner: LevyModel,
}

impl PyModel {
    fn build(orient: &str, c: f64, measure: levy_branching::Result<JumpMeasure>, start: f64) -> PyResult<Self> {
        let measure = measure.map_err(py_err)?;
        let inner = LevyModel::new(c, measure, orientation(orient)?, start).map_err(py_err)?;
        Ok(Self { inner })
    }
}

#[pymethods]
impl PyModel {
    /// `Π(dz) = rate · decay · e^{−decay z} dz`.
    #[staticmethod]
    #[pyo3(signature = (orientation, c, rate, decay, start = 0.0))]
    fn exponential(orientation: &str, c: f64, rate: f64, decay: f64, start: f64) -> PyResult<Self> {
        Self::build(orientation, c, JumpMeasure::exponential(rate, decay), start)
    }

    /// Finitely many `(position, weight)` atoms.
    #[staticmethod]
    #[pyo3(signature = (orientation, c, atoms, start = 0.0))]
    fn atoms(orientation: &str, c: f64, atoms: Vec<(f64, f64)>, start: f64) -> PyResult<Self> {
        Self::build(orientation, c, JumpMeasure::atoms(atoms), start)
    }

    /// Density given at `(z, value)` grid points, linear in between.
    #[staticmethod]
    #[pyo3(signature = (orientation, c, points, start = 0.0))]
    fn tabulated(orientation: &str, c: f64, points: Vec<(f64, f64)>, start: f64) -> PyResult<Self> {
        Self::build(orientation, c, JumpMeasure::tabulated(points), start)
    }

    #[getter]
    fn drift(&self) -> f64 {
        self.inner.drift()
    }

    #[getter]
    fn start(&self) -> f64 {
        self.inner.start()
    }

    #[getter]
    fn orientation(&self) -> &'static str {
        orientation_name(self.inner.orientation())
    }

    #[getter]
    fn mean_jump(&self) -> f64 {
        self.inner.mean_jump()
    }

    #[getter]
    fn jump_rate(&self) -> f64 {
        self.inner.measure().total_mass()
    }

    fn is_subcritical(&self) -> bool {
        self.inner.is_subcritical()
    }

    fn laplace_exponent(&self, beta: f64) -> f64 {
        self.inner.laplace_exponent(beta)
    }

    fn phi(&self, q: f64) -> PyResult<f64> {
        self.inner.phi(q).map_err(py_err)
    }

    fn phi_zero(&self) -> f64 {
        self.inner.phi_zero()
    }

    fn tilt(&self) -> Self {
        Self { inner: self.inner.tilt() }
    }

    fn with_start(&self, start: f64) -> PyResult<Self> {
        Ok(Self { inner: self.inner.with_start(start).map_err(py_err)? })
    }

    fn truncated(&self, eps: f64) -> PyResult<Self> {
        Ok(Self { inner: self.inner.truncated(eps).map_err(py_err)? })
    }

    /// Scale function values `W(x)` for each `x`.
    #[pyo3(signature = (xs, tol = 1e-10))]
    fn scale_w(&self, xs: Vec<f64>, tol: f64) -> PyResult<Vec<f64>> {
        let x_max = xs.iter().cloned().fold(1.0, f64::max);
        let table = self.inner.scale_w(x_max, tol).map_err(py_err)?;
        Ok(xs.iter().map(|&x| table.eval(x)).collect())
    }

    fn __repr__(&self) -> String {
        format!(
            "Model(orientation={:?}, c={}, mean_jump={}, start={})",
            self.orientation(),
            self.inner.drift(),
            self.inner.mean_jump(),
            self.inner.start()
        )
    }
}

/// Test function `f` or time weight `h`.
#[pyclass(name = "TestFunction", module = "levy_branching_py", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyTestFunction {
    inner: levy_branching::TestFunction,
}

#[pymethods]
impl PyTestFunction {
    #[staticmethod]
    fn constant(theta: f64) -> PyResult<Self> {
        Ok(Self { inner: levy_branching::TestFunction::constant(theta).map_err(py_err)? })
    }

    /// `min(slope x, cap)`; pass `float("inf")` for no cap.
    #[staticmethod]
    fn capped_linear(slope: f64, cap: f64) -> PyResult<Self> {
        Ok(Self { inner: levy_branching::TestFunction::capped_linear(slope, cap).map_err(py_err)? })
    }

    #[staticmethod]
    fn indicator(lo: f64, hi: f64) -> PyResult<Self> {
        Ok(Self { inner: levy_branching::TestFunction::indicator(lo, hi).map_err(py_err)? })
    }

    fn __call__(&self, x: f64) -> f64 {
        self.inner.eval(x)
    }

    fn __repr__(&self) -> String {
        format!("{:?}", self.inner)
    }
}

/// One simulated killed path.
#[pyclass(name = "Path", module = "levy_branching_py", frozen)]
struct PyPath {
    inner: PathRecord,
}

#[pymethods]
impl PyPath {
    #[getter]
    fn index(&self) -> u64 {
        self.inner.index
    }

    #[getter]
    fn tau0(&self) -> f64 {
        self.inner.tau0
    }

    #[getter]
    fn start(&self) -> f64 {
        self.inner.start
    }

    /// Jumps as `(time, pre-jump level, size)` triples.
    #[getter]
    fn events(&self) -> Vec<(f64, f64, f64)> {
        self.inner.events.iter().map(|e| (e.time, e.pre_level, e.size)).collect()
    }

    fn level_at(&self, s: f64) -> Option<f64> {
        self.inner.level_at(s)
    }

    /// Atom positions of the branching measure at level `t`.
    fn extract(&self, t: f64) -> PyResult<Vec<f64>> {
        let m = match self.inner.orientation {
            Orientation::SubordinatorNegativeDrift => extract_x(&self.inner, t),
            Orientation::NegativeSubordinatorPositiveDrift => extract_xstar(&self.inner, t),
        }
        .map_err(py_err)?;
        Ok(m.atoms)
    }

    /// `∫ h(t) ⟨X_t, f⟩ dt` along this path.
    fn occupation(&self, h: &PyTestFunction, f: &PyTestFunction) -> PyResult<f64> {
        occupation(&self.inner, &h.inner, &f.inner).map_err(py_err)
    }

    /// Genealogy rows `(node, parent, birth, position, death)`.
    fn genealogy(&self) -> PyResult<Vec<(usize, Option<usize>, f64, f64, f64)>> {
        let tree = genealogy(&self.inner).map_err(py_err)?;
        Ok(tree.nodes.iter().enumerate().map(|(id, n)| (id, n.parent, n.birth, n.position, n.death)).collect())
    }
}

/// Simulates `n` independent paths; path `k` uses stream `(seed, k)`.
#[pyfunction]
#[pyo3(signature = (model, n, seed, eps = 1e-9))]
fn simulate(py: Python<'_>, model: &PyModel, n: usize, seed: u64, eps: f64) -> PyResult<Vec<PyPath>> {
    let paths = py.detach(|| batch_simulate(&model.inner, eps, n, seed)).map_err(py_err)?;
    Ok(paths.into_iter().map(|inner| PyPath { inner }).collect())
}

fn solver_options(step: f64, tol: f64) -> SolverOptions {
    SolverOptions { step, tol, ..SolverOptions::default() }
}

/// Solution `U_t f(x)` of the cumulant equation.
#[pyclass(name = "Cumulant", module = "levy_branching_py", frozen)]
struct PyCumulant {
    inner: CumulantSolution,
}

#[pymethods]
impl PyCumulant {
    fn u(&self, t: f64, x: f64) -> f64 {
        self.inner.u(t, x)
    }

    #[getter]
    fn horizon(&self) -> f64 {
        self.inner.horizon()
    }
}

/// Solution `π_t f(x)` of the moment equation.
#[pyclass(name = "Moment", module = "levy_branching_py", frozen)]
struct PyMoment {
    inner: MomentSolution,
}

#[pymethods]
impl PyMoment {
    fn pi(&self, t: f64, x: f64) -> f64 {
        self.inner.pi(t, x)
    }
}

/// Solution `ω` of the occupation equation.
#[pyclass(name = "Occupation", module = "levy_branching_py", frozen)]
struct PyOccupation {
    inner: OccupationSolution,
}

#[pymethods]
impl PyOccupation {
    fn omega(&self, t: f64, x: f64) -> PyResult<f64> {
        self.inner.omega(t, x).map_err(py_err)
    }

    fn omega0(&self, x: f64) -> PyResult<f64> {
        self.inner.omega0(x).map_err(py_err)
    }
}

#[pyfunction]
#[pyo3(signature = (model, f, horizon, step = 1e-3, tol = 1e-10))]
fn solve_cumulant(
    py: Python<'_>,
    model: &PyModel,
    f: &PyTestFunction,
    horizon: f64,
    step: f64,
    tol: f64,
) -> PyResult<PyCumulant> {
    let opts = solver_options(step, tol);
    let inner = py.detach(|| solve_single_birth_u(&model.inner, &f.inner, horizon, &opts)).map_err(py_err)?;
    Ok(PyCumulant { inner })
}

#[pyfunction]
#[pyo3(signature = (model, f, horizon, step = 1e-3, tol = 1e-10))]
fn solve_moment(
    py: Python<'_>,
    model: &PyModel,
    f: &PyTestFunction,
    horizon: f64,
    step: f64,
    tol: f64,
) -> PyResult<PyMoment> {
    let opts = solver_options(step, tol);
    let inner = py.detach(|| solve_moment_pi(&model.inner, &f.inner, horizon, &opts)).map_err(py_err)?;
    Ok(PyMoment { inner })
}

#[pyfunction]
#[pyo3(name = "solve_occupation", signature = (model, h, f, step = 1e-3, tol = 1e-10))]
fn py_solve_occupation(
    py: Python<'_>,
    model: &PyModel,
    h: &PyTestFunction,
    f: &PyTestFunction,
    step: f64,
    tol: f64,
) -> PyResult<PyOccupation> {
    let opts = solver_options(step, tol);
    let inner = py.detach(|| solve_occupation(&model.inner, &h.inner, &f.inner, &opts)).map_err(py_err)?;
    Ok(PyOccupation { inner })
}

/// Closed-form predictions for the subordinator orientation.
#[pyclass(name = "Formulas", module = "levy_branching_py", frozen)]
struct PyFormulas {
    inner: SubordinatorFormulas,
}

#[pymethods]
impl PyFormulas {
    #[new]
    #[pyo3(signature = (model, x_max = 20.0))]
    fn new(model: &PyModel, x_max: f64) -> PyResult<Self> {
        Ok(Self { inner: SubordinatorFormulas::new(&model.inner, x_max).map_err(py_err)? })
    }

    fn w(&self, x: f64) -> f64 {
        self.inner.w(x)
    }

    fn hitting_laplace(&self, x: f64, q: f64) -> PyResult<f64> {
        self.inner.hitting_laplace(x, q).map_err(py_err)
    }

    fn exit_down_prob(&self, x: f64, t: f64) -> PyResult<f64> {
        self.inner.exit_down_prob(x, t).map_err(py_err)
    }

    fn occupation_laplace(&self, a: f64, q: f64) -> PyResult<f64> {
        self.inner.occupation_laplace(a, q).map_err(py_err)
    }

    fn return_prob(&self, t: f64) -> f64 {
        self.inner.return_prob(t)
    }

    fn total_mass_pmf(&self, t: f64, a: f64) -> PyResult<Pmf> {
        self.inner.total_mass_pmf(t, a).map_err(py_err)
    }

    fn atom_density(&self, t: f64, z: f64) -> PyResult<f64> {
        self.inner.atom_density(t, z).map_err(py_err)
    }

    fn first_atom_density(&self, t: f64, a: f64, z: f64) -> PyResult<f64> {
        self.inner.first_atom_density(t, a, z).map_err(py_err)
    }
}

/// Closed-form predictions for the negative orientation at level `t`.
#[pyclass(name = "XStarFormulas", module = "levy_branching_py", frozen)]
struct PyXStarFormulas {
    inner: XStarFormulas,
}

#[pymethods]
impl PyXStarFormulas {
    #[new]
    fn new(model: &PyModel, t: f64) -> PyResult<Self> {
        Ok(Self { inner: XStarFormulas::new(&model.inner, t).map_err(py_err)? })
    }

    fn pmf(&self) -> Pmf {
        self.inner.pmf()
    }

    fn p_none(&self) -> f64 {
        self.inner.p_none()
    }

    fn last_atom_density(&self, y: f64) -> PyResult<f64> {
        self.inner.last_atom_density(y).map_err(py_err)
    }

    fn other_atom_density(&self, y: f64) -> PyResult<f64> {
        self.inner.other_atom_density(y).map_err(py_err)
    }

    fn occupation_laplace(&self, q: f64) -> PyResult<f64> {
        self.inner.occupation_laplace(q).map_err(py_err)
    }
}

/// Direct simulation of the single-birth branching system of the
/// truncated model; returns atoms per level for each replica.
#[pyfunction]
#[pyo3(signature = (model, initial, levels, replicas, seed, eps = 1e-9))]
fn cmj(
    py: Python<'_>,
    model: &PyModel,
    initial: Vec<f64>,
    levels: Vec<f64>,
    replicas: usize,
    seed: u64,
    eps: f64,
) -> PyResult<Vec<Vec<Vec<f64>>>> {
    let horizon = levels.iter().cloned().fold(0.0, f64::max);
    py.detach(|| {
        let truncated = model.inner.truncated(eps)?;
        let law = OffspringLaw::single_birth(&truncated)?;
        let opts = CmjOptions::new(horizon);
        (0..replicas as u64)
            .map(|k| {
                simulate_cmj(&law, &initial, &levels, &opts, seed, k)
                    .map(|run| run.snapshots.into_iter().map(|m| m.atoms).collect())
            })
            .collect::<levy_branching::Result<Vec<_>>>()
    })
    .map_err(py_err)
}

/// Runs a verification suite; returns `(passed, report_json)`.
#[pyfunction]
#[pyo3(signature = (model, suite, n_paths = 100_000, seed = 20240917))]
fn verify(py: Python<'_>, model: &PyModel, suite: &str, n_paths: usize, seed: u64) -> PyResult<(bool, String)> {
    let suite: Suite = suite.parse().map_err(py_err)?;
    let cfg = SuiteConfig { n_paths, seed, ..SuiteConfig::default() };
    let report = py.detach(|| run_suite(suite, &model.inner, &cfg)).map_err(py_err)?;
    Ok((report.passed(), report.to_json()))
}

#[pymodule]
pub fn levy_branching_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyModel>()?;
    m.add_class::<PyTestFunction>()?;
    m.add_class::<PyPath>()?;
    m.add_class::<PyCumulant>()?;
    m.add_class::<PyMoment>()?;
    m.add_class::<PyOccupation>()?;
    m.add_class::<PyFormulas>()?;
    m.add_class::<PyXStarFormulas>()?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(solve_cumulant, m)?)?;
    m.add_function(wrap_pyfunction!(solve_moment, m)?)?;
    m.add_function(wrap_pyfunction!(py_solve_occupation, m)?)?;
    m.add_function(wrap_pyfunction!(cmj, m)?)?;
    m.add_function(wrap_pyfunction!(verify, m)?)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn orientation_names_round_trip() {
        for o in [Orientation::SubordinatorNegativeDrift, Orientation::NegativeSubordinatorPositiveDrift] {
            assert_eq!(orientation(orientation_name(o)).unwrap(), o);
        }
        assert_eq!(orientation("xstar").unwrap(), Orientation::NegativeSubordinatorPositiveDrift);
    }
}
