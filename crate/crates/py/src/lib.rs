//! Python bindings. Sections cross the boundary as `(t, x, value)` triples on
//! the way in and as `n_t × n_x` nested lists on the way out.

use affqft::{
    check_affine_quasifree, n_point, set_partitions, truncated_moments, AffineOperator, AlgebraElement, DualObservable,
    InducedAffineState, ObservableFamily, PhaseVector, QuasiFreeState, Section, Site, StateFunctional,
};
use nalgebra::DMatrix;
use num_complex::Complex64;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

type Triples = Vec<(usize, usize, f64)>;

/// `(n, args, moment, truncated)`.
type MomentRow = (usize, Vec<usize>, Complex64, Complex64);

fn err(e: affqft::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn to_rows(s: &Section) -> Vec<Vec<f64>> {
    (0..s.lattice().n_t()).map(|t| s.slice(t).to_vec()).collect()
}

fn to_triples(s: &Section) -> Triples {
    s.support().iter().map(|site| (site.t, site.x, s.get(site.t, site.x))).collect()
}

fn matrix(rows: &[Vec<f64>]) -> PyResult<DMatrix<f64>> {
    let n = rows.len();
    if rows.iter().any(|r| r.len() != n) {
        return Err(PyValueError::new_err("matrix must be square"));
    }
    Ok(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
}

#[pyclass(name = "Lattice", module = "affqft", frozen, skip_from_py_object)]
#[derive(Clone, Copy)]
struct PyLattice(affqft::Lattice);

#[pymethods]
impl PyLattice {
    #[new]
    #[pyo3(signature = (n_x, n_t, dx = 1.0, dt = 0.5, mass = 1.0))]
    fn new(n_x: usize, n_t: usize, dx: f64, dt: f64, mass: f64) -> PyResult<Self> {
        affqft::Lattice::new(n_x, n_t, dx, dt, mass).map(Self).map_err(err)
    }

    /// The 16 × 64 lattice with dx = 1, dt = 0.5, m = 1.
    #[staticmethod]
    fn desk() -> Self {
        Self(affqft::Lattice::desk())
    }

    #[getter]
    fn n_x(&self) -> usize {
        self.0.n_x()
    }

    #[getter]
    fn n_t(&self) -> usize {
        self.0.n_t()
    }

    #[getter]
    fn dx(&self) -> f64 {
        self.0.dx()
    }

    #[getter]
    fn dt(&self) -> f64 {
        self.0.dt()
    }

    #[getter]
    fn mass(&self) -> f64 {
        self.0.mass()
    }

    #[getter]
    fn vol(&self) -> f64 {
        self.0.vol()
    }

    fn causally_disjoint(&self, a: Vec<(usize, usize)>, b: Vec<(usize, usize)>) -> PyResult<bool> {
        let set = |v: &[(usize, usize)]| self.0.site_set(&v.iter().map(|&(t, x)| Site::new(t, x)).collect::<Vec<_>>());
        Ok(self.0.causally_disjoint(&set(&a).map_err(err)?, &set(&b).map_err(err)?))
    }

    fn __repr__(&self) -> String {
        let l = &self.0;
        format!("Lattice(n_x={}, n_t={}, dx={}, dt={}, mass={})", l.n_x(), l.n_t(), l.dx(), l.dt(), l.mass())
    }
}

/// An affine observable `φ(s) = Σ vol (a + b·s)`.
#[pyclass(name = "Observable", module = "affqft", frozen, from_py_object)]
#[derive(Clone)]
struct PyObservable(DualObservable);

#[pymethods]
impl PyObservable {
    #[new]
    #[pyo3(signature = (lattice, constant = Vec::new(), linear = Vec::new()))]
    fn new(lattice: &PyLattice, constant: Triples, linear: Triples) -> PyResult<Self> {
        let a = Section::from_triples(&lattice.0, &constant).map_err(err)?;
        let b = Section::from_triples(&lattice.0, &linear).map_err(err)?;
        DualObservable::new(a, b).map(Self).map_err(err)
    }

    #[getter]
    fn constant(&self) -> Triples {
        to_triples(&self.0.constant)
    }

    #[getter]
    fn linear(&self) -> Triples {
        to_triples(&self.0.linear)
    }

    fn support(&self) -> Vec<(usize, usize)> {
        self.0.support().iter().map(|s| (s.t, s.x)).collect()
    }

    /// `Σ vol (a + b·s)` for a full configuration given as `n_t × n_x` rows.
    fn evaluate(&self, configuration: Vec<Vec<f64>>) -> PyResult<f64> {
        let l = *self.0.lattice();
        let s = Section::from_values(&l, configuration.concat()).map_err(err)?;
        self.0.functional(&s).map_err(err)
    }
}

/// Canonical form `(I′, u, u_next)` of a phase-space class.
#[pyclass(name = "PhaseVector", module = "affqft", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyPhaseVector(PhaseVector);

#[pymethods]
impl PyPhaseVector {
    #[getter]
    fn i_prime(&self) -> f64 {
        self.0.i_prime
    }

    #[getter]
    fn u(&self) -> Vec<f64> {
        self.0.data.u.clone()
    }

    #[getter]
    fn u_next(&self) -> Vec<f64> {
        self.0.data.u_next.clone()
    }

    fn is_null(&self) -> bool {
        self.0.is_null()
    }

    fn __repr__(&self) -> String {
        format!("PhaseVector(i_prime={}, |data|={:.3e})", self.0.i_prime, self.0.data.max_abs())
    }
}

#[pyclass(name = "PhaseSpace", module = "affqft", frozen)]
struct PyPhaseSpace(affqft::PhaseSpace);

#[pymethods]
impl PyPhaseSpace {
    /// Phase space of `P = P_V + J` with `J` given as triples.
    #[new]
    #[pyo3(signature = (lattice, source = Vec::new()))]
    fn new(lattice: &PyLattice, source: Triples) -> PyResult<Self> {
        let j = Section::from_triples(&lattice.0, &source).map_err(err)?;
        let op = AffineOperator::new(j).map_err(err)?;
        affqft::PhaseSpace::new(op).map(Self).map_err(err)
    }

    #[getter]
    fn lattice(&self) -> PyLattice {
        PyLattice(*self.0.lattice())
    }

    /// The reference solution `ŝ* = −G⁺J`.
    fn reference(&self) -> Vec<Vec<f64>> {
        to_rows(self.0.reference())
    }

    fn classify(&self, phi: &PyObservable) -> PyResult<PyPhaseVector> {
        self.0.classify(&phi.0).map(PyPhaseVector).map_err(err)
    }

    fn tau(&self, phi: &PyObservable, psi: &PyObservable) -> PyResult<f64> {
        self.0.tau(&phi.0, &psi.0).map_err(err)
    }

    fn tau_canonical(&self, a: &PyPhaseVector, b: &PyPhaseVector) -> PyResult<f64> {
        self.0.tau_canonical(&a.0, &b.0).map_err(err)
    }

    /// An equivalent observable supported strictly inside `(t_a, t_b)`.
    fn timeslice_deform(&self, phi: &PyObservable, t_a: usize, t_b: usize) -> PyResult<PyObservable> {
        let region = self.0.lattice().window(t_a, t_b).map_err(err)?;
        self.0.timeslice_deform(&phi.0, &region).map(PyObservable).map_err(err)
    }
}

#[pyclass(name = "Algebra", module = "affqft", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyAlgebra(affqft::Algebra);

#[pymethods]
impl PyAlgebra {
    /// CCR algebra, `[Ψ_i, Ψ_j] = i g_ij 𝟏`, for an antisymmetric `g`.
    #[staticmethod]
    fn ccr(gram: Vec<Vec<f64>>) -> PyResult<Self> {
        affqft::Algebra::ccr(matrix(&gram)?).map(Self).map_err(err)
    }

    /// CAR algebra, `{Ψ_i, Ψ_j} = g_ij 𝟏`, for a symmetric `g`.
    #[staticmethod]
    fn car(gram: Vec<Vec<f64>>) -> PyResult<Self> {
        affqft::Algebra::car(matrix(&gram)?).map(Self).map_err(err)
    }

    #[getter]
    fn dim(&self) -> usize {
        self.0.dim()
    }

    #[getter]
    fn fermionic(&self) -> bool {
        self.0.statistics() == affqft::Statistics::Fermionic
    }

    fn one(&self) -> PyElement {
        PyElement(self.0.one())
    }

    fn scalar(&self, c: Complex64) -> PyElement {
        PyElement(self.0.scalar(c))
    }

    fn generator(&self, i: usize) -> PyResult<PyElement> {
        self.0.generator(i).map(PyElement).map_err(err)
    }

    fn word(&self, indices: Vec<usize>, coefficient: Option<Complex64>) -> PyResult<PyElement> {
        let c = coefficient.unwrap_or(Complex64::new(1.0, 0.0));
        self.0.from_words(&[(indices, c)]).map(PyElement).map_err(err)
    }
}

/// Element of a CCR/CAR algebra in normal form.
#[pyclass(name = "Element", module = "affqft", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyElement(AlgebraElement);

#[pymethods]
impl PyElement {
    fn __add__(&self, other: &PyElement) -> PyResult<PyElement> {
        self.0.add(&other.0).map(PyElement).map_err(err)
    }

    fn __sub__(&self, other: &PyElement) -> PyResult<PyElement> {
        self.0.sub(&other.0).map(PyElement).map_err(err)
    }

    fn __mul__(&self, other: &PyElement) -> PyResult<PyElement> {
        self.0.mul(&other.0).map(PyElement).map_err(err)
    }

    fn scale(&self, c: Complex64) -> PyElement {
        PyElement(self.0.scale(c))
    }

    fn star(&self) -> PyElement {
        PyElement(self.0.star())
    }

    fn commutator(&self, other: &PyElement) -> PyResult<PyElement> {
        self.0.commutator(&other.0).map(PyElement).map_err(err)
    }

    fn anticommutator(&self, other: &PyElement) -> PyResult<PyElement> {
        self.0.anticommutator(&other.0).map(PyElement).map_err(err)
    }

    fn coefficient(&self, word: Vec<usize>) -> Complex64 {
        self.0.coefficient(&word)
    }

    fn terms(&self) -> Vec<(Vec<usize>, Complex64)> {
        self.0.terms().map(|(w, c)| (w.to_vec(), c)).collect()
    }

    fn distance(&self, other: &PyElement) -> PyResult<f64> {
        self.0.distance(&other.0).map_err(err)
    }

    #[getter]
    fn degree(&self) -> usize {
        self.0.degree()
    }

    fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    fn __str__(&self) -> String {
        self.0.to_string()
    }
}

/// Quasi-free state fixed by its two-point matrix.
#[pyclass(name = "QuasiFreeState", module = "affqft", frozen)]
struct PyState(QuasiFreeState);

#[pymethods]
impl PyState {
    /// Bosonic state with symmetric part `mu` on the given CCR algebra.
    #[staticmethod]
    fn bosonic(algebra: &PyAlgebra, mu: Vec<Vec<f64>>) -> PyResult<Self> {
        QuasiFreeState::bosonic(&algebra.0, matrix(&mu)?).map(Self).map_err(err)
    }

    #[getter]
    fn algebra(&self) -> PyAlgebra {
        PyAlgebra(self.0.algebra().clone())
    }

    #[getter]
    fn mu(&self) -> Vec<Vec<f64>> {
        let m = self.0.mu();
        (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
    }

    #[getter]
    fn min_eigenvalue(&self) -> f64 {
        self.0.min_eigenvalue()
    }

    fn evaluate(&self, x: &PyElement) -> PyResult<Complex64> {
        self.0.evaluate(&x.0).map_err(err)
    }
}

/// The lattice ground state on the canonical phase-space coordinates.
#[pyfunction]
fn ground_state(lattice: &PyLattice) -> PyResult<PyState> {
    affqft::ground_state(&lattice.0).map(PyState).map_err(err)
}

/// Finite family of affine observables with the ground state pulled back
/// through `κ` of the reference solution.
#[pyclass(name = "ObservableFamily", module = "affqft", frozen)]
struct PyFamily {
    family: ObservableFamily,
    state: InducedAffineState<QuasiFreeState>,
}

#[pymethods]
impl PyFamily {
    #[new]
    fn new(space: &PyPhaseSpace, observables: Vec<PyObservable>) -> PyResult<Self> {
        let family = ObservableFamily::new(&space.0, observables.into_iter().map(|o| o.0).collect()).map_err(err)?;
        let state = family.induced_ground_state(&space.0).map_err(err)?;
        Ok(Self { family, state })
    }

    fn __len__(&self) -> usize {
        self.family.len()
    }

    fn n_point(&self, indices: Vec<usize>) -> PyResult<Complex64> {
        n_point(&self.state, &self.family, &indices).map_err(err)
    }

    /// One row per prefix of `args`.
    fn moments(&self, args: Vec<usize>) -> PyResult<Vec<MomentRow>> {
        let rows = truncated_moments(&self.state, &self.family, &args).map_err(err)?;
        Ok(rows.into_iter().map(|r| (r.n, r.args, r.moment, r.truncated)).collect())
    }

    /// `(passed, max_ratio)` of the affine quasi-free check.
    fn check_quasifree(&self, tuples: Vec<Vec<usize>>) -> PyResult<(bool, f64)> {
        let report = check_affine_quasifree(&self.state, &self.family, &tuples).map_err(err)?;
        Ok((report.passed, report.max_ratio))
    }
}

#[pyfunction(name = "set_partitions")]
fn py_set_partitions(n: usize) -> PyResult<Vec<Vec<Vec<usize>>>> {
    set_partitions(n).map_err(err)
}

#[pymodule]
#[pyo3(name = "affqft")]
fn affqft_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyLattice>()?;
    m.add_class::<PyObservable>()?;
    m.add_class::<PyPhaseVector>()?;
    m.add_class::<PyPhaseSpace>()?;
    m.add_class::<PyAlgebra>()?;
    m.add_class::<PyElement>()?;
    m.add_class::<PyState>()?;
    m.add_class::<PyFamily>()?;
    m.add_function(wrap_pyfunction!(ground_state, m)?)?;
    m.add_function(wrap_pyfunction!(py_set_partitions, m)?)?;
    Ok(())
}
