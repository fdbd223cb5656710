//! Quasi-free states, the induced affine state and moment tables.

use std::collections::HashMap;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::algebra::{Algebra, AlgebraElement, Kappa, PhaseBasis, Statistics, DEGREE_CAP};
use crate::error::{Error, Result};
use crate::fields::DualObservable;
use crate::lattice::Lattice;
use crate::phase_space::{canonical_gram, PhaseSpace, PhaseVector};

/// Eigenvalue floor for positivity checks.
pub const POSITIVITY_FLOOR: f64 = -1e-10;

/// Largest `n` handled by the partition machinery.
pub const MAX_MOMENT: usize = 8;

/// A linear functional on an algebra.
pub trait StateFunctional {
    fn algebra(&self) -> &Algebra;

    fn evaluate(&self, x: &AlgebraElement) -> Result<Complex64>;
}

/// Gaussian state fixed by its two-point matrix `ω₂[i][j] = ω(Ψ_i Ψ_j)`.
#[derive(Debug, Clone)]
pub struct QuasiFreeState {
    algebra: Algebra,
    omega2: DMatrix<Complex64>,
}

impl QuasiFreeState {
    /// `ω₂ = μ + (i/2)·τ` with `μ` real symmetric.
    pub fn bosonic(algebra: &Algebra, mu: DMatrix<f64>) -> Result<Self> {
        if algebra.statistics() != Statistics::Bosonic {
            return Err(Error::StatisticsMismatch);
        }
        let d = algebra.dim();
        if mu.nrows() != d || mu.ncols() != d {
            return Err(Error::DimensionMismatch { expected: d, found: mu.nrows() });
        }
        if (&mu - mu.transpose()).amax() > 1e-12 * mu.amax().max(1.0) {
            return Err(Error::FormSymmetry("symmetric"));
        }
        let g = algebra.gram();
        let omega2 = DMatrix::from_fn(d, d, |i, j| Complex64::new(mu[(i, j)], 0.5 * g[(i, j)]));
        Self::checked(algebra, omega2)
    }

    /// Fermionic state; requires `ω₂ + ω₂ᵀ = τ`, `ω₂` hermitian, and `τ` positive
    /// semidefinite.
    pub fn fermionic(algebra: &Algebra, omega2: DMatrix<Complex64>) -> Result<Self> {
        if algebra.statistics() != Statistics::Fermionic {
            return Err(Error::StatisticsMismatch);
        }
        let d = algebra.dim();
        if omega2.nrows() != d || omega2.ncols() != d {
            return Err(Error::DimensionMismatch { expected: d, found: omega2.nrows() });
        }
        let g = algebra.gram();
        let gmin = g.clone().symmetric_eigen().eigenvalues.min();
        if gmin < POSITIVITY_FLOOR {
            return Err(Error::Positivity { min_eigenvalue: gmin });
        }
        let sum = &omega2 + omega2.transpose();
        let defect = (0..d * d).map(|k| (sum[k] - g[k]).norm()).fold(0.0, f64::max);
        if defect > 1e-10 * g.amax().max(1.0) {
            return Err(Error::Argument(format!("omega2 + omega2^T deviates from the form by {defect:.3e}")));
        }
        let herm = (&omega2 - omega2.adjoint()).iter().map(|c| c.norm()).fold(0.0, f64::max);
        if herm > 1e-10 * g.amax().max(1.0) {
            return Err(Error::FormSymmetry("hermitian"));
        }
        Self::checked(algebra, omega2)
    }

    fn checked(algebra: &Algebra, omega2: DMatrix<Complex64>) -> Result<Self> {
        let min = hermitian_min_eigenvalue(&omega2);
        if min < POSITIVITY_FLOOR * omega2.iter().map(|c| c.norm()).fold(1.0, f64::max) {
            return Err(Error::Positivity { min_eigenvalue: min });
        }
        Ok(Self { algebra: algebra.clone(), omega2 })
    }

    pub fn omega2(&self) -> &DMatrix<Complex64> {
        &self.omega2
    }

    /// Real part of `ω₂`.
    pub fn mu(&self) -> DMatrix<f64> {
        self.omega2.map(|c| c.re)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        hermitian_min_eigenvalue(&self.omega2)
    }

    /// Restriction along `D`, whose column `j` expresses the new generator `j`
    /// in the old ones: `ω₂′ = Dᵀ ω₂ D`.
    pub fn restrict(&self, d: &DMatrix<f64>, target: &Algebra) -> Result<QuasiFreeState> {
        if d.nrows() != self.algebra.dim() {
            return Err(Error::DimensionMismatch { expected: self.algebra.dim(), found: d.nrows() });
        }
        if d.ncols() != target.dim() {
            return Err(Error::DimensionMismatch { expected: target.dim(), found: d.ncols() });
        }
        if target.statistics() != self.algebra.statistics() {
            return Err(Error::StatisticsMismatch);
        }
        let dc = d.map(|v| Complex64::new(v, 0.0));
        let w = dc.transpose() * &self.omega2 * &dc;
        let implied = d.transpose() * self.algebra.gram() * d;
        let deviation = (&implied - target.gram()).amax();
        if deviation > 1e-9 * implied.amax().max(1.0) {
            return Err(Error::NotFormPreserving { deviation });
        }
        match target.statistics() {
            Statistics::Bosonic => {
                let mu = w.map(|c| c.re);
                let mu = (&mu + mu.transpose()) * 0.5;
                Self::bosonic(target, mu)
            }
            Statistics::Fermionic => Self::fermionic(target, w),
        }
    }

    fn wick(&self, word: &[usize]) -> Complex64 {
        if word.is_empty() {
            return Complex64::new(1.0, 0.0);
        }
        if word.len() % 2 == 1 {
            return Complex64::new(0.0, 0.0);
        }
        let fermionic = self.algebra.statistics() == Statistics::Fermionic;
        let mut total = Complex64::new(0.0, 0.0);
        let mut rest = Vec::with_capacity(word.len() - 2);
        for k in 1..word.len() {
            rest.clear();
            rest.extend(word[1..k].iter().chain(&word[k + 1..]));
            let sign = if fermionic && (k - 1) % 2 == 1 { -1.0 } else { 1.0 };
            total += sign * self.omega2[(word[0], word[k])] * self.wick(&rest);
        }
        total
    }
}

impl StateFunctional for QuasiFreeState {
    fn algebra(&self) -> &Algebra {
        &self.algebra
    }

    fn evaluate(&self, x: &AlgebraElement) -> Result<Complex64> {
        check_algebra(&self.algebra, x)?;
        Ok(x.terms().map(|(w, c)| c * self.wick(w)).sum())
    }
}

fn check_algebra(algebra: &Algebra, x: &AlgebraElement) -> Result<()> {
    if x.statistics() != algebra.statistics() {
        return Err(Error::StatisticsMismatch);
    }
    if x.algebra() != algebra {
        return Err(Error::Argument("element is not over the state's algebra".into()));
    }
    if x.degree() > DEGREE_CAP {
        return Err(Error::DegreeCap { degree: x.degree(), cap: DEGREE_CAP });
    }
    Ok(())
}

/// Smallest eigenvalue of a hermitian matrix, via its real symmetric embedding
/// `[[A, −B], [B, A]]`.
pub fn hermitian_min_eigenvalue(m: &DMatrix<Complex64>) -> f64 {
    let n = m.nrows();
    if n == 0 {
        return 0.0;
    }
    let h = (m + m.adjoint()) * Complex64::new(0.5, 0.0);
    let real = DMatrix::from_fn(2 * n, 2 * n, |i, j| {
        let c = h[(i % n, j % n)];
        match (i < n, j < n) {
            (true, true) | (false, false) => c.re,
            (true, false) => -c.im,
            (false, true) => c.im,
        }
    });
    real.symmetric_eigen().eigenvalues.min()
}

/// Per-mode leapfrog angle: `cos θ_k = 1 − dt²·ω_k²/2`.
fn mode_angle(lattice: &Lattice, k: usize) -> f64 {
    let c = 1.0 - 0.5 * lattice.dt() * lattice.dt() * lattice.mode_frequency_sq(k);
    c.acos()
}

/// Stationary pure quasi-free state of the free lattice field, on the linear
/// phase space with coordinates `(u(t*), u(t*+1))`.
///
/// Each Fourier mode is a discrete oscillator `u_{t+1} = 2cos θ·u_t − u_{t−1}`;
/// its invariant Gaussian state has covariance
/// `κ/(2 sin θ)·[[1, cos θ], [cos θ, 1]]` with `κ = dx/dt`.
pub fn ground_state(lattice: &Lattice) -> Result<QuasiFreeState> {
    lattice.check_mode_stability()?;
    let n = lattice.n_x();
    let kappa = lattice.dx() / lattice.dt();
    let angles: Vec<f64> = (0..n).map(|k| mode_angle(lattice, k)).collect();
    let kernel = |r: usize, with_cos: bool| -> f64 {
        let s: f64 = angles
            .iter()
            .enumerate()
            .map(|(k, th)| {
                let phase = (2.0 * std::f64::consts::PI * (k * r) as f64 / n as f64).cos();
                let weight = if with_cos { th.cos() / th.sin() } else { 1.0 / th.sin() };
                phase * weight
            })
            .sum();
        kappa * s / (2.0 * n as f64)
    };
    let same: Vec<f64> = (0..n).map(|r| kernel(r, false)).collect();
    let cross: Vec<f64> = (0..n).map(|r| kernel(r, true)).collect();
    let mu = DMatrix::from_fn(2 * n, 2 * n, |i, j| {
        let r = (i % n + n - j % n) % n;
        if (i < n) == (j < n) {
            same[r]
        } else {
            cross[r]
        }
    });
    let g = canonical_gram(lattice);
    let algebra = Algebra::ccr(g.view((1, 1), (2 * n, 2 * n)).into_owned())?;
    QuasiFreeState::bosonic(&algebra, mu)
}

/// A base state with every degree-4 monomial shifted by `ε`; not quasi-free.
#[derive(Debug, Clone)]
pub struct Perturbed<S> {
    pub base: S,
    pub epsilon: f64,
}

impl<S: StateFunctional> StateFunctional for Perturbed<S> {
    fn algebra(&self) -> &Algebra {
        self.base.algebra()
    }

    fn evaluate(&self, x: &AlgebraElement) -> Result<Complex64> {
        let shift: Complex64 = x.terms().filter(|(w, _)| w.len() == 4).map(|(_, c)| c * self.epsilon).sum();
        Ok(self.base.evaluate(x)? + shift)
    }
}

/// `Ω_κ = Ω∘κ_ŝ`.
#[derive(Debug, Clone)]
pub struct InducedAffineState<S> {
    base: S,
    kappa: Kappa,
}

impl<S: StateFunctional> InducedAffineState<S> {
    pub fn new(base: S, kappa: Kappa) -> Result<Self> {
        if base.algebra() != kappa.target() {
            return Err(Error::Argument("base state is not over the kappa target".into()));
        }
        Ok(Self { base, kappa })
    }

    pub fn base(&self) -> &S {
        &self.base
    }

    pub fn kappa(&self) -> &Kappa {
        &self.kappa
    }
}

impl<S: StateFunctional> StateFunctional for InducedAffineState<S> {
    fn algebra(&self) -> &Algebra {
        self.kappa.source()
    }

    fn evaluate(&self, x: &AlgebraElement) -> Result<Complex64> {
        self.base.evaluate(&self.kappa.apply(x)?)
    }
}

/// Observables with their classes and generators over an adapted basis
/// (`e₀` plus the linear classes of the observables).
#[derive(Debug, Clone)]
pub struct ObservableFamily {
    observables: Vec<DualObservable>,
    classes: Vec<PhaseVector>,
    basis: PhaseBasis,
    algebra: Algebra,
    generators: Vec<AlgebraElement>,
}

impl ObservableFamily {
    pub fn new(space: &PhaseSpace, observables: Vec<DualObservable>) -> Result<Self> {
        let classes = observables.iter().map(|phi| space.classify(phi)).collect::<Result<Vec<_>>>()?;
        let basis = PhaseBasis::adapted(space, &observables)?;
        let algebra = basis.ccr()?;
        let generators = classes
            .iter()
            .enumerate()
            .map(|(i, pv)| algebra.generator(i + 1)?.add(&algebra.generator(0)?.scale_real(pv.i_prime)))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { observables, classes, basis, algebra, generators })
    }

    pub fn len(&self) -> usize {
        self.observables.len()
    }

    pub fn is_empty(&self) -> bool {
        self.observables.is_empty()
    }

    pub fn observables(&self) -> &[DualObservable] {
        &self.observables
    }

    pub fn classes(&self) -> &[PhaseVector] {
        &self.classes
    }

    pub fn basis(&self) -> &PhaseBasis {
        &self.basis
    }

    pub fn algebra(&self) -> &Algebra {
        &self.algebra
    }

    /// `Ψ([φ_i])`.
    pub fn generator(&self, i: usize) -> &AlgebraElement {
        &self.generators[i]
    }

    /// `Ψ([φ_{i₁}])⋯Ψ([φ_{iₙ}])`.
    pub fn product(&self, indices: &[usize]) -> Result<AlgebraElement> {
        let mut x = self.algebra.one();
        for &i in indices {
            let g = self
                .generators
                .get(i)
                .ok_or_else(|| Error::Argument(format!("observable index {i} out of range {}", self.len())))?;
            x = x.mul(g)?;
        }
        Ok(x)
    }

    /// Columns: canonical Cauchy data of the linear classes.
    pub fn data_matrix(&self) -> DMatrix<f64> {
        let rows = self.classes.first().map_or(0, |c| c.data.to_vec().len());
        DMatrix::from_fn(rows, self.len(), |r, c| self.classes[c].data.to_vec()[r])
    }

    /// The ground state pulled back through `κ_{ŝ*}`.
    pub fn induced_ground_state(&self, space: &PhaseSpace) -> Result<InducedAffineState<QuasiFreeState>> {
        let gs = ground_state(space.lattice())?;
        self.induced_state(space, &gs)
    }

    /// `base` (over canonical data coordinates) restricted to the family and
    /// pulled back through `κ_{ŝ*}`.
    pub fn induced_state(
        &self,
        space: &PhaseSpace,
        base: &QuasiFreeState,
    ) -> Result<InducedAffineState<QuasiFreeState>> {
        let lin = self.basis.lin_ccr()?;
        let restricted = base.restrict(&self.data_matrix(), &lin)?;
        InducedAffineState::new(restricted, Kappa::reference(space, &self.basis)?)
    }
}

/// `ω̃ₙ(φ_{i₁},…,φ_{iₙ})`.
pub fn n_point<S: StateFunctional>(state: &S, family: &ObservableFamily, indices: &[usize]) -> Result<Complex64> {
    state.evaluate(&family.product(indices)?)
}

/// All partitions of `{0, …, n−1}`, blocks ascending, via restricted growth
/// strings.
pub fn set_partitions(n: usize) -> Result<Vec<Vec<Vec<usize>>>> {
    if !(1..=MAX_MOMENT).contains(&n) {
        return Err(Error::Argument(format!("set_partitions needs 1 <= n <= {MAX_MOMENT}, got {n}")));
    }
    let mut out = Vec::new();
    let mut a = vec![0usize; n];
    loop {
        let blocks = a.iter().max().map_or(0, |m| m + 1);
        let mut p = vec![Vec::new(); blocks];
        for (i, &b) in a.iter().enumerate() {
            p[b].push(i);
        }
        out.push(p);
        // next restricted growth string
        let mut i = n - 1;
        loop {
            if i == 0 {
                return Ok(out);
            }
            let max_prefix = a[..i].iter().max().copied().unwrap_or(0);
            if a[i] <= max_prefix {
                a[i] += 1;
                for v in &mut a[i + 1..] {
                    *v = 0;
                }
                break;
            }
            i -= 1;
        }
    }
}

/// One row of a moment table: the tuple prefix of length `n`.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentRow {
    pub n: usize,
    pub args: Vec<usize>,
    pub moment: Complex64,
    pub truncated: Complex64,
    /// `Σ` over proper partitions of `Π |ω^T(block)|`.
    pub scale: f64,
}

/// `ωₙ` and `ω^Tₙ` for every prefix of `args`, from the implicit relation
/// `ωₙ = Σ_partitions Π ω^T(blocks)`.
pub fn truncated_moments<S: StateFunctional>(
    state: &S,
    family: &ObservableFamily,
    args: &[usize],
) -> Result<Vec<MomentRow>> {
    let n_max = args.len();
    if !(1..=MAX_MOMENT).contains(&n_max) {
        return Err(Error::Argument(format!("moment order must be in 1..={MAX_MOMENT}, got {n_max}")));
    }
    let partitions: Vec<_> = (1..=n_max).map(set_partitions).collect::<Result<_>>()?;
    let mut moments: HashMap<u32, Complex64> = HashMap::new();
    let mut truncated: HashMap<u32, (Complex64, f64)> = HashMap::new();
    // Subsets in order of size so that blocks are resolved first.
    let mut masks: Vec<u32> = (1..(1u32 << n_max)).collect();
    masks.sort_by_key(|m| (m.count_ones(), *m));
    for mask in masks {
        let members: Vec<usize> = (0..n_max).filter(|p| mask & (1 << p) != 0).collect();
        let indices: Vec<usize> = members.iter().map(|&p| args[p]).collect();
        let w = n_point(state, family, &indices)?;
        moments.insert(mask, w);
        let mut sum = Complex64::new(0.0, 0.0);
        let mut scale = 0.0;
        for part in &partitions[members.len() - 1] {
            if part.len() == 1 {
                continue;
            }
            let mut prod = Complex64::new(1.0, 0.0);
            let mut size = 1.0;
            for block in part {
                let sub = block.iter().fold(0u32, |m, &k| m | (1 << members[k]));
                let t = truncated[&sub].0;
                prod *= t;
                size *= t.norm();
            }
            sum += prod;
            scale += size;
        }
        truncated.insert(mask, (w - sum, scale));
    }
    Ok((1..=n_max)
        .map(|n| {
            let mask = (1u32 << n) - 1;
            let (t, scale) = truncated[&mask];
            MomentRow { n, args: args[..n].to_vec(), moment: moments[&mask], truncated: t, scale }
        })
        .collect())
}

/// Outcome of [`check_affine_quasifree`].
#[derive(Debug, Clone, PartialEq)]
pub struct QuasiFreeReport {
    pub checked: usize,
    /// Largest `|ω^Tₙ| / max(1, scale)` over `n > 2`.
    pub max_ratio: f64,
    pub worst: Option<MomentRow>,
    pub passed: bool,
}

/// Relative tolerance for vanishing higher truncated moments.
pub const QUASIFREE_TOLERANCE: f64 = 1e-8;

/// Checks `ω^Tₙ = 0` for `2 < n ≤ len(tuple)` on every sample tuple.
pub fn check_affine_quasifree<S: StateFunctional>(
    state: &S,
    family: &ObservableFamily,
    tuples: &[Vec<usize>],
) -> Result<QuasiFreeReport> {
    let mut report = QuasiFreeReport { checked: 0, max_ratio: 0.0, worst: None, passed: true };
    for args in tuples {
        for row in truncated_moments(state, family, args)? {
            if row.n <= 2 {
                continue;
            }
            report.checked += 1;
            let ratio = row.truncated.norm() / row.scale.max(row.moment.norm()).max(1.0);
            if ratio > report.max_ratio || report.worst.is_none() {
                report.max_ratio = report.max_ratio.max(ratio);
                report.worst = Some(row);
            }
        }
    }
    report.passed = report.max_ratio <= QUASIFREE_TOLERANCE;
    Ok(report)
}
