//! Classical phase space of the affine theory.
//!
//! A class `[φ]` in `(Γ₀(A†)/Triv)/P*[Γ₀(V)]` is represented by a
//! [`PhaseVector`]: the number `I′ = Σ vol·φ(ŝ*)` together with the Cauchy data
//! of the homogeneous solution `G(φ_V)` at the reference slices `(t*, t*+1)`.
//! The pair is a complete invariant of the class:
//!
//! * adding `P*(h)` leaves `G(φ_V)` unchanged since `G∘P_V = 0`, and shifts
//!   `I′` by `Σ vol·h·(J + P_V ŝ*) = 0`;
//! * adding a `Triv` element changes neither component;
//! * if two observables share both components, `h₀ = G⁺(Δφ_V)` is compactly
//!   supported, and `Δφ − P*(h₀)` is in `Triv`.
//!
//! Observables are admissible when both parts are supported in the interior
//! slices `[1, n_t − 2]`, so that `P*(h)` of every compactly supported `h` is
//! admissible too.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::fields::{AffineOperator, DualObservable, KleinGordon, Section};
use crate::lattice::{Lattice, Region, RegionKind};

/// Values of a homogeneous solution on the slices `t*` and `t* + 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct CauchyData {
    pub u: Vec<f64>,
    pub u_next: Vec<f64>,
}

impl CauchyData {
    pub fn zeros(n_x: usize) -> Self {
        Self { u: vec![0.0; n_x], u_next: vec![0.0; n_x] }
    }

    /// Data vector `(u, u_next)` of length `2·n_x`.
    pub fn to_vec(&self) -> Vec<f64> {
        self.u.iter().chain(&self.u_next).copied().collect()
    }

    pub fn from_vec(v: &[f64]) -> Self {
        let n = v.len() / 2;
        Self { u: v[..n].to_vec(), u_next: v[n..].to_vec() }
    }

    pub fn n_x(&self) -> usize {
        self.u.len()
    }

    pub fn max_abs(&self) -> f64 {
        self.u.iter().chain(&self.u_next).fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn is_zero(&self) -> bool {
        self.u.iter().chain(&self.u_next).all(|&v| v == 0.0)
    }

    pub fn sub(&self, other: &CauchyData) -> CauchyData {
        Self {
            u: self.u.iter().zip(&other.u).map(|(a, b)| a - b).collect(),
            u_next: self.u_next.iter().zip(&other.u_next).map(|(a, b)| a - b).collect(),
        }
    }

    pub fn add(&self, other: &CauchyData) -> CauchyData {
        Self {
            u: self.u.iter().zip(&other.u).map(|(a, b)| a + b).collect(),
            u_next: self.u_next.iter().zip(&other.u_next).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn scale(&self, a: f64) -> CauchyData {
        Self { u: self.u.iter().map(|v| a * v).collect(), u_next: self.u_next.iter().map(|v| a * v).collect() }
    }
}

/// Canonical form `(I′, Cauchy data)` of a phase-space class.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseVector {
    pub i_prime: f64,
    pub data: CauchyData,
}

impl PhaseVector {
    pub fn zero(n_x: usize) -> Self {
        Self { i_prime: 0.0, data: CauchyData::zeros(n_x) }
    }

    /// The null generator `e₀`: `I′ = 1`, no data.
    pub fn null_generator(n_x: usize) -> Self {
        Self { i_prime: 1.0, data: CauchyData::zeros(n_x) }
    }

    /// Coordinates `(I′, u, u_next)`.
    pub fn coordinates(&self) -> Vec<f64> {
        std::iter::once(self.i_prime).chain(self.data.to_vec()).collect()
    }

    pub fn from_coordinates(c: &[f64]) -> Self {
        Self { i_prime: c[0], data: CauchyData::from_vec(&c[1..]) }
    }

    pub fn sub(&self, other: &PhaseVector) -> PhaseVector {
        Self { i_prime: self.i_prime - other.i_prime, data: self.data.sub(&other.data) }
    }

    pub fn add(&self, other: &PhaseVector) -> PhaseVector {
        Self { i_prime: self.i_prime + other.i_prime, data: self.data.add(&other.data) }
    }

    pub fn scale(&self, a: f64) -> PhaseVector {
        Self { i_prime: a * self.i_prime, data: self.data.scale(a) }
    }

    pub fn max_abs(&self) -> f64 {
        self.data.max_abs().max(self.i_prime.abs())
    }

    /// Null-space membership, `‖data‖∞ ≤ 1e-10`.
    pub fn is_null(&self) -> bool {
        self.is_null_with_scale(1.0)
    }

    pub fn is_null_with_scale(&self, scale: f64) -> bool {
        self.data.max_abs() <= 1e-10 * scale
    }
}

/// Phase space of one affine theory, with its reference solution `ŝ* = −G⁺(J)`.
#[derive(Debug, Clone)]
pub struct PhaseSpace {
    op: AffineOperator,
    reference: Section,
}

impl PhaseSpace {
    pub fn new(op: AffineOperator) -> Result<Self> {
        let reference = op.solve_reference()?;
        Ok(Self { op, reference })
    }

    pub fn lattice(&self) -> &Lattice {
        self.op.lattice()
    }

    pub fn operator(&self) -> &AffineOperator {
        &self.op
    }

    pub fn kg(&self) -> &KleinGordon {
        self.op.linear()
    }

    /// The reference solution `ŝ*`.
    pub fn reference(&self) -> &Section {
        &self.reference
    }

    fn check_observable(&self, phi: &DualObservable) -> Result<()> {
        if phi.lattice() != self.lattice() {
            return Err(Error::LatticeMismatch);
        }
        let n_t = self.lattice().n_t();
        if !phi.supported_in(1, n_t - 2) {
            return Err(Error::Support(format!(
                "observable must be supported in slices [1, {}], found {:?}",
                n_t - 2,
                phi.time_extent()
            )));
        }
        Ok(())
    }

    /// Cauchy data of the homogeneous solution `G(h)` at `(t*, t*+1)`.
    pub fn linear_class(&self, h: &Section) -> Result<CauchyData> {
        let w = self.kg().causal(h)?;
        let t = self.lattice().reference_slice();
        Ok(CauchyData { u: w.slice(t).to_vec(), u_next: w.slice(t + 1).to_vec() })
    }

    pub fn classify(&self, phi: &DualObservable) -> Result<PhaseVector> {
        self.check_observable(phi)?;
        Ok(PhaseVector { i_prime: phi.functional(&self.reference)?, data: self.linear_class(&phi.linear)? })
    }

    /// `τ([φ],[ψ]) = Σ vol·φ_V·G(ψ_V)`, evaluated as the antisymmetrized sum
    /// `½(⟨φ_V, Gψ_V⟩ − ⟨ψ_V, Gφ_V⟩)` (equal by skew-adjointness of `G`).
    pub fn tau(&self, phi: &DualObservable, psi: &DualObservable) -> Result<f64> {
        self.check_observable(phi)?;
        self.check_observable(psi)?;
        let (f, g) = (&phi.linear, &psi.linear);
        if f.is_zero() || g.is_zero() {
            return Ok(0.0);
        }
        let fg = f.pairing(&self.kg().causal(g)?)?;
        let gf = g.pairing(&self.kg().causal(f)?)?;
        Ok(0.5 * (fg - gf))
    }

    /// `τ` from Cauchy data alone, by the conserved discrete Wronskian:
    /// `τ = (dx/dt)·Σ_x (u₁(t*+1)·u₂(t*) − u₁(t*)·u₂(t*+1))`.
    pub fn tau_canonical(&self, a: &PhaseVector, b: &PhaseVector) -> Result<f64> {
        let n = self.lattice().n_x();
        for pv in [a, b] {
            if pv.data.n_x() != n || pv.data.u_next.len() != n {
                return Err(Error::DimensionMismatch { expected: n, found: pv.data.n_x() });
            }
        }
        Ok(wronskian(self.lattice(), &a.data, &b.data))
    }

    /// `η(h) = [⟨h, · − ŝ*⟩]`.
    pub fn eta(&self, h: &Section) -> Result<PhaseVector> {
        let phi = DualObservable::centered(h, &self.reference)?;
        self.classify(&phi)
    }

    /// `η⁻¹([φ]) = [φ_V]`, as Cauchy data of `G(φ_V)`.
    pub fn eta_inv(&self, phi: &DualObservable) -> Result<CauchyData> {
        self.check_observable(phi)?;
        self.linear_class(&phi.linear)
    }

    /// The full homogeneous solution with the given data at `(t*, t*+1)`.
    pub fn solution(&self, data: &CauchyData) -> Result<Section> {
        let l = *self.lattice();
        if data.n_x() != l.n_x() {
            return Err(Error::DimensionMismatch { expected: l.n_x(), found: data.n_x() });
        }
        let kg = self.kg();
        let t0 = l.reference_slice();
        let mut w = Section::zeros(&l);
        w.slice_mut(t0).copy_from_slice(&data.u);
        w.slice_mut(t0 + 1).copy_from_slice(&data.u_next);
        for t in (t0 + 1)..(l.n_t() - 1) {
            let next = kg.step_free(w.slice(t - 1), w.slice(t));
            w.slice_mut(t + 1).copy_from_slice(&next);
        }
        for t in (1..=t0).rev() {
            let prev = kg.step_free(w.slice(t + 1), w.slice(t));
            w.slice_mut(t - 1).copy_from_slice(&prev);
        }
        Ok(w)
    }

    /// A linear part `h`, supported on two adjacent slices at `n_t/2`, with
    /// `G(h)` equal to the solution carrying `data`: `h = P_V(χ·W)` for a
    /// sharp step `χ`.
    pub fn representative(&self, data: &CauchyData) -> Result<Section> {
        let w = self.solution(data)?;
        let tc = self.lattice().n_t() / 2;
        let chi_w = w.mask_slices(|t| t >= tc);
        let h = self.kg().apply(&chi_w)?;
        Ok(h.mask_slices(|t| t + 1 == tc || t == tc))
    }

    /// Moves `φ` to an equivalent representative supported strictly inside the
    /// time window `region`.
    ///
    /// The linear part is split at `t_mid`; the late piece is cancelled by
    /// `−χ·G⁻`, the early piece by `−(1−χ)·G⁺`, with `χ` the step at `t_mid`.
    /// The result lives on slices `t_mid − 1` and `t_mid`. The scalar part is
    /// replaced by a slice bump at `t_mid` carrying the same integral.
    pub fn timeslice_deform(&self, phi: &DualObservable, region: &Region) -> Result<DualObservable> {
        self.check_observable(phi)?;
        let (t_a, t_b) = match region.kind() {
            RegionKind::TimeWindow { t_a, t_b } => (t_a, t_b),
            RegionKind::General => return Err(Error::Argument("deformation target must be a time window".into())),
        };
        if t_b < t_a + 4 {
            return Err(Error::WindowTooNarrow { t_a, t_b });
        }
        let l = *self.lattice();
        let kg = self.kg();
        let t_mid = (t_a + t_b) / 2;

        let late = phi.linear.mask_slices(|t| t + 1 >= t_mid);
        let early = phi.linear.mask_slices(|t| t + 1 < t_mid);
        let h_late = kg.advanced(&late)?.mask_slices(|t| t >= t_mid);
        let h_early = kg.retarded(&early)?.mask_slices(|t| t < t_mid);
        let h = -&(&h_late + &h_early);

        let shift = self.op.formal_adjoint(&h)?;
        let moved = phi + &shift;

        let keep = |t: usize| t + 1 == t_mid || t == t_mid;
        let leak = moved.linear.mask_slices(|t| !keep(t)).max_abs();
        let scale = 1f64.max(phi.linear.max_abs()).max(shift.linear.max_abs());
        if leak > 1e-12 * scale {
            return Err(Error::Support(format!("deformation leaks {leak:.3e} outside the window")));
        }
        let linear = moved.linear.mask_slices(keep);

        let height = moved.constant.values().iter().sum::<f64>() / l.n_x() as f64;
        let constant = Section::from_fn(&l, |t, _| if t == t_mid { height } else { 0.0 });
        Ok(DualObservable { constant, linear })
    }

    /// Checks that every generator of a spanning family of classes has a
    /// representative strictly inside `region`.
    pub fn timeslice_check(&self, region: &Region) -> TimeSliceReport {
        let family = self.spanning_family();
        let mut report = TimeSliceReport { generators: family.len(), ..TimeSliceReport::default() };
        let Some((t_a, t_b)) = region.time_window() else {
            report.diagnostic = "region is not a time window".into();
            return report;
        };
        if region.sites().is_empty() || !region.contains_cauchy_slice() {
            report.diagnostic = "region contains no Cauchy slice".into();
            return report;
        }
        let mut ok = true;
        for phi in &family {
            match self.timeslice_deform(phi, region).and_then(|d| Ok((self.classify(phi)?, self.classify(&d)?, d))) {
                Ok((before, after, d)) => {
                    report.max_leakage = report.max_leakage.max(d.support().difference(region.sites()).len());
                    if d.time_extent().is_some_and(|(lo, hi)| lo <= t_a || hi >= t_b) {
                        report.max_leakage = report.max_leakage.max(1);
                    }
                    report.max_delta = report.max_delta.max(before.sub(&after).max_abs() / before.max_abs().max(1.0));
                }
                Err(e) => {
                    ok = false;
                    report.diagnostic = e.to_string();
                }
            }
        }
        report.surjective = ok && report.max_leakage == 0 && report.max_delta <= 1e-9;
        report.injective = true;
        report
    }

    /// Delta linear parts on two adjacent slices, plus one scalar generator of
    /// the null space; their classes span `E`.
    pub fn spanning_family(&self) -> Vec<DualObservable> {
        let l = *self.lattice();
        let mut out = Vec::with_capacity(2 * l.n_x() + 1);
        for t in [2, 3] {
            for x in 0..l.n_x() {
                let lin = Section::delta(&l, t, x).expect("site in range");
                out.push(DualObservable { constant: Section::zeros(&l), linear: lin });
            }
        }
        out.push(DualObservable::scalar(Section::delta(&l, 2, 0).expect("site in range")));
        out
    }
}

/// Diagnostic of a time-slice check.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TimeSliceReport {
    pub generators: usize,
    /// Largest number of output sites outside the open window.
    pub max_leakage: usize,
    /// Largest relative canonical-form change.
    pub max_delta: f64,
    pub surjective: bool,
    pub injective: bool,
    pub diagnostic: String,
}

impl TimeSliceReport {
    pub fn is_iso(&self) -> bool {
        self.surjective && self.injective
    }
}

fn wronskian(l: &Lattice, a: &CauchyData, b: &CauchyData) -> f64 {
    let s: f64 = (0..l.n_x()).map(|x| a.u_next[x] * b.u[x] - a.u[x] * b.u_next[x]).sum();
    l.dx() / l.dt() * s
}

/// Evolves Cauchy data given on `(from, from+1)` of a homogeneous solution to
/// `(to, to+1)`.
fn propagate(kg: &KleinGordon, data: &CauchyData, from: usize, to: usize) -> CauchyData {
    let (mut a, mut b) = (data.u.clone(), data.u_next.clone());
    if to >= from {
        for _ in from..to {
            let c = kg.step_free(&a, &b);
            a = std::mem::replace(&mut b, c);
        }
    } else {
        for _ in to..from {
            let c = kg.step_free(&b, &a);
            b = std::mem::replace(&mut a, c);
        }
    }
    CauchyData { u: a, u_next: b }
}

/// A time-window embedding of one theory into another with the same spatial
/// geometry: source slice `t` maps to target slice `t + offset`.
#[derive(Debug, Clone)]
pub struct RegionEmbedding {
    source: PhaseSpace,
    target: PhaseSpace,
    offset: usize,
}

impl RegionEmbedding {
    pub fn new(source: PhaseSpace, target: PhaseSpace, offset: usize) -> Result<Self> {
        let (l1, l2) = (*source.lattice(), *target.lattice());
        if !l1.same_geometry(&l2) {
            return Err(Error::LatticeMismatch);
        }
        if offset + l1.n_t() > l2.n_t() {
            return Err(Error::Argument(format!(
                "window [{offset}, {}] exceeds target with {} slices",
                offset + l1.n_t() - 1,
                l2.n_t()
            )));
        }
        let j1 = source.operator().source();
        let j2 = target.operator().source();
        for t in 0..l1.n_t() {
            if j1.slice(t) != j2.slice(t + offset) {
                return Err(Error::Argument(format!("source terms disagree on source slice {t}")));
            }
        }
        Ok(Self { source, target, offset })
    }

    /// Embeds the restriction of `target` to the window `[t_a, t_b]`.
    pub fn window(target: &PhaseSpace, t_a: usize, t_b: usize) -> Result<Self> {
        let l2 = *target.lattice();
        target.lattice().window(t_a, t_b)?;
        let l1 = l2.with_n_t(t_b - t_a + 1)?;
        let j2 = target.operator().source();
        let j1 = Section::from_fn(&l1, |t, x| j2.get(t + t_a, x));
        let source = PhaseSpace::new(AffineOperator::new(j1)?)?;
        Self::new(source, target.clone(), t_a)
    }

    pub fn source(&self) -> &PhaseSpace {
        &self.source
    }

    pub fn target(&self) -> &PhaseSpace {
        &self.target
    }

    pub fn offset(&self) -> usize {
        self.offset
    }

    /// The image time window in the target.
    pub fn image(&self) -> Region {
        let n = self.source.lattice().n_t();
        self.target.lattice().window(self.offset, self.offset + n - 1).expect("image inside target")
    }

    /// Extension by zero of a source section.
    pub fn push_section(&self, s: &Section) -> Result<Section> {
        if s.lattice() != self.source.lattice() {
            return Err(Error::LatticeMismatch);
        }
        let n1 = self.source.lattice().n_t();
        Ok(Section::from_fn(self.target.lattice(), |t, x| {
            if t >= self.offset && t < self.offset + n1 {
                s.get(t - self.offset, x)
            } else {
                0.0
            }
        }))
    }

    /// Restriction of a target section to the window.
    pub fn pull_section(&self, s: &Section) -> Result<Section> {
        if s.lattice() != self.target.lattice() {
            return Err(Error::LatticeMismatch);
        }
        Ok(Section::from_fn(self.source.lattice(), |t, x| s.get(t + self.offset, x)))
    }

    /// `f†_*(φ)`: extension by zero.
    pub fn pushforward(&self, phi: &DualObservable) -> Result<DualObservable> {
        Ok(DualObservable { constant: self.push_section(&phi.constant)?, linear: self.push_section(&phi.linear)? })
    }

    /// Restriction of a target observable supported inside the window.
    pub fn pullback(&self, phi: &DualObservable) -> Result<DualObservable> {
        let n1 = self.source.lattice().n_t();
        if !phi.supported_in(self.offset, self.offset + n1 - 1) {
            return Err(Error::Support(format!("observable support {:?} leaves the window", phi.time_extent())));
        }
        Ok(DualObservable { constant: self.pull_section(&phi.constant)?, linear: self.pull_section(&phi.linear)? })
    }

    /// The induced map on canonical coordinates `(I′, u, u_next)`:
    /// identity on `I′`, leapfrog transport of the data.
    pub fn class_map(&self) -> DMatrix<f64> {
        let n = self.source.lattice().n_x();
        let from = self.source.lattice().reference_slice() + self.offset;
        let to = self.target.lattice().reference_slice();
        let mut m = DMatrix::zeros(2 * n + 1, 2 * n + 1);
        m[(0, 0)] = 1.0;
        for j in 0..2 * n {
            let mut e = vec![0.0; 2 * n];
            e[j] = 1.0;
            let image = propagate(self.target.kg(), &CauchyData::from_vec(&e), from, to).to_vec();
            for (i, v) in image.into_iter().enumerate() {
                m[(i + 1, j + 1)] = v;
            }
        }
        m
    }

    /// Applies [`RegionEmbedding::class_map`] to a source class.
    pub fn push_class(&self, pv: &PhaseVector) -> PhaseVector {
        let from = self.source.lattice().reference_slice() + self.offset;
        let to = self.target.lattice().reference_slice();
        PhaseVector { i_prime: pv.i_prime, data: propagate(self.target.kg(), &pv.data, from, to) }
    }

    /// `other ∘ self`.
    pub fn then(&self, other: &RegionEmbedding) -> Result<RegionEmbedding> {
        if self.target.lattice() != other.source.lattice() {
            return Err(Error::LatticeMismatch);
        }
        RegionEmbedding::new(self.source.clone(), other.target.clone(), self.offset + other.offset)
    }

    /// Time-slice check for the embedding: every spanning target class is
    /// recovered by deforming into the image, pulling back and pushing forward
    /// (surjectivity); the class map is invertible and preserves `τ`
    /// (injectivity).
    pub fn is_iso_on_window(&self) -> TimeSliceReport {
        let image = self.image();
        let mut report = self.target.timeslice_check(&image);
        if !report.surjective {
            return report;
        }
        for phi in self.target.spanning_family() {
            let round = self
                .target
                .timeslice_deform(&phi, &image)
                .and_then(|d| self.pullback(&d))
                .and_then(|p| self.pushforward(&p))
                .and_then(|p| Ok((self.target.classify(&phi)?, self.target.classify(&p)?)));
            match round {
                Ok((a, b)) => report.max_delta = report.max_delta.max(a.sub(&b).max_abs() / a.max_abs().max(1.0)),
                Err(e) => {
                    report.surjective = false;
                    report.diagnostic = e.to_string();
                }
            }
        }
        report.surjective &= report.max_delta <= 1e-9;

        let m = self.class_map();
        let n = m.nrows();
        report.injective = m.clone().rank(1e-10) == n && {
            let g1 = canonical_gram(self.source.lattice());
            let g2 = canonical_gram(self.target.lattice());
            (m.transpose() * g2 * &m - &g1).amax() <= 1e-9 * g1.amax().max(1.0)
        };
        report
    }
}

/// Gram matrix of `τ` on the canonical coordinates `(I′, u, u_next)`.
pub fn canonical_gram(l: &Lattice) -> DMatrix<f64> {
    let n = l.n_x();
    let k = l.dx() / l.dt();
    let mut g = DMatrix::zeros(2 * n + 1, 2 * n + 1);
    for x in 0..n {
        // τ(u-impulse, u_next-impulse) = −dx/dt
        g[(1 + x, 1 + n + x)] = -k;
        g[(1 + n + x, 1 + x)] = k;
    }
    g
}
