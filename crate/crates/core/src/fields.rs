//! Real sections over the lattice, the affine Klein–Gordon operator
//! `P = P_V + J`, its formal adjoint, and retarded/advanced Green operators
//! realized by explicit leapfrog stepping.
//!
//! Conventions:
//! * `P_V` is evaluated on interior slices `[1, n_t − 2]` only; its value on the
//!   two boundary slices is zero.
//! * Green operators accept sources supported in the interior slices.
//! * "Compactly supported" sections (inputs of the formal adjoint, the
//!   inhomogeneity `J`) live in `[2, n_t − 3]`.

use std::ops::{Add, Mul, Neg, Sub};

use crate::error::{Error, Result};
use crate::lattice::{Lattice, Site, SiteSet};

/// A real scalar section, indexed by `(t, x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Section {
    lattice: Lattice,
    values: Vec<f64>,
}

impl Section {
    pub fn zeros(lattice: &Lattice) -> Self {
        Self { lattice: *lattice, values: vec![0.0; lattice.num_sites()] }
    }

    pub fn delta(lattice: &Lattice, t: usize, x: usize) -> Result<Self> {
        lattice.check_site(t, x)?;
        let mut s = Self::zeros(lattice);
        s.set(t, x, 1.0);
        Ok(s)
    }

    pub fn from_fn(lattice: &Lattice, f: impl Fn(usize, usize) -> f64) -> Self {
        let mut s = Self::zeros(lattice);
        for t in 0..lattice.n_t() {
            for x in 0..lattice.n_x() {
                s.values[lattice.index(t, x)] = f(t, x);
            }
        }
        s
    }

    pub fn from_values(lattice: &Lattice, values: Vec<f64>) -> Result<Self> {
        if values.len() != lattice.num_sites() {
            return Err(Error::DimensionMismatch { expected: lattice.num_sites(), found: values.len() });
        }
        Ok(Self { lattice: *lattice, values })
    }

    /// Builds a section from `(t, x, value)` triples; repeated sites accumulate.
    pub fn from_triples(lattice: &Lattice, triples: &[(usize, usize, f64)]) -> Result<Self> {
        let mut s = Self::zeros(lattice);
        for &(t, x, v) in triples {
            lattice.check_site(t, x)?;
            s.values[lattice.index(t, x)] += v;
        }
        Ok(s)
    }

    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, t: usize, x: usize) -> f64 {
        self.values[self.lattice.index(t, x)]
    }

    pub fn set(&mut self, t: usize, x: usize, value: f64) {
        let i = self.lattice.index(t, x);
        self.values[i] = value;
    }

    pub fn slice(&self, t: usize) -> &[f64] {
        let n = self.lattice.n_x();
        &self.values[t * n..(t + 1) * n]
    }

    pub fn slice_mut(&mut self, t: usize) -> &mut [f64] {
        let n = self.lattice.n_x();
        &mut self.values[t * n..(t + 1) * n]
    }

    /// Sites carrying a nonzero value.
    pub fn support(&self) -> SiteSet {
        let mut s = self.lattice.empty_set();
        for (i, &v) in self.values.iter().enumerate() {
            if v != 0.0 {
                s.insert(self.lattice.site(i));
            }
        }
        s
    }

    /// First and last slice with a nonzero value.
    pub fn time_extent(&self) -> Option<(usize, usize)> {
        let n = self.lattice.n_x();
        let first = (0..self.lattice.n_t()).find(|&t| self.values[t * n..(t + 1) * n].iter().any(|&v| v != 0.0))?;
        let last =
            (0..self.lattice.n_t()).rev().find(|&t| self.values[t * n..(t + 1) * n].iter().any(|&v| v != 0.0))?;
        Some((first, last))
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }

    /// Support within `[lo, hi]` (empty support qualifies).
    pub fn supported_in(&self, lo: usize, hi: usize) -> bool {
        self.time_extent().is_none_or(|(a, b)| a >= lo && b <= hi)
    }

    pub fn is_compactly_supported(&self) -> bool {
        let r = self.lattice.compact_slices();
        self.supported_in(*r.start(), *r.end())
    }

    pub fn is_interior_supported(&self) -> bool {
        let r = self.lattice.interior_slices();
        self.supported_in(*r.start(), *r.end())
    }

    /// Weighted pairing `⟨a, b⟩ = Σ vol·a·b`.
    pub fn pairing(&self, other: &Section) -> Result<f64> {
        self.check_same(other)?;
        Ok(self.lattice.vol() * self.values.iter().zip(&other.values).map(|(a, b)| a * b).sum::<f64>())
    }

    /// `Σ vol·a`.
    pub fn integral(&self) -> f64 {
        self.lattice.vol() * self.values.iter().sum::<f64>()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Pointwise product.
    pub fn hadamard(&self, other: &Section) -> Result<Section> {
        self.check_same(other)?;
        Ok(self.zip_with(other, |a, b| a * b))
    }

    /// Keeps the slices for which `keep(t)` holds, zeroing the rest.
    pub fn mask_slices(&self, keep: impl Fn(usize) -> bool) -> Section {
        let mut out = self.clone();
        for t in 0..self.lattice.n_t() {
            if !keep(t) {
                out.slice_mut(t).fill(0.0);
            }
        }
        out
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Section {
        Section { lattice: self.lattice, values: self.values.iter().map(|&v| f(v)).collect() }
    }

    pub fn check_same(&self, other: &Section) -> Result<()> {
        if self.lattice == other.lattice {
            Ok(())
        } else {
            Err(Error::LatticeMismatch)
        }
    }

    fn zip_with(&self, other: &Section, f: impl Fn(f64, f64) -> f64) -> Section {
        assert_eq!(self.lattice, other.lattice, "sections on different lattices");
        Section {
            lattice: self.lattice,
            values: self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect(),
        }
    }
}

impl Add for &Section {
    type Output = Section;
    fn add(self, rhs: &Section) -> Section {
        self.zip_with(rhs, |a, b| a + b)
    }
}

impl Sub for &Section {
    type Output = Section;
    fn sub(self, rhs: &Section) -> Section {
        self.zip_with(rhs, |a, b| a - b)
    }
}

impl Neg for &Section {
    type Output = Section;
    fn neg(self) -> Section {
        self.map(|v| -v)
    }
}

impl Mul<&Section> for f64 {
    type Output = Section;
    fn mul(self, rhs: &Section) -> Section {
        rhs.map(|v| self * v)
    }
}

/// The symmetric discrete Klein–Gordon operator
/// `(P_V u)(t,x) = ∂²_t u − Δ_x u + m²u` with central second differences.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KleinGordon {
    lattice: Lattice,
}

impl KleinGordon {
    pub fn new(lattice: &Lattice) -> Self {
        Self { lattice: *lattice }
    }

    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    /// `P_V u` on interior slices, zero on the two boundary slices.
    pub fn apply(&self, u: &Section) -> Result<Section> {
        self.check(u)?;
        let l = &self.lattice;
        let mut out = Section::zeros(l);
        let (idt2, m2) = (1.0 / (l.dt() * l.dt()), l.mass() * l.mass());
        for t in l.interior_slices() {
            let (prev, cur, next) = (u.slice(t - 1), u.slice(t), u.slice(t + 1));
            let lap = self.laplacian(cur);
            let row = out.slice_mut(t);
            for x in 0..l.n_x() {
                row[x] = (next[x] - 2.0 * cur[x] + prev[x]) * idt2 - lap[x] + m2 * cur[x];
            }
        }
        Ok(out)
    }

    /// Retarded Green operator `G⁺`: the solution of `P_V u = h` on interior
    /// slices vanishing on slices 0 and 1, by forward recursion.
    pub fn retarded(&self, h: &Section) -> Result<Section> {
        self.check_source(h)?;
        let l = &self.lattice;
        let mut u = Section::zeros(l);
        for t in l.interior_slices() {
            let next = self.step(u.slice(t - 1), u.slice(t), h.slice(t));
            u.slice_mut(t + 1).copy_from_slice(&next);
        }
        Ok(u)
    }

    /// Advanced Green operator `G⁻`: vanishes on the last two slices,
    /// backward recursion.
    pub fn advanced(&self, h: &Section) -> Result<Section> {
        self.check_source(h)?;
        let l = &self.lattice;
        let mut u = Section::zeros(l);
        for t in l.interior_slices().rev() {
            let prev = self.step(u.slice(t + 1), u.slice(t), h.slice(t));
            u.slice_mut(t - 1).copy_from_slice(&prev);
        }
        Ok(u)
    }

    /// Causal propagator `G = G⁺ − G⁻`.
    pub fn causal(&self, h: &Section) -> Result<Section> {
        Ok(&self.retarded(h)? - &self.advanced(h)?)
    }

    /// One leapfrog step: `far = 2·cur − near + dt²(Δ cur − m² cur + h)`.
    pub(crate) fn step(&self, near: &[f64], cur: &[f64], h: &[f64]) -> Vec<f64> {
        let l = &self.lattice;
        let (dt2, m2) = (l.dt() * l.dt(), l.mass() * l.mass());
        let lap = self.laplacian(cur);
        (0..l.n_x()).map(|x| 2.0 * cur[x] - near[x] + dt2 * (lap[x] - m2 * cur[x] + h[x])).collect()
    }

    /// Homogeneous leapfrog step.
    pub fn step_free(&self, near: &[f64], cur: &[f64]) -> Vec<f64> {
        self.step(near, cur, &vec![0.0; near.len()])
    }

    fn laplacian(&self, u: &[f64]) -> Vec<f64> {
        let n = u.len();
        let idx2 = 1.0 / (self.lattice.dx() * self.lattice.dx());
        (0..n).map(|x| (u[(x + 1) % n] - 2.0 * u[x] + u[(x + n - 1) % n]) * idx2).collect()
    }

    fn check(&self, u: &Section) -> Result<()> {
        if u.lattice() == &self.lattice {
            Ok(())
        } else {
            Err(Error::LatticeMismatch)
        }
    }

    fn check_source(&self, h: &Section) -> Result<()> {
        self.check(h)?;
        if h.is_interior_supported() {
            Ok(())
        } else {
            Err(Error::Support(format!(
                "Green operator source touches a boundary slice (support {:?}, interior [1, {}])",
                h.time_extent(),
                self.lattice.n_t() - 2
            )))
        }
    }
}

/// Affine operator `P(s) = P_V(s) + J` with compactly supported inhomogeneity `J`.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineOperator {
    linear: KleinGordon,
    source: Section,
}

impl AffineOperator {
    pub fn new(source: Section) -> Result<Self> {
        if !source.is_compactly_supported() {
            return Err(Error::Support(format!(
                "inhomogeneity must be supported in slices [2, {}], found {:?}",
                source.lattice().n_t() - 3,
                source.time_extent()
            )));
        }
        Ok(Self { linear: KleinGordon::new(source.lattice()), source })
    }

    pub fn homogeneous(lattice: &Lattice) -> Self {
        Self { linear: KleinGordon::new(lattice), source: Section::zeros(lattice) }
    }

    pub fn lattice(&self) -> &Lattice {
        self.linear.lattice()
    }

    pub fn linear(&self) -> &KleinGordon {
        &self.linear
    }

    pub fn source(&self) -> &Section {
        &self.source
    }

    /// `P(s) = P_V(s) + J`, on interior slices.
    pub fn apply(&self, s: &Section) -> Result<Section> {
        Ok(&self.linear.apply(s)? + &self.source)
    }

    /// Formal adjoint `P*(h)` with reference section `ŝ_ref ≡ 0`: constant part
    /// `h·J`, linear part `P_V h`.
    pub fn formal_adjoint(&self, h: &Section) -> Result<DualObservable> {
        self.source.check_same(h)?;
        if !h.is_compactly_supported() {
            return Err(Error::Support(format!(
                "formal adjoint needs h supported in [2, n_t-3], found {:?}",
                h.time_extent()
            )));
        }
        Ok(DualObservable { constant: h.hadamard(&self.source)?, linear: self.linear.apply(h)? })
    }

    /// A solution of `P(ŝ) = 0`: `ŝ* = −G⁺(J)`, residual-checked.
    pub fn solve_reference(&self) -> Result<Section> {
        let s = -&self.linear.retarded(&self.source)?;
        let residual = self.apply(&s)?.mask_slices(|t| self.lattice().interior_slices().contains(&t)).max_abs();
        let tolerance = 1e-9 * self.source.max_abs().max(1.0);
        if residual > tolerance {
            return Err(Error::Residual { residual, tolerance });
        }
        Ok(s)
    }
}

/// A compactly supported section of the vector-dual bundle, `φ(s) = c + lin·s`
/// pointwise in the global chart.
#[derive(Debug, Clone, PartialEq)]
pub struct DualObservable {
    pub constant: Section,
    pub linear: Section,
}

impl DualObservable {
    pub fn new(constant: Section, linear: Section) -> Result<Self> {
        constant.check_same(&linear)?;
        Ok(Self { constant, linear })
    }

    pub fn zero(lattice: &Lattice) -> Self {
        Self { constant: Section::zeros(lattice), linear: Section::zeros(lattice) }
    }

    /// `a·𝟙`: constant part only.
    pub fn scalar(a: Section) -> Self {
        let linear = Section::zeros(a.lattice());
        Self { constant: a, linear }
    }

    /// `⟨h, · − ŝ⟩`.
    pub fn centered(h: &Section, s_hat: &Section) -> Result<Self> {
        Ok(Self { constant: -&h.hadamard(s_hat)?, linear: h.clone() })
    }

    pub fn lattice(&self) -> &Lattice {
        self.constant.lattice()
    }

    /// Pointwise evaluation `φ(s)` as a section.
    pub fn evaluate(&self, s: &Section) -> Result<Section> {
        Ok(&self.constant + &self.linear.hadamard(s)?)
    }

    /// The local affine functional `F_φ(s) = Σ vol·φ(s)`.
    pub fn functional(&self, s: &Section) -> Result<f64> {
        Ok(self.evaluate(s)?.integral())
    }

    pub fn support(&self) -> SiteSet {
        self.constant.support().union(&self.linear.support())
    }

    pub fn time_extent(&self) -> Option<(usize, usize)> {
        self.support().time_extent()
    }

    pub fn supported_in(&self, lo: usize, hi: usize) -> bool {
        self.constant.supported_in(lo, hi) && self.linear.supported_in(lo, hi)
    }

    /// Element of `Triv`: zero linear part and vanishing integral.
    pub fn is_trivial(&self, tolerance: f64) -> bool {
        self.linear.max_abs() <= tolerance && self.constant.integral().abs() <= tolerance
    }

    pub fn is_zero(&self) -> bool {
        self.constant.is_zero() && self.linear.is_zero()
    }

    pub fn contains(&self, site: Site) -> bool {
        self.support().contains(site)
    }

    pub fn scale(&self, a: f64) -> Self {
        Self { constant: a * &self.constant, linear: a * &self.linear }
    }
}

impl Add for &DualObservable {
    type Output = DualObservable;
    fn add(self, rhs: &DualObservable) -> DualObservable {
        DualObservable { constant: &self.constant + &rhs.constant, linear: &self.linear + &rhs.linear }
    }
}

impl Sub for &DualObservable {
    type Output = DualObservable;
    fn sub(self, rhs: &DualObservable) -> DualObservable {
        DualObservable { constant: &self.constant - &rhs.constant, linear: &self.linear - &rhs.linear }
    }
}

/// Forward time difference `Q(h)(t) = h(t+1) − h(t)`; `Σ vol·Q(h) = 0` when `h`
/// vanishes on the first and last slice.
pub fn time_divergence(h: &Section) -> Section {
    let l = *h.lattice();
    Section::from_fn(&l, |t, x| if t + 1 < l.n_t() { h.get(t + 1, x) - h.get(t, x) } else { 0.0 })
}
