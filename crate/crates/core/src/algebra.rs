//! CCR and CAR algebras over a finite presentation `(E, τ)`.
//!
//! Elements are stored in normal form: a map from index words in ascending
//! order (non-decreasing for bosons, strictly increasing for fermions) to
//! complex coefficients. Products are reduced by adjacent transpositions using
//!
//! * bosonic: `Ψ_j Ψ_i = Ψ_i Ψ_j − i·τ_ij·𝟏` for `j > i`;
//! * fermionic: `Ψ_j Ψ_i = −Ψ_i Ψ_j + τ_ij·𝟏` for `j > i`, `Ψ_i Ψ_i = ½τ_ii·𝟏`.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fields::{DualObservable, Section};
use crate::phase_space::{PhaseSpace, PhaseVector};

/// Largest monomial degree any operation will produce.
pub const DEGREE_CAP: usize = 12;

/// Coefficients below this magnitude are dropped.
pub const PRUNE: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Statistics {
    Bosonic,
    Fermionic,
}

#[derive(Debug)]
struct AlgebraData {
    statistics: Statistics,
    gram: DMatrix<f64>,
}

/// A CCR (bosonic) or CAR (fermionic) algebra with generators `Ψ_0 … Ψ_{d−1}`.
#[derive(Debug, Clone)]
pub struct Algebra {
    data: Arc<AlgebraData>,
}

impl PartialEq for Algebra {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.data, &other.data)
            || (self.data.statistics == other.data.statistics && self.data.gram == other.data.gram)
    }
}

impl Algebra {
    pub fn new(statistics: Statistics, gram: DMatrix<f64>) -> Result<Self> {
        if !gram.is_square() {
            return Err(Error::DimensionMismatch { expected: gram.nrows(), found: gram.ncols() });
        }
        let tol = 1e-12 * gram.amax().max(1.0);
        let defect = match statistics {
            Statistics::Bosonic => (&gram + gram.transpose()).amax(),
            Statistics::Fermionic => (&gram - gram.transpose()).amax(),
        };
        if defect > tol {
            return Err(Error::FormSymmetry(match statistics {
                Statistics::Bosonic => "antisymmetric",
                Statistics::Fermionic => "symmetric",
            }));
        }
        Ok(Self { data: Arc::new(AlgebraData { statistics, gram }) })
    }

    pub fn ccr(gram: DMatrix<f64>) -> Result<Self> {
        Self::new(Statistics::Bosonic, gram)
    }

    pub fn car(gram: DMatrix<f64>) -> Result<Self> {
        Self::new(Statistics::Fermionic, gram)
    }

    pub fn statistics(&self) -> Statistics {
        self.data.statistics
    }

    pub fn gram(&self) -> &DMatrix<f64> {
        &self.data.gram
    }

    pub fn dim(&self) -> usize {
        self.data.gram.nrows()
    }

    pub fn zero(&self) -> AlgebraElement {
        AlgebraElement { algebra: self.clone(), terms: BTreeMap::new() }
    }

    pub fn scalar(&self, c: Complex64) -> AlgebraElement {
        let mut x = self.zero();
        x.push(Vec::new(), c);
        x
    }

    pub fn one(&self) -> AlgebraElement {
        self.scalar(Complex64::new(1.0, 0.0))
    }

    pub fn generator(&self, i: usize) -> Result<AlgebraElement> {
        if i >= self.dim() {
            return Err(Error::Argument(format!("generator index {i} out of range {}", self.dim())));
        }
        let mut x = self.zero();
        x.push(vec![i], Complex64::new(1.0, 0.0));
        Ok(x)
    }

    /// `Σ c_i Ψ_i`.
    pub fn linear(&self, coeffs: &[f64]) -> Result<AlgebraElement> {
        if coeffs.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: coeffs.len() });
        }
        let mut x = self.zero();
        for (i, &c) in coeffs.iter().enumerate() {
            x.push(vec![i], Complex64::new(c, 0.0));
        }
        Ok(x)
    }

    /// Builds an element from arbitrary (not necessarily ordered) words.
    pub fn from_words(&self, words: &[(Vec<usize>, Complex64)]) -> Result<AlgebraElement> {
        let mut memo = HashMap::new();
        let mut out = self.zero();
        for (w, c) in words {
            if w.len() > DEGREE_CAP {
                return Err(Error::DegreeCap { degree: w.len(), cap: DEGREE_CAP });
            }
            if let Some(&bad) = w.iter().find(|&&i| i >= self.dim()) {
                return Err(Error::Argument(format!("generator index {bad} out of range {}", self.dim())));
            }
            for (nw, nc) in self.normal_form(w, &mut memo).iter() {
                out.accumulate(nw.clone(), c * nc);
            }
        }
        out.prune();
        Ok(out)
    }

    fn normal_form(&self, word: &[usize], memo: &mut NormalFormCache) -> Terms {
        if let Some(hit) = memo.get(word) {
            return hit.clone();
        }
        let fermionic = self.statistics() == Statistics::Fermionic;
        let descent = word.windows(2).position(|p| if fermionic { p[0] >= p[1] } else { p[0] > p[1] });
        let result = match descent {
            None => Arc::new(vec![(word.to_vec(), Complex64::new(1.0, 0.0))]),
            Some(p) => {
                let (j, i) = (word[p], word[p + 1]);
                let g = self.gram()[(i, j)];
                let mut contracted = word.to_vec();
                contracted.drain(p..p + 2);
                let mut acc: BTreeMap<Vec<usize>, Complex64> = BTreeMap::new();
                let mut add = |terms: &[(Vec<usize>, Complex64)], c: Complex64| {
                    for (w, v) in terms {
                        *acc.entry(w.clone()).or_default() += c * v;
                    }
                };
                if fermionic && i == j {
                    if g != 0.0 {
                        add(&self.normal_form(&contracted, memo), Complex64::new(0.5 * g, 0.0));
                    }
                } else {
                    let mut swapped = word.to_vec();
                    swapped.swap(p, p + 1);
                    let (sign, contraction) =
                        if fermionic { (-1.0, Complex64::new(g, 0.0)) } else { (1.0, Complex64::new(0.0, -g)) };
                    add(&self.normal_form(&swapped, memo), Complex64::new(sign, 0.0));
                    if g != 0.0 {
                        add(&self.normal_form(&contracted, memo), contraction);
                    }
                }
                Arc::new(acc.into_iter().collect())
            }
        };
        memo.insert(word.to_vec(), result.clone());
        result
    }
}

type Terms = Arc<Vec<(Vec<usize>, Complex64)>>;
type NormalFormCache = HashMap<Vec<usize>, Terms>;

/// An element of a CCR/CAR algebra in normal form.
#[derive(Debug, Clone)]
pub struct AlgebraElement {
    algebra: Algebra,
    terms: BTreeMap<Vec<usize>, Complex64>,
}

impl AlgebraElement {
    pub fn algebra(&self) -> &Algebra {
        &self.algebra
    }

    pub fn statistics(&self) -> Statistics {
        self.algebra.statistics()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&[usize], Complex64)> {
        self.terms.iter().map(|(w, c)| (w.as_slice(), *c))
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coefficient(&self, word: &[usize]) -> Complex64 {
        self.terms.get(word).copied().unwrap_or_default()
    }

    pub fn degree(&self) -> usize {
        self.terms.keys().map(Vec::len).max().unwrap_or(0)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    fn push(&mut self, word: Vec<usize>, c: Complex64) {
        if c.norm() >= PRUNE {
            *self.terms.entry(word).or_default() += c;
        }
    }

    fn accumulate(&mut self, word: Vec<usize>, c: Complex64) {
        *self.terms.entry(word).or_default() += c;
    }

    fn prune(&mut self) {
        self.terms.retain(|_, c| c.norm() >= PRUNE);
    }

    fn check_compatible(&self, other: &AlgebraElement) -> Result<()> {
        if self.statistics() != other.statistics() {
            return Err(Error::StatisticsMismatch);
        }
        if self.algebra != other.algebra {
            return Err(Error::Argument("elements belong to different algebras".into()));
        }
        Ok(())
    }

    pub fn add(&self, other: &AlgebraElement) -> Result<AlgebraElement> {
        self.check_compatible(other)?;
        let mut out = self.clone();
        for (w, c) in &other.terms {
            out.accumulate(w.clone(), *c);
        }
        out.prune();
        Ok(out)
    }

    pub fn sub(&self, other: &AlgebraElement) -> Result<AlgebraElement> {
        self.add(&other.scale(Complex64::new(-1.0, 0.0)))
    }

    pub fn scale(&self, a: Complex64) -> AlgebraElement {
        let mut out = self.algebra.zero();
        for (w, c) in &self.terms {
            out.push(w.clone(), a * c);
        }
        out
    }

    pub fn scale_real(&self, a: f64) -> AlgebraElement {
        self.scale(Complex64::new(a, 0.0))
    }

    pub fn mul(&self, other: &AlgebraElement) -> Result<AlgebraElement> {
        self.check_compatible(other)?;
        let degree = self.degree() + other.degree();
        if degree > DEGREE_CAP && !self.is_zero() && !other.is_zero() {
            return Err(Error::DegreeCap { degree, cap: DEGREE_CAP });
        }
        let mut memo = HashMap::new();
        let mut out = self.algebra.zero();
        for (a, ca) in &self.terms {
            for (b, cb) in &other.terms {
                let word: Vec<usize> = a.iter().chain(b).copied().collect();
                let c = ca * cb;
                for (nw, nc) in self.algebra.normal_form(&word, &mut memo).iter() {
                    out.accumulate(nw.clone(), c * nc);
                }
            }
        }
        out.prune();
        Ok(out)
    }

    /// Adjoint: words reversed, coefficients conjugated, re-ordered.
    pub fn star(&self) -> AlgebraElement {
        let words: Vec<_> =
            self.terms.iter().map(|(w, c)| (w.iter().rev().copied().collect::<Vec<_>>(), c.conj())).collect();
        self.algebra.from_words(&words).expect("reversal keeps degree and indices")
    }

    /// `xy − yx`.
    pub fn commutator(&self, other: &AlgebraElement) -> Result<AlgebraElement> {
        self.mul(other)?.sub(&other.mul(self)?)
    }

    /// `xy + yx`.
    pub fn anticommutator(&self, other: &AlgebraElement) -> Result<AlgebraElement> {
        self.mul(other)?.add(&other.mul(self)?)
    }

    /// Largest coefficient difference with `other`.
    pub fn distance(&self, other: &AlgebraElement) -> Result<f64> {
        let d = self.sub(other)?;
        Ok(d.terms.values().fold(0.0, |m, c| m.max(c.norm())))
    }

    pub fn max_coefficient(&self) -> f64 {
        self.terms.values().fold(0.0, |m, c| m.max(c.norm()))
    }

    /// Applies the homomorphism fixed by `images[i] = image of Ψ_i`.
    pub fn substitute(&self, images: &[AlgebraElement]) -> Result<AlgebraElement> {
        if images.len() != self.algebra.dim() {
            return Err(Error::DimensionMismatch { expected: self.algebra.dim(), found: images.len() });
        }
        let target = match images.first() {
            Some(x) => x.algebra.clone(),
            None => return Err(Error::Argument("empty generator set".into())),
        };
        let mut out = target.zero();
        for (w, c) in &self.terms {
            let mut prod = target.scalar(*c);
            for &i in w {
                prod = prod.mul(&images[i])?;
            }
            out = out.add(&prod)?;
        }
        Ok(out)
    }
}

impl fmt::Display for AlgebraElement {
    /// One term per line, ordered by degree then lexicographically.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut terms: Vec<_> = self.terms.iter().collect();
        terms.sort_by(|a, b| a.0.len().cmp(&b.0.len()).then_with(|| a.0.cmp(b.0)));
        for (k, (w, c)) in terms.into_iter().enumerate() {
            if k > 0 {
                writeln!(f)?;
            }
            write!(f, "({:+.16e} {:+.16e}i)", c.re, c.im)?;
            if w.is_empty() {
                write!(f, " 1")?;
            }
            for i in w {
                write!(f, " P{i}")?;
            }
        }
        Ok(())
    }
}

/// `CCR(L)`/`CAR(L)`: the homomorphism induced by a form-preserving linear map
/// whose column `i` is the image of basis vector `i`.
pub fn functor_map(l: &DMatrix<f64>, target: &Algebra, x: &AlgebraElement) -> Result<AlgebraElement> {
    let source = x.algebra();
    if source.statistics() != target.statistics() {
        return Err(Error::StatisticsMismatch);
    }
    if l.ncols() != source.dim() {
        return Err(Error::DimensionMismatch { expected: source.dim(), found: l.ncols() });
    }
    if l.nrows() != target.dim() {
        return Err(Error::DimensionMismatch { expected: target.dim(), found: l.nrows() });
    }
    let deviation = (l.transpose() * target.gram() * l - source.gram()).amax();
    if deviation > 1e-10 * source.gram().amax().max(1.0) {
        return Err(Error::NotFormPreserving { deviation });
    }
    let images = (0..source.dim()).map(|i| target.linear(l.column(i).as_slice())).collect::<Result<Vec<_>>>()?;
    x.substitute(&images)
}

/// An ordered family of phase-space classes with index 0 the null generator
/// `e₀`, together with its `τ` Gram matrix.
#[derive(Debug, Clone)]
pub struct PhaseBasis {
    vectors: Vec<PhaseVector>,
    representatives: Vec<Section>,
    gram: DMatrix<f64>,
}

impl PhaseBasis {
    /// `e₀` followed by unit `u`-impulses and unit `u_next`-impulses.
    pub fn canonical(space: &PhaseSpace) -> Result<Self> {
        let n = space.lattice().n_x();
        let mut vectors = vec![PhaseVector::null_generator(n)];
        for k in 0..2 * n {
            let mut c = vec![0.0; 2 * n + 1];
            c[k + 1] = 1.0;
            vectors.push(PhaseVector::from_coordinates(&c));
        }
        Self::from_vectors(space, vectors)
    }

    /// `e₀` followed by the linear classes `(0, [φ_V])` of `observables`; `τ`
    /// entries are taken from the direct Green-operator sum.
    pub fn adapted(space: &PhaseSpace, observables: &[DualObservable]) -> Result<Self> {
        let l = *space.lattice();
        let n = l.n_x();
        let lin: Vec<DualObservable> = observables
            .iter()
            .map(|phi| DualObservable::new(Section::zeros(&l), phi.linear.clone()))
            .collect::<Result<_>>()?;
        let mut vectors = vec![PhaseVector::null_generator(n)];
        let mut representatives = vec![Section::zeros(&l)];
        for phi in &lin {
            vectors.push(PhaseVector { i_prime: 0.0, data: space.classify(phi)?.data });
            representatives.push(phi.linear.clone());
        }
        let d = vectors.len();
        let propagated = lin.iter().map(|phi| space.kg().causal(&phi.linear)).collect::<Result<Vec<_>>>()?;
        let mut gram = DMatrix::zeros(d, d);
        for i in 0..lin.len() {
            for j in (i + 1)..lin.len() {
                let (f, g) = (&lin[i].linear, &lin[j].linear);
                if f.is_zero() || g.is_zero() {
                    continue;
                }
                let t = 0.5 * (f.pairing(&propagated[j])? - g.pairing(&propagated[i])?);
                gram[(i + 1, j + 1)] = t;
                gram[(j + 1, i + 1)] = -t;
            }
        }
        Ok(Self { vectors, representatives, gram })
    }

    /// Arbitrary vectors; `τ` entries come from Cauchy data.
    pub fn from_vectors(space: &PhaseSpace, vectors: Vec<PhaseVector>) -> Result<Self> {
        let d = vectors.len();
        let mut gram = DMatrix::zeros(d, d);
        let mut representatives = Vec::with_capacity(d);
        for (i, a) in vectors.iter().enumerate() {
            for (j, b) in vectors.iter().enumerate() {
                gram[(i, j)] = space.tau_canonical(a, b)?;
            }
            representatives.push(space.representative(&a.data)?);
        }
        Ok(Self { vectors, representatives, gram })
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn vectors(&self) -> &[PhaseVector] {
        &self.vectors
    }

    /// Linear parts `h_i` with `[h_i] = data_i`.
    pub fn representatives(&self) -> &[Section] {
        &self.representatives
    }

    pub fn gram(&self) -> &DMatrix<f64> {
        &self.gram
    }

    /// Gram matrix of the linear sector (index 0 removed).
    pub fn lin_gram(&self) -> DMatrix<f64> {
        let d = self.len();
        self.gram.view((1, 1), (d - 1, d - 1)).into_owned()
    }

    pub fn has_null_generator(&self) -> bool {
        self.vectors.first().is_some_and(|v| v.i_prime == 1.0 && v.data.is_zero())
            && self.gram.row(0).iter().all(|&g| g == 0.0)
    }

    pub fn ccr(&self) -> Result<Algebra> {
        Algebra::ccr(self.gram.clone())
    }

    pub fn lin_ccr(&self) -> Result<Algebra> {
        Algebra::ccr(self.lin_gram())
    }

    /// Coordinates of `pv` (minimum-norm least squares).
    pub fn coordinates(&self, pv: &PhaseVector) -> Result<DVector<f64>> {
        let rows = pv.coordinates().len();
        if let Some(v) = self.vectors.iter().find(|v| v.coordinates().len() != rows) {
            return Err(Error::DimensionMismatch { expected: rows, found: v.coordinates().len() });
        }
        let b = DMatrix::from_fn(rows, self.len(), |r, c| self.vectors[c].coordinates()[r]);
        let rhs = DVector::from_vec(pv.coordinates());
        let x = b.clone().svd(true, true).solve(&rhs, 1e-12).map_err(|e| Error::Argument(e.to_string()))?;
        let residual = (&b * &x - &rhs).amax();
        if residual > 1e-10 * rhs.amax().max(1.0) {
            return Err(Error::NotExpressible { residual });
        }
        Ok(x)
    }

    /// `Σ c_i Ψ(e_i)` for the coordinates `c` of `pv`.
    pub fn generator(&self, pv: &PhaseVector, algebra: &Algebra) -> Result<AlgebraElement> {
        if algebra.dim() != self.len() {
            return Err(Error::DimensionMismatch { expected: self.len(), found: algebra.dim() });
        }
        let c = self.coordinates(pv)?;
        let mut out = algebra.linear(c.as_slice())?;
        out.prune();
        Ok(out)
    }
}

/// `κ_ŝ`: `Ψ(e₀) ↦ 𝟏`, `Ψ(e_i) ↦ Ψ_lin(e_i) + (Σ vol·φ_i(ŝ))·𝟏`.
#[derive(Debug, Clone)]
pub struct Kappa {
    source: Algebra,
    target: Algebra,
    shift: Vec<f64>,
}

impl Kappa {
    /// `κ` for the background `ŝ*`.
    pub fn reference(space: &PhaseSpace, basis: &PhaseBasis) -> Result<Self> {
        Self::new(space, basis, space.reference())
    }

    /// `κ` for an arbitrary solution `ŝ` of `P(ŝ) = 0`.
    pub fn new(space: &PhaseSpace, basis: &PhaseBasis, s_hat: &Section) -> Result<Self> {
        if !basis.has_null_generator() {
            return Err(Error::Argument("basis must start with the null generator".into()));
        }
        let residual = space.operator().apply(s_hat)?.max_abs();
        let tolerance = 1e-9 * space.operator().source().max_abs().max(s_hat.max_abs()).max(1.0);
        if residual > tolerance {
            return Err(Error::Residual { residual, tolerance });
        }
        let w = s_hat - space.reference();
        let shift = basis
            .vectors()
            .iter()
            .zip(basis.representatives())
            .map(|(v, h)| Ok(v.i_prime + h.pairing(&w)?))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { source: basis.ccr()?, target: basis.lin_ccr()?, shift })
    }

    pub fn source(&self) -> &Algebra {
        &self.source
    }

    pub fn target(&self) -> &Algebra {
        &self.target
    }

    pub fn apply(&self, x: &AlgebraElement) -> Result<AlgebraElement> {
        if x.statistics() != Statistics::Bosonic {
            return Err(Error::StatisticsMismatch);
        }
        if x.algebra() != &self.source {
            return Err(Error::Argument("element is not over the kappa source basis".into()));
        }
        let one = self.target.one();
        let mut images = vec![one.clone()];
        for i in 1..self.source.dim() {
            images.push(self.target.generator(i - 1)?.add(&one.scale_real(self.shift[i]))?);
        }
        x.substitute(&images)
    }
}
