//! Finite-dimensional affine spaces modeled on `R^d`.
//!
//! Points, affine maps and elements of the vector dual (affine functionals) are
//! stored in one fixed global chart. Every operation here commutes with a
//! translation of that chart; see [`AffineMap::in_chart`] and
//! [`DualElement::in_chart`].

use nalgebra::{DMatrix, DVector};
use std::ops::{Add, Sub};

use crate::error::{Error, Result};

/// A point of an affine space, in chart coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct AffinePoint {
    coords: DVector<f64>,
}

impl AffinePoint {
    pub fn new(coords: DVector<f64>) -> Self {
        Self { coords }
    }

    pub fn from_slice(coords: &[f64]) -> Self {
        Self::new(DVector::from_column_slice(coords))
    }

    pub fn origin(dim: usize) -> Self {
        Self::new(DVector::zeros(dim))
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &DVector<f64> {
        &self.coords
    }

    /// Group action of the model vector space on the point.
    pub fn translate(&self, v: &DVector<f64>) -> Result<Self> {
        check_dim(self.dim(), v.len())?;
        Ok(Self::new(&self.coords + v))
    }

    /// The unique vector `v` with `other + v = self`.
    pub fn difference(&self, other: &AffinePoint) -> Result<DVector<f64>> {
        check_dim(self.dim(), other.dim())?;
        Ok(&self.coords - &other.coords)
    }
}

impl Add<&DVector<f64>> for &AffinePoint {
    type Output = AffinePoint;

    fn add(self, v: &DVector<f64>) -> AffinePoint {
        self.translate(v).expect("dimension mismatch in point translation")
    }
}

impl Sub for &AffinePoint {
    type Output = DVector<f64>;

    fn sub(self, other: &AffinePoint) -> DVector<f64> {
        self.difference(other).expect("dimension mismatch in point difference")
    }
}

/// An affine map `a ↦ linear·a + offset` between affine spaces of dimension
/// `d₁` (domain) and `d₂` (codomain).
#[derive(Debug, Clone, PartialEq)]
pub struct AffineMap {
    linear: DMatrix<f64>,
    offset: DVector<f64>,
}

impl AffineMap {
    pub fn new(linear: DMatrix<f64>, offset: DVector<f64>) -> Result<Self> {
        check_dim(linear.nrows(), offset.len())?;
        Ok(Self { linear, offset })
    }

    pub fn identity(dim: usize) -> Self {
        Self { linear: DMatrix::identity(dim, dim), offset: DVector::zeros(dim) }
    }

    pub fn translation(offset: DVector<f64>) -> Self {
        let d = offset.len();
        Self { linear: DMatrix::identity(d, d), offset }
    }

    /// The map sending every point to `value`.
    pub fn constant(domain_dim: usize, value: DVector<f64>) -> Self {
        Self { linear: DMatrix::zeros(value.len(), domain_dim), offset: value }
    }

    pub fn domain_dim(&self) -> usize {
        self.linear.ncols()
    }

    pub fn codomain_dim(&self) -> usize {
        self.linear.nrows()
    }

    /// The linear part `f_V`.
    pub fn linear_part(&self) -> &DMatrix<f64> {
        &self.linear
    }

    pub fn offset(&self) -> &DVector<f64> {
        &self.offset
    }

    pub fn apply(&self, a: &AffinePoint) -> Result<AffinePoint> {
        check_dim(self.domain_dim(), a.dim())?;
        Ok(AffinePoint::new(&self.linear * a.coords() + &self.offset))
    }

    pub fn apply_linear(&self, v: &DVector<f64>) -> Result<DVector<f64>> {
        check_dim(self.domain_dim(), v.len())?;
        Ok(&self.linear * v)
    }

    /// Recovers the linear part from the action on points, `v ↦ f(a+v) − f(a)`,
    /// probing with the standard basis at base point `a`.
    pub fn estimate_linear_part(&self, a: &AffinePoint) -> Result<DMatrix<f64>> {
        let d = self.domain_dim();
        let fa = self.apply(a)?;
        let mut m = DMatrix::zeros(self.codomain_dim(), d);
        for j in 0..d {
            let mut e = DVector::zeros(d);
            e[j] = 1.0;
            let col = &self.apply(&a.translate(&e)?)? - &fa;
            m.set_column(j, &col);
        }
        Ok(m)
    }

    /// `g ∘ f`.
    pub fn compose(g: &AffineMap, f: &AffineMap) -> Result<AffineMap> {
        check_dim(g.domain_dim(), f.codomain_dim())?;
        Ok(AffineMap { linear: &g.linear * &f.linear, offset: &g.linear * &f.offset + &g.offset })
    }

    pub fn then(&self, g: &AffineMap) -> Result<AffineMap> {
        AffineMap::compose(g, self)
    }

    pub fn is_invertible(&self) -> bool {
        self.domain_dim() == self.codomain_dim() && self.linear.clone().try_inverse().is_some()
    }

    pub fn inverse(&self) -> Result<AffineMap> {
        if self.domain_dim() != self.codomain_dim() {
            return Err(Error::DimensionMismatch { expected: self.domain_dim(), found: self.codomain_dim() });
        }
        let inv = self.linear.clone().try_inverse().ok_or(Error::Singular)?;
        let offset = -(&inv * &self.offset);
        Ok(AffineMap { linear: inv, offset })
    }

    /// The same map expressed in the chart whose origin sits at `origin`
    /// (old coordinates), i.e. `a' = a − origin` on both sides.
    pub fn in_chart(&self, origin_domain: &DVector<f64>, origin_codomain: &DVector<f64>) -> Result<AffineMap> {
        check_dim(self.domain_dim(), origin_domain.len())?;
        check_dim(self.codomain_dim(), origin_codomain.len())?;
        let offset = &self.linear * origin_domain + &self.offset - origin_codomain;
        Ok(AffineMap { linear: self.linear.clone(), offset })
    }

    /// The induced map on vector duals, `φ ↦ φ ∘ f⁻¹`.
    pub fn dual_map(&self) -> Result<DualMap> {
        let inv = self.inverse()?;
        let d = self.domain_dim();
        // φ∘f⁻¹(b) = c + w·(A⁻¹b − A⁻¹o): constant shifts by w·offset(f⁻¹), covector by A⁻ᵀ.
        let mut m = DMatrix::zeros(d + 1, d + 1);
        m[(0, 0)] = 1.0;
        for j in 0..d {
            m[(0, j + 1)] = inv.offset[j];
        }
        m.view_mut((1, 1), (d, d)).copy_from(&inv.linear.transpose());
        Ok(DualMap { matrix: m })
    }
}

/// An element `φ(a) = c + w·a` of the vector dual `A†`.
#[derive(Debug, Clone, PartialEq)]
pub struct DualElement {
    pub c: f64,
    pub w: DVector<f64>,
}

impl DualElement {
    pub fn new(c: f64, w: DVector<f64>) -> Self {
        Self { c, w }
    }

    /// The constant functional `𝟙`.
    pub fn one(dim: usize) -> Self {
        Self { c: 1.0, w: DVector::zeros(dim) }
    }

    pub fn dim(&self) -> usize {
        self.w.len()
    }

    pub fn eval(&self, a: &AffinePoint) -> Result<f64> {
        check_dim(self.dim(), a.dim())?;
        Ok(self.c + self.w.dot(a.coords()))
    }

    /// The linear part `φ_V`, acting on difference vectors.
    pub fn linear_part(&self) -> &DVector<f64> {
        &self.w
    }

    /// Coefficients `(c, w₁, …, w_d)` with respect to [`vector_dual_basis`].
    pub fn coefficients(&self) -> DVector<f64> {
        let mut v = DVector::zeros(self.dim() + 1);
        v[0] = self.c;
        v.rows_mut(1, self.dim()).copy_from(&self.w);
        v
    }

    pub fn from_coefficients(v: &DVector<f64>) -> Self {
        let d = v.len() - 1;
        Self { c: v[0], w: v.rows(1, d).into_owned() }
    }

    /// The same functional in the chart with origin `origin`.
    pub fn in_chart(&self, origin: &DVector<f64>) -> Result<DualElement> {
        check_dim(self.dim(), origin.len())?;
        Ok(DualElement { c: self.c + self.w.dot(origin), w: self.w.clone() })
    }
}

/// Linear map on `A†` in the coefficient basis `(c, w)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DualMap {
    matrix: DMatrix<f64>,
}

impl DualMap {
    pub fn identity(dim: usize) -> Self {
        Self { matrix: DMatrix::identity(dim + 1, dim + 1) }
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn apply(&self, phi: &DualElement) -> Result<DualElement> {
        check_dim(self.matrix.ncols(), phi.dim() + 1)?;
        Ok(DualElement::from_coefficients(&(&self.matrix * phi.coefficients())))
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &DualMap) -> Result<DualMap> {
        check_dim(self.matrix.ncols(), other.matrix.nrows())?;
        Ok(DualMap { matrix: &self.matrix * &other.matrix })
    }
}

/// The basis `{𝟙, e*₁, …, e*_d}` of `A†`; it has `d + 1` elements.
pub fn vector_dual_basis(dim: usize) -> Vec<DualElement> {
    let mut basis = Vec::with_capacity(dim + 1);
    basis.push(DualElement::one(dim));
    for b in 0..dim {
        let mut w = DVector::zeros(dim);
        w[b] = 1.0;
        basis.push(DualElement::new(0.0, w));
    }
    basis
}

/// Rank of the coefficient matrix of a family of dual elements.
pub fn dual_rank(elements: &[DualElement]) -> usize {
    if elements.is_empty() {
        return 0;
    }
    let d = elements[0].dim() + 1;
    let cols: Vec<DVector<f64>> = elements.iter().map(DualElement::coefficients).collect();
    let m = DMatrix::from_columns(&cols);
    debug_assert_eq!(m.nrows(), d);
    m.rank(1e-10)
}

fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}
