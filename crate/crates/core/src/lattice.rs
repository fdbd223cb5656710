//! Discrete spacetime: a periodic spatial circle of `n_x` sites times `n_t`
//! time slices, with the causal structure of the nearest-neighbour stencil.

use crate::error::{Error, Result};

/// Lattice spacetime parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Lattice {
    n_x: usize,
    n_t: usize,
    dx: f64,
    dt: f64,
    mass: f64,
}

impl Lattice {
    pub fn new(n_x: usize, n_t: usize, dx: f64, dt: f64, mass: f64) -> Result<Self> {
        if n_x < 3 {
            return Err(Error::InvalidLattice(format!("n_x = {n_x} must be at least 3")));
        }
        if n_t < 8 {
            return Err(Error::InvalidLattice(format!("n_t = {n_t} must be at least 8")));
        }
        if !(dx > 0.0 && dx.is_finite()) || !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::InvalidLattice(format!("spacings must be positive (dx = {dx}, dt = {dt})")));
        }
        if dt > dx {
            return Err(Error::InvalidLattice(format!("dt = {dt} exceeds dx = {dx}; the scheme needs dt/dx <= 1")));
        }
        if !(mass > 0.0 && mass.is_finite()) {
            return Err(Error::InvalidLattice(format!("mass = {mass} must be positive")));
        }
        Ok(Self { n_x, n_t, dx, dt, mass })
    }

    /// The default desk-scale lattice: 16 sites, 64 slices, dx = 1, dt = 0.5, m = 1.
    pub fn desk() -> Self {
        Self::new(16, 64, 1.0, 0.5, 1.0).expect("valid default lattice")
    }

    /// Same spatial data and mass, different number of time slices.
    pub fn with_n_t(&self, n_t: usize) -> Result<Self> {
        Self::new(self.n_x, n_t, self.dx, self.dt, self.mass)
    }

    pub fn n_x(&self) -> usize {
        self.n_x
    }

    pub fn n_t(&self) -> usize {
        self.n_t
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    /// Per-site volume weight `dt·dx`.
    pub fn vol(&self) -> f64 {
        self.dt * self.dx
    }

    pub fn num_sites(&self) -> usize {
        self.n_x * self.n_t
    }

    pub fn index(&self, t: usize, x: usize) -> usize {
        debug_assert!(t < self.n_t && x < self.n_x);
        t * self.n_x + x
    }

    pub fn site(&self, index: usize) -> Site {
        Site { t: index / self.n_x, x: index % self.n_x }
    }

    pub fn check_site(&self, t: usize, x: usize) -> Result<()> {
        if t < self.n_t && x < self.n_x {
            Ok(())
        } else {
            Err(Error::OutOfRange { t, x })
        }
    }

    /// Distance on the spatial circle.
    pub fn circle_distance(&self, x: usize, y: usize) -> usize {
        let d = x.abs_diff(y) % self.n_x;
        d.min(self.n_x - d)
    }

    pub fn wrap(&self, x: isize) -> usize {
        x.rem_euclid(self.n_x as isize) as usize
    }

    /// Slices on which the second-order stencil is evaluated: `[1, n_t − 2]`.
    pub fn interior_slices(&self) -> std::ops::RangeInclusive<usize> {
        1..=self.n_t - 2
    }

    /// Slices admissible for compactly supported data: `[2, n_t − 3]`.
    pub fn compact_slices(&self) -> std::ops::RangeInclusive<usize> {
        2..=self.n_t - 3
    }

    /// Reference slice `t*` at which Cauchy data are read off.
    pub fn reference_slice(&self) -> usize {
        self.n_t - 3
    }

    pub fn same_geometry(&self, other: &Lattice) -> bool {
        self.n_x == other.n_x && self.dx == other.dx && self.dt == other.dt && self.mass == other.mass
    }

    /// `ω_k² = m² + (4/dx²)·sin²(πk/n_x)` for spatial Fourier mode `k`.
    pub fn mode_frequency_sq(&self, k: usize) -> f64 {
        let s = (std::f64::consts::PI * k as f64 / self.n_x as f64).sin();
        self.mass * self.mass + 4.0 / (self.dx * self.dx) * s * s
    }

    /// Errors if some spatial mode grows exponentially under leapfrog stepping.
    pub fn check_mode_stability(&self) -> Result<()> {
        for k in 0..self.n_x {
            let value = self.dt * self.dt * self.mode_frequency_sq(k);
            if value >= 4.0 {
                return Err(Error::UnstableMode { mode: k, value });
            }
        }
        Ok(())
    }

    pub fn empty_set(&self) -> SiteSet {
        SiteSet::empty(self.n_t, self.n_x)
    }

    pub fn full_set(&self) -> SiteSet {
        SiteSet { n_t: self.n_t, n_x: self.n_x, mask: vec![true; self.num_sites()] }
    }

    pub fn site_set(&self, sites: &[Site]) -> Result<SiteSet> {
        let mut s = self.empty_set();
        for site in sites {
            self.check_site(site.t, site.x)?;
            s.insert(*site);
        }
        Ok(s)
    }

    /// `J⁺(S)`: all `(t + k, x')` with circle distance `|x − x'| ≤ k`, `k ≥ 0`.
    pub fn causal_future(&self, s: &SiteSet) -> SiteSet {
        self.sweep(s, (0..self.n_t).collect())
    }

    /// `J⁻(S)`, the time mirror of [`Lattice::causal_future`].
    pub fn causal_past(&self, s: &SiteSet) -> SiteSet {
        self.sweep(s, (0..self.n_t).rev().collect())
    }

    /// `J(S) = J⁺(S) ∪ J⁻(S)`.
    pub fn causal_shadow(&self, s: &SiteSet) -> SiteSet {
        self.causal_future(s).union(&self.causal_past(s))
    }

    pub fn causally_disjoint(&self, s1: &SiteSet, s2: &SiteSet) -> bool {
        self.causal_shadow(s1).intersection(s2).is_empty()
    }

    /// Every full constant-time slice is met once by each inextensible cone path.
    pub fn is_cauchy_slice(&self, t: usize) -> bool {
        t < self.n_t
    }

    pub fn slice(&self, t: usize) -> Result<SiteSet> {
        self.check_site(t, 0)?;
        let mut s = self.empty_set();
        for x in 0..self.n_x {
            s.insert(Site { t, x });
        }
        Ok(s)
    }

    /// The time-window region `[t_a, t_b] × circle`.
    pub fn window(&self, t_a: usize, t_b: usize) -> Result<Region> {
        self.check_site(t_b, 0)?;
        if t_a > t_b {
            return Err(Error::Argument(format!("window [{t_a}, {t_b}] is reversed")));
        }
        let mut s = self.empty_set();
        for t in t_a..=t_b {
            for x in 0..self.n_x {
                s.insert(Site { t, x });
            }
        }
        Ok(Region { sites: s, kind: RegionKind::TimeWindow { t_a, t_b } })
    }

    fn sweep(&self, s: &SiteSet, order: Vec<usize>) -> SiteSet {
        let mut out = self.empty_set();
        let mut front = vec![false; self.n_x];
        for t in order {
            let mut next = vec![false; self.n_x];
            for x in 0..self.n_x {
                if front[x] {
                    next[x] = true;
                    next[self.wrap(x as isize - 1)] = true;
                    next[(x + 1) % self.n_x] = true;
                }
            }
            for (x, n) in next.iter_mut().enumerate() {
                *n |= s.contains(Site { t, x });
                if *n {
                    out.insert(Site { t, x });
                }
            }
            front = next;
        }
        out
    }
}

/// A lattice site `(t, x)`, periodic in `x`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Site {
    pub t: usize,
    pub x: usize,
}

impl Site {
    pub fn new(t: usize, x: usize) -> Self {
        Self { t, x }
    }
}

/// A set of sites, stored as a dense mask over the lattice.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SiteSet {
    n_t: usize,
    n_x: usize,
    mask: Vec<bool>,
}

impl SiteSet {
    pub fn empty(n_t: usize, n_x: usize) -> Self {
        Self { n_t, n_x, mask: vec![false; n_t * n_x] }
    }

    pub fn insert(&mut self, site: Site) {
        if site.t < self.n_t && site.x < self.n_x {
            self.mask[site.t * self.n_x + site.x] = true;
        }
    }

    pub fn contains(&self, site: Site) -> bool {
        site.t < self.n_t && site.x < self.n_x && self.mask[site.t * self.n_x + site.x]
    }

    pub fn len(&self) -> usize {
        self.mask.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.mask.iter().any(|&b| b)
    }

    pub fn iter(&self) -> impl Iterator<Item = Site> + '_ {
        let n_x = self.n_x;
        self.mask.iter().enumerate().filter(|(_, &b)| b).map(move |(i, _)| Site { t: i / n_x, x: i % n_x })
    }

    pub fn union(&self, other: &SiteSet) -> SiteSet {
        self.zip(other, |a, b| a || b)
    }

    pub fn intersection(&self, other: &SiteSet) -> SiteSet {
        self.zip(other, |a, b| a && b)
    }

    pub fn difference(&self, other: &SiteSet) -> SiteSet {
        self.zip(other, |a, b| a && !b)
    }

    pub fn is_subset(&self, other: &SiteSet) -> bool {
        self.difference(other).is_empty()
    }

    /// Smallest and largest occupied time slice.
    pub fn time_extent(&self) -> Option<(usize, usize)> {
        let mut it = self.iter().map(|s| s.t);
        let first = it.next()?;
        Some(it.fold((first, first), |(lo, hi), t| (lo.min(t), hi.max(t))))
    }

    fn zip(&self, other: &SiteSet, op: impl Fn(bool, bool) -> bool) -> SiteSet {
        assert_eq!((self.n_t, self.n_x), (other.n_t, other.n_x), "site sets from different lattices");
        SiteSet {
            n_t: self.n_t,
            n_x: self.n_x,
            mask: self.mask.iter().zip(&other.mask).map(|(&a, &b)| op(a, b)).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RegionKind {
    /// Full spatial extent over a contiguous time interval; causally compatible.
    TimeWindow {
        t_a: usize,
        t_b: usize,
    },
    General,
}

/// A sub-region of the lattice.
#[derive(Debug, Clone, PartialEq)]
pub struct Region {
    sites: SiteSet,
    kind: RegionKind,
}

impl Region {
    /// An arbitrary site set; not certified as causally compatible.
    pub fn general(sites: SiteSet) -> Self {
        Self { sites, kind: RegionKind::General }
    }

    pub fn sites(&self) -> &SiteSet {
        &self.sites
    }

    pub fn kind(&self) -> RegionKind {
        self.kind
    }

    pub fn time_window(&self) -> Option<(usize, usize)> {
        match self.kind {
            RegionKind::TimeWindow { t_a, t_b } => Some((t_a, t_b)),
            RegionKind::General => None,
        }
    }

    pub fn contains_cauchy_slice(&self) -> bool {
        match self.kind {
            RegionKind::TimeWindow { t_a, t_b } => t_b >= t_a,
            RegionKind::General => {
                (0..self.sites.n_t).any(|t| (0..self.sites.n_x).all(|x| self.sites.contains(Site { t, x })))
            }
        }
    }

    pub fn contains(&self, site: Site) -> bool {
        self.sites.contains(site)
    }
}
