//! Lattice model of an affine (inhomogeneous) free scalar field theory.
//!
//! The crate builds a periodic 1+1 dimensional lattice, the Klein-Gordon
//! operator with a compactly supported source, the phase space of the affine
//! theory, its CCR/CAR quantization and quasi-free states.

pub mod affine;
pub mod algebra;
pub mod error;
pub mod fields;
pub mod lattice;
pub mod phase_space;
pub mod states;

pub use affine::{AffineMap, AffinePoint, DualElement, DualMap};
pub use algebra::{functor_map, Algebra, AlgebraElement, Kappa, PhaseBasis, Statistics};
pub use error::{Error, Result};
pub use fields::{AffineOperator, DualObservable, KleinGordon, Section};
pub use lattice::{Lattice, Region, RegionKind, Site, SiteSet};
pub use phase_space::{CauchyData, PhaseSpace, PhaseVector, RegionEmbedding, TimeSliceReport};
pub use states::{
    check_affine_quasifree, ground_state, n_point, set_partitions, truncated_moments, InducedAffineState, MomentRow,
    ObservableFamily, Perturbed, QuasiFreeReport, QuasiFreeState, StateFunctional,
};
