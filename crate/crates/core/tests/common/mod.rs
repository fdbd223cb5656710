#![allow(dead_code)]

use affqft::{AffineOperator, DualObservable, Lattice, PhaseSpace, Section};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn small() -> Lattice {
    Lattice::new(7, 20, 1.0, 0.5, 0.8).unwrap()
}

/// Dense random values on slices `[lo, hi]`.
pub fn random_section(l: &Lattice, rng: &mut impl Rng, lo: usize, hi: usize) -> Section {
    let values = (0..l.num_sites())
        .map(|i| {
            let t = i / l.n_x();
            if t >= lo && t <= hi {
                rng.gen_range(-1.0..1.0)
            } else {
                0.0
            }
        })
        .collect();
    Section::from_values(l, values).unwrap()
}

/// A few random point values on slices `[lo, hi]`.
pub fn sparse_section(l: &Lattice, rng: &mut impl Rng, lo: usize, hi: usize, count: usize) -> Section {
    let mut s = Section::zeros(l);
    for _ in 0..count {
        let t = rng.gen_range(lo..=hi);
        let x = rng.gen_range(0..l.n_x());
        s.set(t, x, s.get(t, x) + rng.gen_range(-1.0..1.0));
    }
    s
}

pub fn compact(l: &Lattice, rng: &mut impl Rng) -> Section {
    random_section(l, rng, 2, l.n_t() - 3)
}

pub fn random_space(l: &Lattice, rng: &mut impl Rng) -> PhaseSpace {
    let j = sparse_section(l, rng, 2, l.n_t() - 3, 3);
    PhaseSpace::new(AffineOperator::new(j).unwrap()).unwrap()
}

pub fn random_observable(l: &Lattice, rng: &mut impl Rng) -> DualObservable {
    let (lo, hi) = (1, l.n_t() - 2);
    DualObservable::new(sparse_section(l, rng, lo, hi, 3), sparse_section(l, rng, lo, hi, 3)).unwrap()
}

pub fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1.0)
}
