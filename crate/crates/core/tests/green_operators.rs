mod common;

use affqft::{DualObservable, KleinGordon, Section};
use common::*;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn green_operators_invert_on_interior(seed in any::<u64>()) {
        let l = small();
        let mut r = rng(seed);
        let kg = KleinGordon::new(&l);
        let h = random_section(&l, &mut r, 1, l.n_t() - 2);
        for g in [kg.retarded(&h).unwrap(), kg.advanced(&h).unwrap()] {
            let back = kg.apply(&g).unwrap();
            prop_assert!((&back - &h).max_abs() <= 1e-9 * h.max_abs());
        }
        let k = compact(&l, &mut r);
        let pk = kg.apply(&k).unwrap();
        prop_assert!((&kg.retarded(&pk).unwrap() - &k).max_abs() <= 1e-9 * k.max_abs().max(pk.max_abs()));
        prop_assert!((&kg.advanced(&pk).unwrap() - &k).max_abs() <= 1e-9 * k.max_abs().max(pk.max_abs()));
        prop_assert!(kg.causal(&pk).unwrap().max_abs() <= 1e-9 * pk.max_abs());
    }

    #[test]
    fn green_supports_stay_in_cones(seed in any::<u64>()) {
        let l = small();
        let mut r = rng(seed);
        let kg = KleinGordon::new(&l);
        let h = sparse_section(&l, &mut r, 1, l.n_t() - 2, 2);
        prop_assert!(kg.retarded(&h).unwrap().support().is_subset(&l.causal_future(&h.support())));
        prop_assert!(kg.advanced(&h).unwrap().support().is_subset(&l.causal_past(&h.support())));
    }

    #[test]
    fn causal_propagator_is_skew(seed in any::<u64>()) {
        let l = small();
        let mut r = rng(seed);
        let kg = KleinGordon::new(&l);
        let f = random_section(&l, &mut r, 1, l.n_t() - 2);
        let g = random_section(&l, &mut r, 1, l.n_t() - 2);
        let a = f.pairing(&kg.causal(&g).unwrap()).unwrap();
        let b = g.pairing(&kg.causal(&f).unwrap()).unwrap();
        prop_assert!(rel(a, -b) <= 1e-10);
    }

    #[test]
    fn formal_adjoint_identity(seed in any::<u64>()) {
        let l = small();
        let mut r = rng(seed);
        let ps = random_space(&l, &mut r);
        let op = ps.operator();
        let h = compact(&l, &mut r);
        let s = random_section(&l, &mut r, 0, l.n_t() - 1);
        let lhs = h.pairing(&op.apply(&s).unwrap()).unwrap();
        let rhs = op.formal_adjoint(&h).unwrap().functional(&s).unwrap();
        prop_assert!(rel(lhs, rhs) <= 1e-10);
    }

    #[test]
    fn kernel_of_causal_propagator_is_image_of_operator(seed in any::<u64>()) {
        let l = small();
        let mut r = rng(seed);
        let kg = KleinGordon::new(&l);
        let d = kg.apply(&compact(&l, &mut r)).unwrap();
        prop_assert!(kg.causal(&d).unwrap().max_abs() <= 1e-9 * d.max_abs());
        let k = kg.retarded(&d).unwrap();
        prop_assert!(k.mask_slices(|t| !l.compact_slices().contains(&t)).max_abs() <= 1e-9 * d.max_abs());
        prop_assert!((&kg.apply(&k).unwrap() - &d).max_abs() <= 1e-9 * d.max_abs());
    }
}

#[test]
fn reference_solution_solves_affine_equation() {
    let l = small();
    let mut r = rng(7);
    let ps = random_space(&l, &mut r);
    let res = ps.operator().apply(ps.reference()).unwrap();
    assert!(res.max_abs() <= 1e-9 * ps.operator().source().max_abs().max(1.0));
}

#[test]
fn trivial_observables_vanish_on_configurations() {
    let l = small();
    let mut r = rng(8);
    let a = sparse_section(&l, &mut r, 2, 15, 4);
    let shifted = &a - &Section::from_fn(&l, |t, x| if (t, x) == (3, 0) { a.integral() / l.vol() } else { 0.0 });
    let triv = DualObservable::scalar(shifted);
    assert!(triv.is_trivial(1e-12));
    for _ in 0..5 {
        let s = random_section(&l, &mut r, 0, l.n_t() - 1);
        assert!(triv.functional(&s).unwrap().abs() < 1e-12);
    }
}
