use fermicone::fermion::{represent_polynomial, FermionPolynomial, Grading, ModeOrder};
use fermicone::reorder::{
    adjacent_swap, align_supports, append_mode, partial_project, partial_trace, prepend_mode,
    reorder, ReorderPlan,
};
use fermicone::verify::random_graded;
use fermicone::Complex64;
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn order_strategy(max: usize) -> impl Strategy<Value = Vec<usize>> {
    (1..=max).prop_flat_map(|len| {
        Just((1..=6).collect::<Vec<usize>>())
            .prop_shuffle()
            .prop_map(move |v| v[..len].to_vec())
    })
}

fn grading() -> impl Strategy<Value = Grading> {
    prop_oneof![Just(Grading::Even), Just(Grading::Odd)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn swaps_are_involutions(modes in order_strategy(4), g in grading(), seed in any::<u64>()) {
        prop_assume!(modes.len() >= 2);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random_graded(&mut rng, &ModeOrder::new(modes.clone()).unwrap(), g).unwrap();
        for p in 0..modes.len() - 1 {
            let twice = adjacent_swap(&adjacent_swap(&a, p).unwrap(), p).unwrap();
            prop_assert_eq!(&twice, &a);
        }
    }

    #[test]
    fn reorder_round_trip_is_exact(modes in order_strategy(4), g in grading(), seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let order = ModeOrder::new(modes.clone()).unwrap();
        let a = random_graded(&mut rng, &order, g).unwrap();
        let mut target = modes.clone();
        target.shuffle(&mut rng);
        let target = ModeOrder::new(target).unwrap();
        let there = reorder(&a, &target).unwrap();
        prop_assert_eq!(reorder(&there, &order).unwrap(), a.clone());
        prop_assert_eq!(there.grading(), g);
        let plan = ReorderPlan::selection(&order, &target).unwrap();
        prop_assert_eq!(fermicone::reorder::apply_plan(&a, &plan), there);
    }

    #[test]
    fn reordering_commutes_with_products(modes in order_strategy(4), seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let order = ModeOrder::new(modes.clone()).unwrap();
        let a = random_graded(&mut rng, &order, Grading::Odd).unwrap();
        let b = random_graded(&mut rng, &order, Grading::Even).unwrap();
        let mut target = modes.clone();
        target.shuffle(&mut rng);
        let target = ModeOrder::new(target).unwrap();
        let lhs = reorder(&a.mul(&b).unwrap(), &target).unwrap();
        let rhs = reorder(&a, &target).unwrap().mul(&reorder(&b, &target).unwrap()).unwrap();
        prop_assert!(fermicone::linalg::max_abs(&(lhs.matrix() - rhs.matrix())) <= 1e-12);
    }

    #[test]
    fn projections_split_the_trace(modes in order_strategy(4), g in grading(), seed in any::<u64>(), pick in any::<prop::sample::Index>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random_graded(&mut rng, &ModeOrder::new(modes.clone()).unwrap(), g).unwrap();
        let m = modes[pick.index(modes.len())];
        let (empty, filled) = (partial_project(&a, m, false).unwrap(), partial_project(&a, m, true).unwrap());
        let traced = partial_trace(&a, m).unwrap();
        prop_assert_eq!(&(empty.matrix() + filled.matrix()), traced.matrix());
    }

    #[test]
    fn partial_trace_is_consistent(modes in order_strategy(4), g in grading(), seed in any::<u64>(), pick in any::<prop::sample::Index>()) {
        prop_assume!(modes.len() >= 2);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random_graded(&mut rng, &ModeOrder::new(modes.clone()).unwrap(), g).unwrap();
        let m = modes[pick.index(modes.len())];
        let rest = ModeOrder::new(modes.iter().copied().filter(|&x| x != m).collect()).unwrap();
        let b = random_graded(&mut rng, &rest, Grading::Even).unwrap();
        let (a2, b2) = align_supports(&a, &b).unwrap();
        let full = a2.mul(&b2).unwrap().trace();
        let reduced = partial_trace(&a, m).unwrap().mul(&b).unwrap().trace();
        prop_assert!((full - reduced).norm() <= 1e-12 * (1.0 + full.norm()));
    }

    #[test]
    fn prepend_and_append_agree(modes in order_strategy(3), g in grading(), seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random_graded(&mut rng, &ModeOrder::new(modes.clone()).unwrap(), g).unwrap();
        let front = prepend_mode(&a, 9).unwrap();
        let mut tail = modes.clone();
        tail.push(9);
        prop_assert_eq!(append_mode(&a, 9).unwrap(), reorder(&front, &ModeOrder::new(tail).unwrap()).unwrap());
    }

    #[test]
    fn disjoint_even_operators_commute(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random_graded(&mut rng, &ModeOrder::from([3, 1]), Grading::Even).unwrap();
        let b = random_graded(&mut rng, &ModeOrder::from([2, 5]), Grading::Even).unwrap();
        let (a2, b2) = align_supports(&a, &b).unwrap();
        let ab = a2.mul(&b2).unwrap();
        let ba = b2.mul(&a2).unwrap();
        prop_assert!(fermicone::linalg::max_abs(&(ab.matrix() - ba.matrix())) <= 1e-12);
    }

    #[test]
    fn disjoint_odd_operators_anticommute(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random_graded(&mut rng, &ModeOrder::from([4]), Grading::Odd).unwrap();
        let b = random_graded(&mut rng, &ModeOrder::from([2, 6]), Grading::Odd).unwrap();
        let (a2, b2) = align_supports(&a, &b).unwrap();
        let sum = a2.mul(&b2).unwrap().matrix() + b2.mul(&a2).unwrap().matrix();
        prop_assert!(fermicone::linalg::max_abs(&sum) <= 1e-12);
    }
}

#[test]
fn local_matrices_follow_the_embedding() {
    let p = FermionPolynomial::hopping(2, 7).scale(Complex64::new(0.5, 0.0))
        + FermionPolynomial::number(4);
    let a = represent_polynomial(&p, &ModeOrder::from([2, 4, 7])).unwrap();
    for target in [[7, 2, 4], [4, 7, 2], [2, 7, 4]] {
        let target = ModeOrder::from(target);
        assert_eq!(
            reorder(&a, &target).unwrap(),
            represent_polynomial(&p, &target).unwrap()
        );
    }
}
