use fermicone::circuit::ContractionOptions;
use fermicone::linalg::even_unitarity_defect;
use fermicone::model::{
    anderson_bound, build_hamiltonian, build_mera, build_mera_with, energy, free_fermion_energy,
    hamiltonian_polynomial, optimize, BlockShape, LatticeModel, MeraOptions, OptimizeOptions,
    Parity,
};
use fermicone::oracle::{exact_ground_energy, global_expectation};
use proptest::prelude::*;

fn block(w: usize, h: usize) -> BlockShape {
    BlockShape::new(w, h).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn random_ansatz_is_an_upper_bound(seed in any::<u64>(), t in -1.0f64..1.0, u in -1.0f64..1.0) {
        let m = LatticeModel::new(4, 2, t, u).unwrap();
        let mera = MeraOptions { init_std: 0.5, ..MeraOptions::default() };
        let (_, c) = build_mera_with(&m, block(2, 2), seed, &mera).unwrap();
        let e = energy(&c, &build_hamiltonian(&m), ContractionOptions::default()).unwrap();
        let dense = global_expectation(&c, &hamiltonian_polynomial(&m)).unwrap();
        prop_assert!((e - dense).abs() <= 1e-10);
        prop_assert!(e >= exact_ground_energy(&m).unwrap() - 1e-10);
    }

    #[test]
    fn transposition_keeps_the_spectrum(w in 1usize..=3, h in 1usize..=3, t in -1.0f64..1.0, u in -1.0f64..1.0) {
        let m = LatticeModel::new(w, h, t, u).unwrap();
        let a = exact_ground_energy(&m).unwrap();
        let b = exact_ground_energy(&m.transposed()).unwrap();
        prop_assert!((a - b).abs() <= 1e-10);
    }

    #[test]
    fn bound_below_ground_state(t in -1.0f64..1.0, u in -1.0f64..1.0) {
        let m = LatticeModel::new(4, 2, t, u).unwrap();
        let exact = exact_ground_energy(&m).unwrap();
        for b in [block(2, 1), block(1, 2), block(2, 2), block(4, 1)] {
            prop_assert!(anderson_bound(&m, b).unwrap() <= exact + 1e-10);
        }
    }

    #[test]
    fn free_levels_match_diagonalization(w in 1usize..=4, h in 1usize..=3, t in -1.0f64..1.0) {
        let m = LatticeModel::new(w, h, t, 0.0).unwrap();
        prop_assert!((free_fermion_energy(&m).unwrap() - exact_ground_energy(&m).unwrap()).abs() <= 1e-9);
    }
}

#[test]
fn optimization_is_reproducible_and_monotone() {
    let m = LatticeModel::new(4, 2, -0.6, 0.5).unwrap();
    let options = OptimizeOptions {
        max_iters: 25,
        ..OptimizeOptions::default()
    };
    let run = || {
        let (a, c) = build_mera(&m, block(2, 2), 7).unwrap();
        optimize(&a, &c, &build_hamiltonian(&m), &options).unwrap()
    };
    let (first, second) = (run(), run());
    let exact = exact_ground_energy(&m).unwrap();
    for (x, y) in first.runs.iter().zip(&second.runs) {
        let key = |r: &fermicone::model::TraceRecord| {
            (r.iteration, r.energy.to_bits(), r.grad_norm.to_bits())
        };
        assert!(x.trace.iter().map(key).eq(y.trace.iter().map(key)));
        assert_eq!(x.energy.to_bits(), y.energy.to_bits());
        for w in x.trace.windows(2) {
            assert!(w[1].energy <= w[0].energy);
        }
        assert!(x.energy >= exact - 1e-10);
        for g in x.circuit.gates() {
            assert!(even_unitarity_defect(g.unitary().matrix()) <= 1e-10);
        }
    }
    assert_eq!(first.runs.len(), 2);
    assert_eq!(first.runs[0].parity, Parity::Even);
}

#[test]
fn three_by_three_blocks_on_six_by_six_plan() {
    let m = LatticeModel::new(6, 6, 0.3, 0.5).unwrap();
    let (a, c) = build_mera(&m, block(3, 3), 1).unwrap();
    assert_eq!(a.layers.len(), 2);
    assert_eq!(a.layers[0].blocks.len(), 4);
    assert_eq!(a.layers[1].blocks.len(), 1);
    assert_eq!(c.n_modes(), 36);
    assert!(
        anderson_bound(&m, block(3, 3)).unwrap()
            <= energy(&c, &build_hamiltonian(&m), ContractionOptions::default()).unwrap()
    );
}
