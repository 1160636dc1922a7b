use fermicone::circuit::{
    contract_expectation_with, contract_operator, reduced_density, Circuit, ContractionOptions,
    Strategy,
};
use fermicone::fermion::{Grading, ModeOrder};
use fermicone::oracle::{global_expectation, global_jwt, statevector};
use fermicone::verify::{random_bond, random_gate, random_graded};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_circuit(rng: &mut ChaCha8Rng, n: usize, n_gates: usize, max_support: usize) -> Circuit {
    let mut gates = Vec::new();
    for t in 0..n_gates {
        let k = rng.random_range(2..=max_support.min(n));
        let mut modes: Vec<usize> = (1..=n).collect();
        modes.shuffle(rng);
        modes.truncate(k);
        gates.push(random_gate(rng, &modes, t as u64 + 1).unwrap());
    }
    let occupied: Vec<usize> = (1..=n).filter(|_| rng.random_bool(0.3)).collect();
    Circuit::new(n, gates, &occupied).unwrap()
}

fn options(strategy: Strategy) -> ContractionOptions {
    ContractionOptions {
        strategy,
        ..ContractionOptions::default()
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn bond_expectations_match_dense(seed in any::<u64>(), n in 2usize..=8, n_gates in 0usize..=8) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let c = random_circuit(&mut rng, n, n_gates, 3);
        let j = rng.random_range(1..n);
        let k = rng.random_range(j + 1..=n);
        let obs = random_bond(&mut rng, j, k);
        let dense = global_expectation(&c, &obs).unwrap();
        for strategy in [Strategy::Fused, Strategy::Stepwise] {
            let (local, _) = contract_expectation_with(&c, &obs, options(strategy)).unwrap();
            prop_assert!((local - dense).abs() <= 1e-10, "{strategy:?}: {local} vs {dense}");
        }
    }

    #[test]
    fn non_hermitian_observables_match_dense(seed in any::<u64>(), n in 2usize..=6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let c = random_circuit(&mut rng, n, 5, 2);
        let mut modes: Vec<usize> = (1..=n).collect();
        modes.shuffle(&mut rng);
        modes.truncate(rng.random_range(1..=n.min(3)));
        let order = ModeOrder::new(modes.clone()).unwrap();
        let a = random_graded(&mut rng, &order, Grading::Even).unwrap();
        let (local, _) = contract_operator(&c, &a, ContractionOptions::default()).unwrap();

        // Dense reference: ⟨ψ|A|ψ⟩ through the reduced density matrix.
        let rho = reduced_density(&c, &modes, ContractionOptions::default()).unwrap();
        let a_asc = fermicone::reorder::reorder(&a, rho.order()).unwrap();
        let via_rho = (rho.matrix().transpose().component_mul(a_asc.matrix())).sum();
        prop_assert!((local - via_rho).norm() <= 1e-10);
    }

    #[test]
    fn density_diagonal_matches_statevector(seed in any::<u64>(), n in 2usize..=7) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let c = random_circuit(&mut rng, n, 6, 2);
        let m = rng.random_range(1..=n);
        let rho = reduced_density(&c, &[m], ContractionOptions::default()).unwrap();
        let psi = statevector(&c).unwrap();
        let number = global_jwt(&fermicone::fermion::FermionPolynomial::number(m), n).unwrap();
        let filled = number.expectation(&psi).re;
        prop_assert!((rho.entry(1, 1).re - filled).abs() <= 1e-12);
        prop_assert!((rho.trace().re - 1.0).abs() <= 1e-12);
    }
}
