//! Randomized property suites over the whole crate.
//!
//! Every suite draws its cases from `ChaCha8` streams: case `i` of a run
//! with seed `s` is seeded with `s + i`, so a failing case is replayed as
//! case 0 of a run with its own seed. Suites over fixed model tables use
//! the stream only to seed their ansatz.

use std::collections::BTreeSet;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::circuit::{
    causal_cone, contract_expectation, Circuit, ContractionOptions, FermionGate, PreparedCircuit,
};
use crate::error::Result;
use crate::fermion::{FermionPolynomial, Grading, LadderOp, ModeOrder, OrderedOperator};
use crate::model::{
    anderson_bound, build_hamiltonian, build_mera_with, free_fermion_energy, optimize, BlockShape,
    GeneratorBasis, LatticeModel, MeraOptions, OptimizeOptions,
};
use crate::oracle::{exact_ground_energy, global_expectation, global_jwt, GlobalOperator};
use crate::reorder::{
    align_supports, partial_project, partial_trace, prepend_mode, reorder, SwapMatrix,
};

/// Outcome of one suite.
#[derive(Clone, Debug, PartialEq)]
pub struct SuiteReport {
    pub name: &'static str,
    pub cases: usize,
    /// Largest deviation seen, against `tolerance`.
    pub max_error: f64,
    pub tolerance: f64,
    /// Seed and description of the first failing case.
    pub failure: Option<(u64, String)>,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.failure.is_none()
    }
}

/// Case `index` of a suite, drawing from its own stream.
type Case = fn(usize, &mut ChaCha8Rng) -> Result<CaseOutcome>;

/// Deviation of one case and what it was about.
struct CaseOutcome {
    error: f64,
    detail: String,
}

/// A named suite with its case count and tolerance.
#[derive(Clone, Copy)]
pub struct Suite {
    pub name: &'static str,
    pub cases: usize,
    pub tolerance: f64,
    run: Case,
}

impl Suite {
    pub fn run(&self, seed: u64) -> SuiteReport {
        let mut report = SuiteReport {
            name: self.name,
            cases: self.cases,
            max_error: 0.0,
            tolerance: self.tolerance,
            failure: None,
        };
        for i in 0..self.cases {
            let case_seed = seed.wrapping_add(i as u64);
            let mut rng = ChaCha8Rng::seed_from_u64(case_seed);
            let bad = match (self.run)(i, &mut rng) {
                Ok(out) => {
                    report.max_error = report.max_error.max(out.error);
                    (out.error.is_nan() || out.error > self.tolerance)
                        .then(|| format!("{}: deviation {:e}", out.detail, out.error))
                }
                Err(e) => Some(format!("error: {e}")),
            };
            if let Some(msg) = bad {
                report.failure = Some((case_seed, msg));
                break;
            }
        }
        report
    }
}

/// All suites in run order.
pub fn suites() -> Vec<Suite> {
    vec![
        Suite {
            name: "local-global",
            cases: 100,
            tolerance: 1e-10,
            run: local_global_case,
        },
        Suite {
            name: "primitives",
            cases: 200,
            tolerance: 1e-12,
            run: primitives_case,
        },
        Suite {
            name: "cone",
            cases: 50,
            tolerance: 0.0,
            run: cone_case,
        },
        Suite {
            name: "jwt",
            cases: 50,
            tolerance: 1e-12,
            run: jwt_case,
        },
        Suite {
            name: "free",
            cases: free_shapes().len(),
            tolerance: 1e-9,
            run: free_case,
        },
        Suite {
            name: "sandwich",
            cases: 12,
            tolerance: 1e-9,
            run: sandwich_case,
        },
        Suite {
            name: "single-gate",
            cases: SINGLE_GATE_CASES.len(),
            tolerance: 1e-6,
            run: single_gate_case,
        },
    ]
}

pub fn suite(name: &str) -> Option<Suite> {
    suites().into_iter().find(|s| s.name == name)
}

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    rng.sample(StandardNormal)
}

/// `exp(iG)` with `G` a normal combination of the even generators on `modes`.
pub fn random_gate(rng: &mut ChaCha8Rng, modes: &[usize], time: u64) -> Result<FermionGate> {
    let basis = GeneratorBasis::new(&ModeOrder::ascending(modes.iter().copied()), 2)?;
    let mut g = FermionPolynomial::zero();
    for b in basis.elements() {
        g = g + b.poly().scale(c(normal(rng)));
    }
    FermionGate::from_generator(g, time)
}

/// A hermitian even bond term on `(j, k)`: hopping, pairing, densities.
pub fn random_bond(rng: &mut ChaCha8Rng, j: usize, k: usize) -> FermionPolynomial {
    let hop = FermionPolynomial::term(
        Complex64::new(normal(rng), normal(rng)),
        [LadderOp::create(j), LadderOp::annihilate(k)],
    );
    let pair = FermionPolynomial::term(
        Complex64::new(normal(rng), normal(rng)),
        [LadderOp::create(j), LadderOp::create(k)],
    );
    let nn = FermionPolynomial::number(j) * FermionPolynomial::number(k);
    hop.clone()
        + hop.adjoint()
        + pair.clone()
        + pair.adjoint()
        + FermionPolynomial::number(j).scale(c(normal(rng)))
        + FermionPolynomial::number(k).scale(c(normal(rng)))
        + nn.scale(c(normal(rng)))
}

fn distinct_pair(rng: &mut ChaCha8Rng, n: usize) -> (usize, usize) {
    let j = rng.random_range(1..=n);
    let mut k = rng.random_range(1..n);
    if k >= j {
        k += 1;
    }
    (j, k)
}

/// Random operator of definite grading on `order`.
pub fn random_graded(
    rng: &mut ChaCha8Rng,
    order: &ModeOrder,
    grading: Grading,
) -> Result<OrderedOperator> {
    let d = order.dim();
    let want = if grading == Grading::Odd { 1 } else { 0 };
    let m = DMatrix::from_fn(d, d, |r, col| {
        if (r.count_ones() + col.count_ones()) % 2 == want {
            Complex64::new(normal(rng), normal(rng))
        } else {
            c(0.0)
        }
    });
    OrderedOperator::new(order.clone(), m)
}

fn random_order(rng: &mut ChaCha8Rng, n_max: usize, pool: usize) -> ModeOrder {
    let len = rng.random_range(1..=n_max);
    let mut modes: Vec<usize> = (1..=pool).collect();
    modes.shuffle(rng);
    modes.truncate(len);
    ModeOrder::new(modes).expect("distinct modes")
}

fn local_global_case(_: usize, rng: &mut ChaCha8Rng) -> Result<CaseOutcome> {
    let n = rng.random_range(2..=8);
    let n_gates = rng.random_range(0..=6);
    let mut gates = Vec::with_capacity(n_gates);
    for t in 0..n_gates {
        let (j, k) = distinct_pair(rng, n);
        gates.push(random_gate(rng, &[j, k], t as u64 + 1)?);
    }
    let occupied: Vec<usize> = (1..=n).filter(|_| rng.random_bool(0.3)).collect();
    let circuit = Circuit::new(n, gates, &occupied)?;
    let (j, k) = distinct_pair(rng, n);
    let obs = random_bond(rng, j, k);
    let local = contract_expectation(&circuit, &obs)?;
    let dense = global_expectation(&circuit, &obs)?;
    Ok(CaseOutcome {
        error: (local - dense).abs(),
        detail: format!("n={n} gates={n_gates} bond=({j},{k})"),
    })
}

fn primitives_case(_: usize, rng: &mut ChaCha8Rng) -> Result<CaseOutcome> {
    let order = random_order(rng, 4, 6);
    let grading = if rng.random_bool(0.5) {
        Grading::Even
    } else {
        Grading::Odd
    };
    let a = random_graded(rng, &order, grading)?;
    let mut detail = format!("order={:?} {grading:?}", order.modes());

    let s = SwapMatrix.matrix();
    if &s * &s != DMatrix::identity(4, 4) {
        return Ok(CaseOutcome {
            error: f64::INFINITY,
            detail: "swap is not an involution".into(),
        });
    }

    let mut shuffled = order.modes().to_vec();
    shuffled.shuffle(rng);
    let back = reorder(&reorder(&a, &ModeOrder::new(shuffled)?)?, &order)?;
    if back != a {
        detail.push_str(", reorder round trip");
        return Ok(CaseOutcome {
            error: f64::INFINITY,
            detail,
        });
    }

    let p = prepend_mode(&a, 7)?;
    let d = a.dim();
    let lower = if grading == Grading::Odd { -1.0 } else { 1.0 };
    let m = p.matrix();
    let blocks_ok = m.view((0, 0), (d, d)) == a.matrix().view((0, 0), (d, d))
        && m.view((d, d), (d, d)).into_owned() == a.matrix().scale(lower)
        && m.view((0, d), (d, d)).iter().all(|z| *z == c(0.0))
        && m.view((d, 0), (d, d)).iter().all(|z| *z == c(0.0));
    if !blocks_ok {
        detail.push_str(", prepend blocks");
        return Ok(CaseOutcome {
            error: f64::INFINITY,
            detail,
        });
    }

    let mode = order.modes()[rng.random_range(0..order.len())];
    let traced = partial_trace(&a, mode)?;
    let split =
        partial_project(&a, mode, false)?.matrix() + partial_project(&a, mode, true)?.matrix();
    if &split != traced.matrix() {
        detail.push_str(&format!(
            ", projections do not sum to the trace over {mode}"
        ));
        return Ok(CaseOutcome {
            error: f64::INFINITY,
            detail,
        });
    }

    if order.len() == 1 {
        let err = (a.trace() - traced.matrix()[(0, 0)]).norm();
        return Ok(CaseOutcome { error: err, detail });
    }
    let rest = ModeOrder::new(
        order
            .modes()
            .iter()
            .copied()
            .filter(|&m| m != mode)
            .collect(),
    )?;
    let b = random_graded(rng, &rest, Grading::Even)?;
    let (a2, b2) = align_supports(&a, &b)?;
    let full = a2.mul(&b2)?.trace();
    let reduced = reorder(&traced, &rest)?.mul(&b)?.trace();
    detail.push_str(&format!(", trace over {mode}"));
    Ok(CaseOutcome {
        error: (full - reduced).norm(),
        detail,
    })
}

/// Random circuit topology with two- and three-mode gates.
fn random_topology(rng: &mut ChaCha8Rng) -> Result<Circuit> {
    let n = rng.random_range(3..=10);
    let n_gates = rng.random_range(1..=12);
    let mut gates = Vec::with_capacity(n_gates);
    for t in 0..n_gates {
        let k = rng.random_range(2..=3.min(n));
        let mut modes: Vec<usize> = (1..=n).collect();
        modes.shuffle(rng);
        modes.truncate(k);
        gates.push(random_gate(rng, &modes, t as u64 + 1)?);
    }
    Circuit::vacuum(n, gates)
}

fn cone_case(_: usize, rng: &mut ChaCha8Rng) -> Result<CaseOutcome> {
    let circuit = random_topology(rng)?;
    let support = random_order(rng, 2, circuit.n_modes());
    let obs = random_graded(rng, &support, Grading::Even)?;
    let prepared = PreparedCircuit::new(&circuit, ContractionOptions::default());
    let (_, stats) = prepared.expectation_operator(&obs)?;
    let engine: BTreeSet<usize> = stats.gates.into_iter().collect();
    let cone: BTreeSet<usize> = causal_cone(&circuit, support.modes())?
        .gates()
        .into_iter()
        .collect();
    Ok(CaseOutcome {
        error: if engine == cone { 0.0 } else { 1.0 },
        detail: format!(
            "support {:?}: engine {engine:?}, cone {cone:?}",
            support.modes()
        ),
    })
}

fn max_entry(op: &GlobalOperator) -> f64 {
    op.triplets()
        .iter()
        .map(|&(_, _, v)| v.norm())
        .fold(0.0, f64::max)
}

fn jwt_case(_: usize, rng: &mut ChaCha8Rng) -> Result<CaseOutcome> {
    let n = rng.random_range(2..=6);
    let (j, k) = distinct_pair(rng, n);
    let p = random_bond(rng, j, k);
    let (a, b) = distinct_pair(rng, n);
    let q = random_bond(rng, a, b);
    let product = global_jwt(&(p.clone() * q.clone()), n)?;
    let composed = global_jwt(&p, n)?.matmul(&global_jwt(&q, n)?);
    let hom = max_entry(&product.add(&composed.scale(c(-1.0))));
    let fj = global_jwt(&FermionPolynomial::annihilate(j), n)?;
    let fk = global_jwt(&FermionPolynomial::create(k), n)?;
    let anti = max_entry(&fj.matmul(&fk).add(&fk.matmul(&fj)));
    let fd = global_jwt(&FermionPolynomial::create(j), n)?;
    let canon = max_entry(
        &fj.matmul(&fd)
            .add(&fd.matmul(&fj))
            .add(&GlobalOperator::identity(n).scale(c(-1.0))),
    );
    Ok(CaseOutcome {
        error: hom.max(anti).max(canon),
        detail: format!("n={n} modes ({j},{k})"),
    })
}

/// Every `width × height` grid with at most this many sites.
const FREE_MAX_SITES: usize = 12;
const FREE_T: [f64; 3] = [-0.6, 0.3, 1.0];

fn free_shapes() -> Vec<(usize, usize)> {
    (1..=FREE_MAX_SITES)
        .flat_map(|w| (1..=FREE_MAX_SITES / w).map(move |h| (w, h)))
        .collect()
}

fn free_case(index: usize, _: &mut ChaCha8Rng) -> Result<CaseOutcome> {
    let (w, h) = free_shapes()[index];
    let t = FREE_T[index % FREE_T.len()];
    let m = LatticeModel::new(w, h, t, 0.0)?;
    let free = free_fermion_energy(&m)?;
    let exact = exact_ground_energy(&m)?;
    Ok(CaseOutcome {
        error: (free - exact).abs(),
        detail: format!("{w}x{h} t={t}"),
    })
}

/// Both parities with one gate on the whole lattice.
fn single_gate_energy(m: &LatticeModel, seed: u64) -> Result<f64> {
    let block = BlockShape::new(m.width, m.height)?;
    let mera = MeraOptions {
        max_degree: Some(4),
        ..MeraOptions::default()
    };
    let (ansatz, circuit) = build_mera_with(m, block, seed, &mera)?;
    let options = OptimizeOptions {
        max_iters: 2000,
        tol: 1e-9,
        ..OptimizeOptions::default()
    };
    Ok(
        optimize(&ansatz, &circuit, &build_hamiltonian(m), &options)?
            .best()
            .energy,
    )
}

const SANDWICH_LATTICES: [(usize, usize); 2] = [(2, 2), (2, 3)];
const SANDWICH_T: [f64; 2] = [-0.6, 0.3];
const SANDWICH_U: [f64; 3] = [0.0, 0.5, -0.5];

fn sandwich_case(index: usize, rng: &mut ChaCha8Rng) -> Result<CaseOutcome> {
    let (w, h) = SANDWICH_LATTICES[index / 6];
    let t = SANDWICH_T[(index / 3) % 2];
    let u = SANDWICH_U[index % 3];
    let m = LatticeModel::new(w, h, t, u)?;
    let bound = anderson_bound(&m, BlockShape::new(2, 1)?)?;
    let exact = exact_ground_energy(&m)?;
    let variational = single_gate_energy(&m, rng.random())?;
    Ok(CaseOutcome {
        error: (bound - exact).max(exact - variational).max(0.0),
        detail: format!(
            "{w}x{h} t={t} u={u}: bound {bound}, exact {exact}, optimized {variational}"
        ),
    })
}

const SINGLE_GATE_CASES: [(usize, usize, f64, f64); 4] = [
    (1, 2, -0.6, 0.5),
    (1, 2, 0.3, -0.5),
    (2, 2, -0.6, 0.5),
    (2, 2, 0.3, -0.5),
];

fn single_gate_case(index: usize, rng: &mut ChaCha8Rng) -> Result<CaseOutcome> {
    let (w, h, t, u) = SINGLE_GATE_CASES[index];
    let m = LatticeModel::new(w, h, t, u)?;
    let exact = exact_ground_energy(&m)?;
    let variational = single_gate_energy(&m, rng.random())?;
    Ok(CaseOutcome {
        error: (variational - exact).abs(),
        detail: format!("{w}x{h} t={t} u={u}: exact {exact}, optimized {variational}"),
    })
}
