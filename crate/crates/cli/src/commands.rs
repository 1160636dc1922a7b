use std::time::Instant;

use fermicone::circuit::ContractionOptions;
use fermicone::model::{
    anderson_bound, build_hamiltonian, build_mera_with, energy_with_stats, free_fermion_energy,
    optimize, MeraOptions, OptimizeOptions, Parity,
};
use fermicone::oracle::{exact_ground_energy, ORACLE_CAP};
use fermicone::verify::{suite, suites};
use serde::Serialize;

use crate::config::Settings;
use crate::error::CliError;
use crate::output::Sink;

pub fn verify(name: Option<&str>, seed: u64) -> Result<(), CliError> {
    let selected = match name {
        Some(n) => vec![suite(n).ok_or_else(|| {
            let known: Vec<&str> = suites().iter().map(|s| s.name).collect();
            CliError::Config(format!("unknown suite {n:?}; known: {}", known.join(", ")))
        })?],
        None => suites(),
    };
    let mut failed = false;
    for s in selected {
        let r = s.run(seed);
        match &r.failure {
            None => println!(
                "PASS {} cases={} max_error={:e} tolerance={:e}",
                r.name, r.cases, r.max_error, r.tolerance
            ),
            Some((case_seed, detail)) => {
                failed = true;
                println!("FAIL {} seed={case_seed} {detail}", r.name);
                eprintln!(
                    "suite {} failed; rerun with --suite {} --seed {case_seed}",
                    r.name, r.name
                );
            }
        }
    }
    if failed {
        Err(CliError::Verify)
    } else {
        Ok(())
    }
}

fn contraction(s: &Settings) -> ContractionOptions {
    ContractionOptions {
        width_cap: s.width_cap,
        ..ContractionOptions::default()
    }
}

fn mera_options(s: &Settings) -> MeraOptions {
    MeraOptions {
        max_degree: s.degree,
        init_std: s.init_std,
    }
}

#[derive(Serialize)]
struct EnergyRecord {
    record: &'static str,
    parity: String,
    iteration: usize,
    energy: f64,
    grad_norm: f64,
    wall_time: Option<f64>,
    converged: Option<bool>,
    anderson_bound: Option<f64>,
    exact_energy: Option<f64>,
    free_energy: Option<f64>,
}

pub fn energy(s: &Settings) -> Result<(), CliError> {
    let block = s.require_block()?;
    let m = &s.model;
    let (ansatz, circuit) = build_mera_with(m, block, s.seed, &mera_options(s))?;
    if let Some(g) = ansatz.gates.iter().find(|g| g.support.len() > s.width_cap) {
        return Err(CliError::Resource(format!(
            "a {}-mode gate exceeds the width cap of {}",
            g.support.len(),
            s.width_cap
        )));
    }
    let bound = anderson_bound(m, block)?;
    let exact = if m.n_modes() <= ORACLE_CAP {
        Some(exact_ground_energy(m)?)
    } else {
        None
    };
    let free = if m.u == 0.0 {
        Some(free_fermion_energy(m)?)
    } else {
        None
    };

    let options = OptimizeOptions {
        max_iters: s.max_iters,
        step: s.step,
        tol: s.tol,
        gradient: s.gradient,
        parities: s.parities.clone(),
        contraction: contraction(s),
        ..OptimizeOptions::default()
    };
    let clock = Instant::now();
    let result = optimize(&ansatz, &circuit, &build_hamiltonian(m), &options)?;
    let total = clock.elapsed().as_secs_f64();

    let mut sink = Sink::open(s.out.as_deref(), s.format)?;
    for run in &result.runs {
        for r in &run.trace {
            sink.write(&EnergyRecord {
                record: "iteration",
                parity: run.parity.to_string(),
                iteration: r.iteration,
                energy: r.energy,
                grad_norm: r.grad_norm,
                wall_time: s.timing.then_some(r.wall_time),
                converged: None,
                anderson_bound: None,
                exact_energy: None,
                free_energy: None,
            })?;
        }
    }
    let best = result.best();
    let last = best.trace.last().expect("a descent records its start");
    sink.write(&EnergyRecord {
        record: "summary",
        parity: best.parity.to_string(),
        iteration: last.iteration,
        energy: best.energy,
        grad_norm: last.grad_norm,
        wall_time: s.timing.then_some(total),
        converged: Some(best.converged),
        anderson_bound: Some(bound),
        exact_energy: exact,
        free_energy: free,
    })?;
    sink.finish()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Quantity {
    Ed,
    Free,
    Anderson,
}

#[derive(Serialize)]
struct OracleRecord {
    quantity: &'static str,
    lattice: String,
    t: f64,
    u: f64,
    block: Option<String>,
    value: f64,
}

pub fn oracle(q: Quantity, s: &Settings) -> Result<(), CliError> {
    let m = &s.model;
    let (name, block, value) = match q {
        Quantity::Ed => ("ed", None, exact_ground_energy(m)?),
        Quantity::Free => ("free", None, free_fermion_energy(m)?),
        Quantity::Anderson => {
            let b = s.require_block()?;
            ("anderson", Some(b.to_string()), anderson_bound(m, b)?)
        }
    };
    let mut sink = Sink::open(s.out.as_deref(), s.format)?;
    sink.write(&OracleRecord {
        quantity: name,
        lattice: s.lattice.to_string(),
        t: m.t,
        u: m.u,
        block,
        value,
    })?;
    sink.finish()
}

#[derive(Serialize)]
struct BenchRecord {
    lattice: String,
    block: String,
    parity: String,
    terms: usize,
    reps: usize,
    energy: f64,
    max_width: usize,
    peak_entries: usize,
    seconds: f64,
    ops_per_sec: f64,
    terms_per_sec: f64,
}

/// Times repeated energy evaluations of the initial ansatz.
pub fn bench(s: &Settings) -> Result<(), CliError> {
    let block = s.require_block()?;
    let (ansatz, circuit) = build_mera_with(&s.model, block, s.seed, &mera_options(s))?;
    let parity = s.parities.first().copied().unwrap_or(Parity::Even);
    let circuit = circuit.with_reference(&ansatz.reference(parity))?;
    let terms = build_hamiltonian(&s.model);
    let (e, stats) = energy_with_stats(&circuit, &terms, contraction(s))?;
    let clock = Instant::now();
    for _ in 0..s.reps {
        energy_with_stats(&circuit, &terms, contraction(s))?;
    }
    let seconds = clock.elapsed().as_secs_f64();
    let mut sink = Sink::open(s.out.as_deref(), s.format)?;
    sink.write(&BenchRecord {
        lattice: s.lattice.to_string(),
        block: block.to_string(),
        parity: parity.to_string(),
        terms: terms.len(),
        reps: s.reps,
        energy: e,
        max_width: stats.max_width,
        peak_entries: stats.peak_entries,
        seconds,
        ops_per_sec: s.reps as f64 / seconds,
        terms_per_sec: (s.reps * terms.len()) as f64 / seconds,
    })?;
    sink.finish()
}
