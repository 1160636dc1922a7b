use std::time::Instant;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

use super::{HamiltonianTerm, MeraAnsatz, Parity};
use crate::circuit::{
    observable_operator, Circuit, ContractionOptions, ContractionStats, FermionGate,
    PreparedCircuit, TermPlan,
};
use crate::error::{Error, Result};
use crate::fermion::{Grading, OrderedOperator};
use crate::linalg::{self, EvenSpectral, Form};

/// Accepted steps must lower the energy by at least this fraction of the
/// first-order prediction.
const ARMIJO: f64 = 1e-4;
const MIN_STEP: f64 = 1e-12;
const REUNITARIZE_ABOVE: f64 = 1e-13;

/// `Σ_terms ⟨ψ|h|ψ⟩`, terms contracted in parallel and summed in order.
pub fn energy(c: &Circuit, terms: &[HamiltonianTerm], options: ContractionOptions) -> Result<f64> {
    energy_with_stats(c, terms, options).map(|(e, _)| e)
}

pub fn energy_with_stats(
    c: &Circuit,
    terms: &[HamiltonianTerm],
    options: ContractionOptions,
) -> Result<(f64, ContractionStats)> {
    let prepared = PreparedCircuit::new(c, options);
    let parts = terms
        .par_iter()
        .map(|t| prepared.expectation(&t.poly))
        .collect::<Result<Vec<_>>>()?;
    let mut stats = ContractionStats::default();
    let mut total = 0.0;
    for (v, s) in &parts {
        total += v;
        stats.max_width = stats.max_width.max(s.max_width);
        stats.peak_entries = stats.peak_entries.max(s.peak_entries);
    }
    if !total.is_finite() {
        return Err(Error::NonFiniteEnergy);
    }
    Ok((total, stats))
}

/// How `∂E/∂c_b` is obtained.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum GradientMethod {
    /// Exact derivative from one reverse sweep per term: every gate gets an
    /// environment `E` with `∂E/∂c_b = −2 Im tr(E U B_b)`.
    #[default]
    Adjoint,
    /// Central differences with step `fd_step`, two partial contractions per
    /// coefficient and term.
    FiniteDifference,
}

#[derive(Clone, Debug, PartialEq)]
pub struct OptimizeOptions {
    pub max_iters: usize,
    /// Initial line-search step.
    pub step: f64,
    /// Stop once the gradient norm drops below this.
    pub tol: f64,
    pub gradient: GradientMethod,
    /// Central finite-difference step.
    pub fd_step: f64,
    pub parities: Vec<Parity>,
    pub contraction: ContractionOptions,
}

impl Default for OptimizeOptions {
    fn default() -> Self {
        Self {
            max_iters: 200,
            step: 0.5,
            tol: 1e-6,
            gradient: GradientMethod::Adjoint,
            fd_step: 1e-5,
            parities: vec![Parity::Even, Parity::Odd],
            contraction: ContractionOptions::default(),
        }
    }
}

impl OptimizeOptions {
    fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::InvalidOptions(format!(
                    "{name} must be positive and finite, got {v}"
                )))
            }
        };
        positive("step", self.step)?;
        positive("fd_step", self.fd_step)?;
        if !(self.tol.is_finite() && self.tol >= 0.0) {
            return Err(Error::InvalidOptions(format!(
                "tol must be non-negative, got {}",
                self.tol
            )));
        }
        if self.parities.is_empty() {
            return Err(Error::InvalidOptions("no parity sector requested".into()));
        }
        Ok(())
    }
}

/// One accepted point of a descent.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TraceRecord {
    pub iteration: usize,
    pub energy: f64,
    pub grad_norm: f64,
    /// Seconds since the descent started; the only non-reproducible field.
    pub wall_time: f64,
}

#[derive(Clone, Debug)]
pub struct ParityRun {
    pub parity: Parity,
    pub circuit: Circuit,
    pub energy: f64,
    pub trace: Vec<TraceRecord>,
    /// Gradient norm fell below the tolerance.
    pub converged: bool,
}

#[derive(Clone, Debug)]
pub struct Optimized {
    pub runs: Vec<ParityRun>,
    best: usize,
}

impl Optimized {
    /// Lowest final energy; the first requested parity wins ties.
    pub fn best(&self) -> &ParityRun {
        &self.runs[self.best]
    }
}

struct TermCache {
    plan: TermPlan,
    states: Vec<OrderedOperator>,
}

impl TermCache {
    fn value(&self) -> Complex64 {
        self.states
            .last()
            .and_then(OrderedOperator::as_scalar)
            .expect("contracted to a scalar")
    }
}

struct Descent<'a> {
    ansatz: &'a MeraAnsatz,
    ops: Vec<OrderedOperator>,
    options: &'a OptimizeOptions,
}

impl Descent<'_> {
    fn caches(&self, c: &Circuit) -> Result<(Vec<TermCache>, f64)> {
        let prepared = PreparedCircuit::new(c, self.options.contraction);
        let caches = self
            .ops
            .par_iter()
            .map(|op| {
                let plan = prepared.plan(op)?;
                let states = prepared.states(&plan, &mut ContractionStats::default())?;
                Ok(TermCache { plan, states })
            })
            .collect::<Result<Vec<_>>>()?;
        let e: f64 = caches.iter().map(|t| t.value().re).sum();
        if !e.is_finite() {
            return Err(Error::NonFiniteEnergy);
        }
        Ok((caches, e))
    }

    /// `∂E/∂c_b` for `U_g ← U_g exp(i c_b B_b)` at `c = 0`, indexed gate
    /// after gate, element after element.
    fn gradient(&self, c: &Circuit, caches: &[TermCache]) -> Result<Vec<f64>> {
        match self.options.gradient {
            GradientMethod::Adjoint => self.adjoint_gradient(c, caches),
            GradientMethod::FiniteDifference => self.fd_gradient(c, caches),
        }
    }

    fn adjoint_gradient(&self, c: &Circuit, caches: &[TermCache]) -> Result<Vec<f64>> {
        let prepared = PreparedCircuit::new(c, self.options.contraction);
        let per_term = caches
            .par_iter()
            .map(|t| prepared.environments(&t.plan, &t.states))
            .collect::<Result<Vec<_>>>()?;
        let mut envs: Vec<Option<DMatrix<Complex64>>> = vec![None; c.gates().len()];
        for (g, e) in per_term.into_iter().flatten() {
            match &mut envs[g] {
                Some(acc) => *acc += e,
                slot => *slot = Some(e),
            }
        }
        let per_gate: Vec<Vec<f64>> = self
            .ansatz
            .gates
            .par_iter()
            .zip(envs.par_iter())
            .enumerate()
            .map(|(g, (spec, env))| match env {
                None => vec![0.0; spec.basis.len()],
                Some(env) => {
                    // `env` holds the rows of E at the gate inputs; every
                    // other row of E U vanishes.
                    let m =
                        linalg::mul(env, Form::Plain, c.gate(g).unitary().matrix(), Form::Plain);
                    let mut row_of = vec![None; m.ncols()];
                    for (i, &y) in prepared.inputs(g).iter().enumerate() {
                        row_of[y] = Some(i);
                    }
                    spec.basis
                        .elements()
                        .iter()
                        .map(|b| {
                            let t: Complex64 = b
                                .entries()
                                .iter()
                                .filter_map(|&(r, col, v)| row_of[col].map(|i| m[(i, r)] * v))
                                .sum();
                            -2.0 * t.im
                        })
                        .collect()
                }
            })
            .collect();
        Ok(per_gate.concat())
    }

    fn fd_gradient(&self, c: &Circuit, caches: &[TermCache]) -> Result<Vec<f64>> {
        let prepared = PreparedCircuit::new(c, self.options.contraction);
        let mut touching: Vec<Vec<(usize, usize)>> = vec![Vec::new(); c.gates().len()];
        for (t, cache) in caches.iter().enumerate() {
            for (j, &g) in cache.plan.steps.iter().enumerate() {
                touching[g].push((t, j));
            }
        }
        let params: Vec<(usize, usize)> = self
            .ansatz
            .gates
            .iter()
            .enumerate()
            .flat_map(|(g, spec)| (0..spec.basis.len()).map(move |b| (g, b)))
            .collect();
        let h = self.options.fd_step;
        params
            .par_iter()
            .map(|&(g, b)| {
                if touching[g].is_empty() {
                    return Ok(0.0);
                }
                let u = c.gate(g).unitary().matrix();
                let element = &self.ansatz.gates[g].basis.elements()[b];
                let up = element.rotate_right(u, h);
                let down = element.rotate_right(u, -h);
                let mut diff = 0.0;
                for &(t, j) in &touching[g] {
                    let cache = &caches[t];
                    let plus = prepared.finish_with(&cache.plan, j, &cache.states[j], &up)?;
                    let minus = prepared.finish_with(&cache.plan, j, &cache.states[j], &down)?;
                    diff += plus.re - minus.re;
                }
                Ok(diff / (2.0 * h))
            })
            .collect()
    }

    fn run(&self, start: Circuit, parity: Parity) -> Result<ParityRun> {
        let clock = Instant::now();
        let mut circuit = start;
        let (mut caches, mut e) = self.caches(&circuit)?;
        let mut trace = Vec::new();
        let mut alpha = self.options.step;
        let mut converged = false;
        for iteration in 0..=self.options.max_iters {
            let grad = self.gradient(&circuit, &caches)?;
            let norm_sq: f64 = grad.iter().map(|g| g * g).sum();
            let grad_norm = norm_sq.sqrt();
            trace.push(TraceRecord {
                iteration,
                energy: e,
                grad_norm,
                wall_time: clock.elapsed().as_secs_f64(),
            });
            if grad_norm < self.options.tol {
                converged = true;
                break;
            }
            if iteration == self.options.max_iters {
                break;
            }
            let directions = self.directions(&grad);
            let mut accepted = None;
            while alpha >= MIN_STEP {
                let candidate = self.moved(&circuit, &directions, alpha)?;
                let (cand_caches, cand_e) = self.caches(&candidate)?;
                if cand_e <= e - ARMIJO * alpha * norm_sq {
                    accepted = Some((candidate, cand_caches, cand_e));
                    break;
                }
                alpha *= 0.5;
            }
            match accepted {
                Some((mut c, cc, ce)) => {
                    if self.reunitarize(&mut c)? {
                        let (rc, re) = self.caches(&c)?;
                        if re > e {
                            break;
                        }
                        (caches, e) = (rc, re);
                    } else {
                        (caches, e) = (cc, ce);
                    }
                    circuit = c;
                    alpha *= 2.0;
                }
                None => break,
            }
        }
        Ok(ParityRun {
            parity,
            circuit,
            energy: e,
            trace,
            converged,
        })
    }

    /// Per gate, the spectral form of `Σ_b grad_b B_b` (or nothing when the
    /// gate's gradient vanishes).
    fn directions(&self, grad: &[f64]) -> Vec<Option<EvenSpectral>> {
        let mut offset = 0;
        let slices: Vec<(usize, usize)> = self
            .ansatz
            .gates
            .iter()
            .map(|g| {
                let s = (offset, g.basis.len());
                offset += g.basis.len();
                s
            })
            .collect();
        self.ansatz
            .gates
            .par_iter()
            .zip(slices)
            .map(|(spec, (off, len))| {
                let coeffs = &grad[off..off + len];
                if coeffs.iter().all(|&c| c == 0.0) {
                    None
                } else {
                    Some(EvenSpectral::new(&spec.basis.combine(coeffs)))
                }
            })
            .collect()
    }

    /// `U_g ← U_g exp(−iα G_g)` for every gate.
    fn moved(
        &self,
        c: &Circuit,
        directions: &[Option<EvenSpectral>],
        alpha: f64,
    ) -> Result<Circuit> {
        let mut out = c.clone();
        let updates: Vec<Option<FermionGate>> = directions
            .par_iter()
            .enumerate()
            .map(|(g, dir)| {
                dir.as_ref().map(|d| {
                    let gate = c.gate(g);
                    let u = d.rotate(gate.unitary().matrix(), -alpha);
                    let op = OrderedOperator::from_parts(gate.support().clone(), u, Grading::Even);
                    FermionGate::from_trusted_unitary(op, gate.time())
                })
            })
            .collect();
        for (g, u) in updates.into_iter().enumerate() {
            if let Some(gate) = u {
                out.replace_gate(g, gate)?;
            }
        }
        Ok(out)
    }

    /// Polishes gates whose unitarity defect exceeds the threshold; `true`
    /// when anything changed.
    fn reunitarize(&self, c: &mut Circuit) -> Result<bool> {
        let fixes: Vec<Option<FermionGate>> = c
            .gates()
            .par_iter()
            .map(|gate| {
                let u = gate.unitary().matrix();
                (linalg::even_unitarity_defect(u) > REUNITARIZE_ABOVE).then(|| {
                    let mut u = u.clone();
                    linalg::reunitarize_even(&mut u, REUNITARIZE_ABOVE);
                    let op = OrderedOperator::from_parts(gate.support().clone(), u, Grading::Even);
                    FermionGate::from_trusted_unitary(op, gate.time())
                })
            })
            .collect();
        let mut changed = false;
        for (g, fix) in fixes.into_iter().enumerate() {
            if let Some(gate) = fix {
                c.replace_gate(g, gate)?;
                changed = true;
            }
        }
        Ok(changed)
    }
}

/// Gradient descent on every gate of the ansatz, once per requested
/// reference parity.
pub fn optimize(
    ansatz: &MeraAnsatz,
    circuit: &Circuit,
    terms: &[HamiltonianTerm],
    options: &OptimizeOptions,
) -> Result<Optimized> {
    options.validate()?;
    if circuit.gates().len() != ansatz.gates.len() {
        return Err(Error::InvalidCircuit(
            "circuit does not match the ansatz".into(),
        ));
    }
    let ops = terms
        .iter()
        .map(|t| observable_operator(&t.poly))
        .collect::<Result<Vec<_>>>()?;
    let descent = Descent {
        ansatz,
        ops,
        options,
    };
    let mut runs = Vec::with_capacity(options.parities.len());
    for &parity in &options.parities {
        let start = circuit.with_reference(&ansatz.reference(parity))?;
        runs.push(descent.run(start, parity)?);
    }
    let best = (0..runs.len())
        .min_by(|&a, &b| runs[a].energy.total_cmp(&runs[b].energy))
        .expect("at least one parity");
    Ok(Optimized { runs, best })
}
