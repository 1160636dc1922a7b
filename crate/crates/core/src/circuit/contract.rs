use nalgebra::DMatrix;
use num_complex::Complex64;

use super::Circuit;
use crate::error::{Error, Result};
use crate::fermion::{represent_polynomial, FermionPolynomial, ModeOrder, OrderedOperator};
use crate::linalg::{gemm, mul, Form};
use crate::reorder::{
    align_supports, conjugate, partial_project, reorder, BasisPermutation, ReorderPlan,
};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Default cap on the number of modes a single contraction step may span.
pub const DEFAULT_WIDTH_CAP: usize = 14;

/// Observable coefficients below this asymmetry count as hermitian.
const HERMITIAN_TOL: f64 = 1e-12;

/// How one backward step is evaluated.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Strategy {
    /// Conjugation and vacuum projection in one pass; never builds the full
    /// `|S∪G|`-mode conjugated operator when some mode leaves at this gate.
    #[default]
    Fused,
    /// Literal `align_supports`, `conjugate`, then one `partial_project` per
    /// departing mode.
    Stepwise,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ContractionOptions {
    pub width_cap: usize,
    pub strategy: Strategy,
}

impl Default for ContractionOptions {
    fn default() -> Self {
        Self {
            width_cap: DEFAULT_WIDTH_CAP,
            strategy: Strategy::Fused,
        }
    }
}

/// What a contraction touched.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ContractionStats {
    /// Gate indices in the order they were conjugated (last gate first).
    pub gates: Vec<usize>,
    /// Largest `|S ∪ G|` met, or the observable width if larger.
    pub max_width: usize,
    /// Entry count of the largest intermediate matrix.
    pub peak_entries: usize,
}

impl ContractionStats {
    fn note(&mut self, entries: usize) {
        self.peak_entries = self.peak_entries.max(entries);
    }

    fn merge(&mut self, other: &ContractionStats) {
        self.max_width = self.max_width.max(other.max_width);
        self.peak_entries = self.peak_entries.max(other.peak_entries);
    }
}

#[derive(Clone, Debug)]
struct PreparedGate {
    /// Modes first touched by this gate whose reference is empty.
    vacuum_exits: Vec<usize>,
    /// Same, with filled reference.
    occupied_exits: Vec<usize>,
    /// Basis indices (gate order) with every vacuum exit empty.
    inputs: Vec<usize>,
}

/// Per-term schedule: the observable after the initial projections and the
/// gates it meets.
#[derive(Clone, Debug)]
pub(crate) struct TermPlan {
    pub initial: OrderedOperator,
    pub steps: Vec<usize>,
    pub max_width: usize,
}

/// A circuit with the per-gate bookkeeping needed for repeated contractions.
#[derive(Clone, Debug)]
pub struct PreparedCircuit<'c> {
    circuit: &'c Circuit,
    gates: Vec<PreparedGate>,
    untouched: Vec<bool>,
    options: ContractionOptions,
}

impl<'c> PreparedCircuit<'c> {
    pub fn new(circuit: &'c Circuit, options: ContractionOptions) -> Self {
        let n = circuit.n_modes();
        let mut first_touch: Vec<Option<usize>> = vec![None; n];
        for (idx, g) in circuit.gates().iter().enumerate() {
            for &m in g.support().modes() {
                first_touch[m - 1].get_or_insert(idx);
            }
        }
        let gates = circuit
            .gates()
            .iter()
            .enumerate()
            .map(|(idx, g)| {
                let order = g.support();
                let exits: Vec<usize> = order
                    .modes()
                    .iter()
                    .copied()
                    .filter(|&m| first_touch[m - 1] == Some(idx))
                    .collect();
                let (occupied_exits, vacuum_exits): (Vec<usize>, Vec<usize>) =
                    exits.into_iter().partition(|&m| circuit.is_occupied(m));
                let mask = vacuum_exits
                    .iter()
                    .map(|&m| order.mask(order.position(m).expect("support mode")))
                    .fold(0, |acc, b| acc | b);
                let inputs = (0..order.dim()).filter(|y| y & mask == 0).collect();
                PreparedGate {
                    vacuum_exits,
                    occupied_exits,
                    inputs,
                }
            })
            .collect();
        Self {
            circuit,
            gates,
            untouched: first_touch.iter().map(Option::is_none).collect(),
            options,
        }
    }

    pub fn circuit(&self) -> &Circuit {
        self.circuit
    }

    pub fn options(&self) -> ContractionOptions {
        self.options
    }

    /// Projects never-touched modes and schedules the gates the observable
    /// meets. The schedule depends only on supports.
    pub(crate) fn plan(&self, observable: &OrderedOperator) -> Result<TermPlan> {
        let n = self.circuit.n_modes();
        if let Some(&m) = observable
            .order()
            .modes()
            .iter()
            .find(|&&m| m == 0 || m > n)
        {
            return Err(Error::ModeNotInOrder(m));
        }
        let cap = self.options.width_cap;
        let mut max_width = observable.order().len();
        if max_width > cap {
            return Err(Error::WidthCapExceeded {
                width: max_width,
                cap,
            });
        }
        let asc = ModeOrder::ascending(observable.order().modes().iter().copied());
        let mut a = reorder(observable, &asc)?;
        for &m in asc.modes() {
            if self.untouched[m - 1] {
                a = partial_project(&a, m, self.circuit.is_occupied(m))?;
            }
        }
        let mut active: Vec<bool> = vec![false; n + 1];
        for &m in a.order().modes() {
            active[m] = true;
        }
        let mut steps = Vec::new();
        for (idx, g) in self.circuit.gates().iter().enumerate().rev() {
            let modes = g.support().modes();
            if !modes.iter().any(|&m| active[m]) {
                continue;
            }
            let width = active.iter().filter(|&&x| x).count()
                + modes.iter().filter(|&&m| !active[m]).count();
            if width > cap {
                return Err(Error::WidthCapExceeded { width, cap });
            }
            max_width = max_width.max(width);
            for &m in modes {
                active[m] = true;
            }
            let pg = &self.gates[idx];
            for &m in pg.vacuum_exits.iter().chain(&pg.occupied_exits) {
                active[m] = false;
            }
            steps.push(idx);
        }
        Ok(TermPlan {
            initial: a,
            steps,
            max_width,
        })
    }

    /// One backward step through gate `idx`, using `unitary` (gate order) in
    /// place of the stored gate matrix.
    pub(crate) fn step_with(
        &self,
        a: &OrderedOperator,
        idx: usize,
        unitary: &DMatrix<Complex64>,
        stats: &mut ContractionStats,
    ) -> Result<OrderedOperator> {
        let out = match self.options.strategy {
            Strategy::Fused => self.fused_step(a, idx, unitary, stats)?,
            Strategy::Stepwise => self.stepwise_step(a, idx, unitary, stats)?,
        };
        let pg = &self.gates[idx];
        let mut out = out;
        for &m in &pg.occupied_exits {
            out = partial_project(&out, m, true)?;
        }
        let asc = ModeOrder::ascending(out.order().modes().iter().copied());
        let out = reorder(&out, &asc)?;
        stats.gates.push(idx);
        Ok(out)
    }

    fn step(
        &self,
        a: &OrderedOperator,
        idx: usize,
        stats: &mut ContractionStats,
    ) -> Result<OrderedOperator> {
        self.step_with(a, idx, self.circuit.gate(idx).unitary().matrix(), stats)
    }

    /// Orders and signs of one fused step for an operator on `s_order`.
    fn frame(&self, s_order: &ModeOrder, idx: usize) -> Result<StepFrame> {
        let g_order = self.circuit.gate(idx).support();
        let pg = &self.gates[idx];
        let keep: Vec<usize> = s_order
            .modes()
            .iter()
            .copied()
            .filter(|&m| !g_order.contains(m))
            .collect();
        let (shared, fresh): (Vec<usize>, Vec<usize>) = g_order
            .modes()
            .iter()
            .copied()
            .partition(|&m| s_order.contains(m));
        let k = g_order.len();
        let a_order = ModeOrder::new([keep.as_slice(), shared.as_slice()].concat())?;
        let g_target = ModeOrder::new([shared.as_slice(), fresh.as_slice()].concat())?;
        let perm = ReorderPlan::bubble(g_order, &g_target)?.basis_permutation();
        let kept_pos: Vec<usize> = (0..k)
            .filter(|&p| !pg.vacuum_exits.contains(&g_target.modes()[p]))
            .collect();
        let mut mid = keep.clone();
        mid.extend(kept_pos.iter().map(|&p| g_target.modes()[p]));
        Ok(StepFrame {
            ks: keep.len(),
            ns: shared.len(),
            nf: fresh.len(),
            k,
            ng: kept_pos.len(),
            a_order,
            mid_order: ModeOrder::new(mid)?,
            perm,
            kept_pos,
        })
    }

    /// Columns of the gate with every vacuum exit empty, rows in
    /// `shared ++ fresh` order and columns indexed by the kept modes.
    fn w_matrix(
        &self,
        f: &StepFrame,
        idx: usize,
        unitary: &DMatrix<Complex64>,
    ) -> DMatrix<Complex64> {
        let mut w = DMatrix::from_element(1 << f.k, 1 << f.ng, ZERO);
        for &y in &self.gates[idx].inputs {
            let r = compress(f.perm.image(y), f.k, &f.kept_pos);
            let sy = f.perm.sign(y);
            for h in 0..(1 << f.k) {
                let v = unitary[(h, y)];
                if v != ZERO {
                    w[(f.perm.image(h), r)] = v * (f.perm.sign(h) * sy);
                }
            }
        }
        w
    }

    fn fused_step(
        &self,
        a: &OrderedOperator,
        idx: usize,
        unitary: &DMatrix<Complex64>,
        stats: &mut ContractionStats,
    ) -> Result<OrderedOperator> {
        let f = self.frame(a.order(), idx)?;
        let (ks, ns, nf, k, ng) = (f.ks, f.ns, f.nf, f.k, f.ng);
        stats.max_width = stats.max_width.max(ks + k);
        let a2 = reorder(a, &f.a_order)?;
        let w = self.w_matrix(&f, idx, unitary);

        // Y = (a ⊗ 1_fresh) W, rows (x, hs, hf), columns (x', g').
        let mut y = DMatrix::from_element(1 << (ks + k), 1 << (ks + ng), ZERO);
        stats.note(y.len().max(a2.matrix().len()));
        let hs_mask = (1usize << ns) - 1;
        for hf in 0..(1usize << nf) {
            let w_hf = f.w_slice(&w, hf);
            for xp in 0..(1usize << ks) {
                let prod = mul(
                    &a2.matrix().columns(xp << ns, 1 << ns),
                    Form::Plain,
                    &w_hf,
                    Form::Plain,
                );
                for row in 0..prod.nrows() {
                    let yrow = ((row >> ns) << k) | ((row & hs_mask) << nf) | hf;
                    for g in 0..(1usize << ng) {
                        y[(yrow, (xp << ng) | g)] = prod[(row, g)];
                    }
                }
            }
        }

        // c = (1 ⊗ W)† Y.
        let mut out = DMatrix::from_element(1 << (ks + ng), 1 << (ks + ng), ZERO);
        for x in 0..(1usize << ks) {
            let mut rows = out.rows_mut(x << ng, 1 << ng);
            gemm(
                &w,
                Form::Adjoint,
                &y.rows(x << k, 1 << k),
                Form::Plain,
                0.0,
                &mut rows,
            );
        }
        OrderedOperator::new(f.mid_order, out)
    }

    /// Pulls a dual operator on the step output (ascending order) back to the
    /// fused-kernel output order, undoing the filled-mode projections.
    fn post_adjoint(
        &self,
        rho_out: &OrderedOperator,
        f: &StepFrame,
        idx: usize,
    ) -> Result<OrderedOperator> {
        let mut orders = vec![f.mid_order.clone()];
        for &m in &self.gates[idx].occupied_exits {
            let last = orders.last().expect("non-empty");
            let next: Vec<usize> = last.modes().iter().copied().filter(|&x| x != m).collect();
            orders.push(ModeOrder::new(next)?);
        }
        let mut rho = reorder(rho_out, orders.last().expect("non-empty"))?;
        for (i, &m) in self.gates[idx].occupied_exits.iter().enumerate().rev() {
            rho = embed_filled(&rho, m, &orders[i])?;
        }
        Ok(rho)
    }

    /// One step of the reverse sweep. `a` is the operator entering backward
    /// step `idx` and `rho_out` the dual on its output under
    /// `⟨ρ, c⟩ = tr(ρ c)`. Returns the gate environment `E` (with the gate
    /// replaced by `V` on the ket side only, the term value is `tr(E V)`) and,
    /// when `dual` is set, the dual pulled back onto the order of `a`. Only
    /// the rows of `E` listed by [`Self::inputs`] can be nonzero, and only
    /// those are returned, in that order.
    pub(crate) fn backward_step(
        &self,
        rho_out: &OrderedOperator,
        a: &OrderedOperator,
        idx: usize,
        dual: bool,
    ) -> Result<(DMatrix<Complex64>, Option<OrderedOperator>)> {
        let f = self.frame(a.order(), idx)?;
        let rho_mid = self.post_adjoint(rho_out, &f, idx)?;
        let w = self.w_matrix(&f, idx, self.circuit.gate(idx).unitary().matrix());
        let a2 = reorder(a, &f.a_order)?;
        let (ks, ns, nf, k, ng) = (f.ks, f.ns, f.nf, f.k, f.ng);
        let mut kred = DMatrix::from_element(1 << ng, 1 << k, ZERO);
        let mut rho_a = dual.then(|| DMatrix::from_element(1 << (ks + ns), 1 << (ks + ns), ZERO));
        let mut m = DMatrix::from_element(1 << ng, 1 << ns, ZERO);
        for hf in 0..(1usize << nf) {
            let w_hf = f.w_slice(&w, hf);
            let t = times_kron_adjoint(rho_mid.matrix(), ks, &w_hf);
            for x in 0..(1usize << ks) {
                let t_x = t.rows(x << ng, 1 << ng);
                gemm(
                    &t_x,
                    Form::Plain,
                    &a2.matrix().columns(x << ns, 1 << ns),
                    Form::Plain,
                    0.0,
                    &mut m,
                );
                for hs in 0..(1usize << ns) {
                    let mut col = kred.column_mut((hs << nf) | hf);
                    col += m.column(hs);
                }
                if let Some(rho_a) = &mut rho_a {
                    let mut rows = rho_a.rows_mut(x << ns, 1 << ns);
                    gemm(&w_hf, Form::Plain, &t_x, Form::Plain, 1.0, &mut rows);
                }
            }
        }
        let inputs = &self.gates[idx].inputs;
        let mut env = DMatrix::from_element(inputs.len(), 1 << k, ZERO);
        for (i, &y) in inputs.iter().enumerate() {
            let r = compress(f.perm.image(y), k, &f.kept_pos);
            let sy = f.perm.sign(y);
            for h in 0..(1usize << k) {
                env[(i, h)] = kred[(r, f.perm.image(h))] * (f.perm.sign(h) * sy);
            }
        }
        let rho_in = match rho_a {
            Some(m) => Some(reorder(
                &OrderedOperator::new(f.a_order.clone(), m)?,
                a.order(),
            )?),
            None => None,
        };
        Ok((env, rho_in))
    }

    fn stepwise_step(
        &self,
        a: &OrderedOperator,
        idx: usize,
        unitary: &DMatrix<Complex64>,
        stats: &mut ContractionStats,
    ) -> Result<OrderedOperator> {
        let g_order = self.circuit.gate(idx).support().clone();
        let u_dag = OrderedOperator::new(g_order, unitary.adjoint())?;
        let (a2, u2) = align_supports(a, &u_dag)?;
        stats.max_width = stats.max_width.max(a2.order().len());
        stats.note(a2.matrix().len());
        let mut c = conjugate(&a2, &u2)?;
        for &m in &self.gates[idx].vacuum_exits {
            c = partial_project(&c, m, false)?;
        }
        Ok(c)
    }

    /// The observable before each step, and the final 0-mode operator last.
    pub(crate) fn states(
        &self,
        plan: &TermPlan,
        stats: &mut ContractionStats,
    ) -> Result<Vec<OrderedOperator>> {
        let mut out = Vec::with_capacity(plan.steps.len() + 1);
        out.push(plan.initial.clone());
        for &idx in &plan.steps {
            let next = self.step(out.last().expect("non-empty"), idx, stats)?;
            out.push(next);
        }
        Ok(out)
    }

    /// Finishes the contraction from step `j` with `unitary` replacing the
    /// gate at that step.
    pub(crate) fn finish_with(
        &self,
        plan: &TermPlan,
        j: usize,
        state: &OrderedOperator,
        unitary: &DMatrix<Complex64>,
    ) -> Result<Complex64> {
        let mut stats = ContractionStats::default();
        let mut a = self.step_with(state, plan.steps[j], unitary, &mut stats)?;
        for &idx in &plan.steps[j + 1..] {
            a = self.step(&a, idx, &mut stats)?;
        }
        scalar_of(&a)
    }

    /// Environments of every gate the term meets, from a reverse sweep over
    /// the cached states. Entries are `(gate index, E)`.
    /// Basis indices of gate `idx` (in its own order) with every mode first
    /// touched there in its empty reference state.
    pub(crate) fn inputs(&self, idx: usize) -> &[usize] {
        &self.gates[idx].inputs
    }

    pub(crate) fn environments(
        &self,
        plan: &TermPlan,
        states: &[OrderedOperator],
    ) -> Result<Vec<(usize, DMatrix<Complex64>)>> {
        let mut out = Vec::with_capacity(plan.steps.len());
        let mut rho = OrderedOperator::scalar(Complex64::new(1.0, 0.0));
        for (j, &idx) in plan.steps.iter().enumerate().rev() {
            let (env, back) = self.backward_step(&rho, &states[j], idx, j > 0)?;
            out.push((idx, env));
            if let Some(back) = back {
                rho = back;
            }
        }
        Ok(out)
    }

    /// `⟨ψ|A|ψ⟩` for an operator given in any order.
    pub fn expectation_operator(
        &self,
        observable: &OrderedOperator,
    ) -> Result<(Complex64, ContractionStats)> {
        let plan = self.plan(observable)?;
        let mut stats = ContractionStats {
            max_width: plan.max_width,
            ..Default::default()
        };
        stats.note(plan.initial.matrix().len());
        let mut a = plan.initial.clone();
        for &idx in &plan.steps {
            a = self.step(&a, idx, &mut stats)?;
        }
        Ok((scalar_of(&a)?, stats))
    }

    /// `⟨ψ|A|ψ⟩` for an even hermitian polynomial.
    pub fn expectation(&self, observable: &FermionPolynomial) -> Result<(f64, ContractionStats)> {
        let a = observable_operator(observable)?;
        let (v, stats) = self.expectation_operator(&a)?;
        if !v.re.is_finite() {
            return Err(Error::NonFiniteEnergy);
        }
        Ok((v.re, stats))
    }

    /// Sum of term expectations; `terms` are contracted separately so each
    /// keeps its own small cone.
    pub fn expectation_sum(&self, terms: &[FermionPolynomial]) -> Result<(f64, ContractionStats)> {
        let mut total = 0.0;
        let mut stats = ContractionStats::default();
        for t in terms {
            let (v, s) = self.expectation(t)?;
            total += v;
            stats.merge(&s);
        }
        Ok((total, stats))
    }
}

struct StepFrame {
    ks: usize,
    ns: usize,
    nf: usize,
    k: usize,
    ng: usize,
    /// `keep ++ shared`.
    a_order: ModeOrder,
    /// `keep ++` gate modes that stay.
    mid_order: ModeOrder,
    /// Gate order to `shared ++ fresh`.
    perm: BasisPermutation,
    kept_pos: Vec<usize>,
}

impl StepFrame {
    /// Rows of `w` with the fresh bits equal to `hf`.
    fn w_slice(&self, w: &DMatrix<Complex64>, hf: usize) -> DMatrix<Complex64> {
        DMatrix::from_fn(1 << self.ns, 1 << self.ng, |hs, g| {
            w[((hs << self.nf) | hf, g)]
        })
    }
}

/// `rho (1_{2^ks} ⊗ w)†`, one column block at a time.
fn times_kron_adjoint(
    rho: &DMatrix<Complex64>,
    ks: usize,
    w: &DMatrix<Complex64>,
) -> DMatrix<Complex64> {
    let (r, c) = w.shape();
    let mut out = DMatrix::from_element(rho.nrows(), r << ks, ZERO);
    for x in 0..(1usize << ks) {
        let mut cols = out.columns_mut(x * r, r);
        gemm(
            &rho.columns(x * c, c),
            Form::Plain,
            w,
            Form::Adjoint,
            0.0,
            &mut cols,
        );
    }
    out
}

/// Adjoint of projecting `mode` onto its filled state: pads `rho` (on the
/// remaining modes) into the filled block and returns it in `order`.
fn embed_filled(rho: &OrderedOperator, mode: usize, order: &ModeOrder) -> Result<OrderedOperator> {
    let half = rho.dim();
    let mut m = DMatrix::from_element(2 * half, 2 * half, ZERO);
    m.view_mut((half, half), (half, half))
        .copy_from(rho.matrix());
    let mut modes = vec![mode];
    modes.extend_from_slice(rho.order().modes());
    let front = OrderedOperator::new(ModeOrder::new(modes)?, m)?;
    reorder(&front, order)
}

/// Checks an observable and represents it in ascending order of its support.
pub(crate) fn observable_operator(observable: &FermionPolynomial) -> Result<OrderedOperator> {
    if !observable.is_even() {
        return Err(Error::OddObservable);
    }
    let deviation = observable.hermiticity_defect();
    if deviation > HERMITIAN_TOL {
        return Err(Error::NonHermitian { deviation });
    }
    represent_polynomial(observable, &ModeOrder::ascending(observable.modes()))
}

fn scalar_of(a: &OrderedOperator) -> Result<Complex64> {
    a.as_scalar().ok_or_else(|| {
        Error::InvalidCircuit(format!("contraction left modes {:?}", a.order().modes()))
    })
}

/// Gathers the bits at `positions` (MSB-first within `len` bits) into a
/// compact index.
fn compress(index: usize, len: usize, positions: &[usize]) -> usize {
    positions
        .iter()
        .fold(0, |acc, &p| (acc << 1) | ((index >> (len - 1 - p)) & 1))
}

/// `⟨ψ|A|ψ⟩` with default options.
pub fn contract_expectation(c: &Circuit, observable: &FermionPolynomial) -> Result<f64> {
    contract_expectation_with(c, observable, ContractionOptions::default()).map(|(v, _)| v)
}

pub fn contract_expectation_with(
    c: &Circuit,
    observable: &FermionPolynomial,
    options: ContractionOptions,
) -> Result<(f64, ContractionStats)> {
    PreparedCircuit::new(c, options).expectation(observable)
}

/// `⟨ψ|A|ψ⟩` for an arbitrary (not necessarily hermitian) even operator.
pub fn contract_operator(
    c: &Circuit,
    observable: &OrderedOperator,
    options: ContractionOptions,
) -> Result<(Complex64, ContractionStats)> {
    PreparedCircuit::new(c, options).expectation_operator(observable)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::FermionGate;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn rotation(j: usize, k: usize, theta: f64, t: u64) -> FermionGate {
        FermionGate::from_generator(FermionPolynomial::hopping(j, k).scale(c(theta)), t).unwrap()
    }

    #[test]
    fn compress_bits() {
        assert_eq!(compress(0b1011, 4, &[0, 2]), 0b11);
        assert_eq!(compress(0b1011, 4, &[1]), 0);
        assert_eq!(compress(0b1011, 4, &[]), 0);
    }

    #[test]
    fn vacuum_number_is_zero() {
        let circ = Circuit::vacuum(3, vec![]).unwrap();
        assert_eq!(
            contract_expectation(&circ, &FermionPolynomial::number(2)).unwrap(),
            0.0
        );
    }

    #[test]
    fn occupied_reference_number() {
        let circ = Circuit::new(3, vec![], &[2]).unwrap();
        assert_eq!(
            contract_expectation(&circ, &FermionPolynomial::number(2)).unwrap(),
            1.0
        );
        assert_eq!(
            contract_expectation(&circ, &FermionPolynomial::number(1)).unwrap(),
            0.0
        );
    }

    #[test]
    fn hopping_rotation_moves_particle() {
        let theta = 0.37;
        let circ = Circuit::new(2, vec![rotation(1, 2, theta, 1)], &[1]).unwrap();
        for strategy in [Strategy::Fused, Strategy::Stepwise] {
            let opts = ContractionOptions {
                strategy,
                ..Default::default()
            };
            let (n1, _) =
                contract_expectation_with(&circ, &FermionPolynomial::number(1), opts).unwrap();
            let (n2, _) =
                contract_expectation_with(&circ, &FermionPolynomial::number(2), opts).unwrap();
            assert!((n1 - theta.cos().powi(2)).abs() < 1e-14);
            assert!((n2 - theta.sin().powi(2)).abs() < 1e-14);
        }
    }

    #[test]
    fn strategies_agree_on_brickwork() {
        let gates = vec![
            rotation(1, 2, 0.3, 1),
            rotation(3, 4, 0.5, 1),
            rotation(2, 3, 0.7, 2),
            rotation(1, 4, 0.2, 3),
        ];
        let circ = Circuit::new(4, gates, &[1, 3]).unwrap();
        let obs = FermionPolynomial::hopping(2, 4) + FermionPolynomial::number(3);
        let fused = contract_expectation_with(&circ, &obs, ContractionOptions::default()).unwrap();
        let step = contract_expectation_with(
            &circ,
            &obs,
            ContractionOptions {
                strategy: Strategy::Stepwise,
                ..Default::default()
            },
        )
        .unwrap();
        assert!((fused.0 - step.0).abs() < 1e-13);
        assert_eq!(fused.1.gates, step.1.gates);
    }

    fn mixed_circuit() -> Circuit {
        let quartic = FermionPolynomial::number(2) * FermionPolynomial::hopping(1, 4);
        let gates = vec![
            rotation(1, 2, 0.3, 1),
            rotation(3, 4, 0.5, 1),
            FermionGate::from_generator(
                quartic.scale(c(0.8)) + FermionPolynomial::hopping(2, 3),
                2,
            )
            .unwrap(),
            rotation(1, 3, 0.9, 3),
            rotation(4, 5, 0.6, 4),
        ];
        Circuit::new(5, gates, &[2, 5]).unwrap()
    }

    #[test]
    fn environment_reproduces_term_value() {
        let circ = mixed_circuit();
        let prepared = PreparedCircuit::new(&circ, ContractionOptions::default());
        let obs =
            observable_operator(&(FermionPolynomial::hopping(1, 3) + FermionPolynomial::number(4)))
                .unwrap();
        let plan = prepared.plan(&obs).unwrap();
        let states = prepared
            .states(&plan, &mut ContractionStats::default())
            .unwrap();
        let value = states.last().unwrap().as_scalar().unwrap();
        let envs = prepared.environments(&plan, &states).unwrap();
        assert_eq!(envs.len(), plan.steps.len());
        for (g, rows) in envs {
            let u = circ.gate(g).unitary().matrix();
            let mut env = DMatrix::from_element(u.nrows(), u.ncols(), Complex64::new(0.0, 0.0));
            for (i, &y) in prepared.inputs(g).iter().enumerate() {
                env.set_row(y, &rows.row(i));
            }
            let traced = (env * u).trace();
            assert!((traced - value).norm() < 1e-13, "gate {g}");
        }
    }

    #[test]
    fn step_adjoint_is_dual() {
        let circ = mixed_circuit();
        let prepared = PreparedCircuit::new(&circ, ContractionOptions::default());
        let obs = observable_operator(&FermionPolynomial::hopping(3, 4)).unwrap();
        let plan = prepared.plan(&obs).unwrap();
        let states = prepared
            .states(&plan, &mut ContractionStats::default())
            .unwrap();
        for (j, &idx) in plan.steps.iter().enumerate() {
            let out = &states[j + 1];
            let rho = DMatrix::from_fn(out.dim(), out.dim(), |r, col| {
                Complex64::new(
                    (r * 7 + col * 3) as f64 * 0.1 - 0.4,
                    (r as f64 - col as f64) * 0.05,
                )
            });
            let rho = OrderedOperator::new(out.order().clone(), rho).unwrap();
            let (_, back) = prepared.backward_step(&rho, &states[j], idx, true).unwrap();
            let back = back.unwrap();
            let lhs = (rho.matrix() * out.matrix()).trace();
            let rhs = (back.matrix() * states[j].matrix()).trace();
            assert!((lhs - rhs).norm() < 1e-12, "step {j}");
        }
    }

    #[test]
    fn width_cap_is_enforced() {
        let circ =
            Circuit::vacuum(4, vec![rotation(1, 2, 0.3, 1), rotation(3, 4, 0.3, 2)]).unwrap();
        let opts = ContractionOptions {
            width_cap: 2,
            ..Default::default()
        };
        let err =
            contract_expectation_with(&circ, &FermionPolynomial::hopping(2, 3), opts).unwrap_err();
        assert!(matches!(err, Error::WidthCapExceeded { width: 3, cap: 2 }));
        assert!(err.is_resource_limit());
    }

    #[test]
    fn odd_and_nonhermitian_observables_rejected() {
        let circ = Circuit::vacuum(2, vec![]).unwrap();
        assert_eq!(
            contract_expectation(&circ, &FermionPolynomial::create(1)).unwrap_err(),
            Error::OddObservable
        );
        let half = FermionPolynomial::create(1) * FermionPolynomial::annihilate(2);
        assert!(matches!(
            contract_expectation(&circ, &half).unwrap_err(),
            Error::NonHermitian { .. }
        ));
    }
}
