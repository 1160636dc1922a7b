use num_complex::Complex64;

use super::{check_cap, global_jwt, GlobalOperator};
use crate::circuit::{Circuit, FermionGate};
use crate::error::{Error, Result};
use crate::fermion::FermionPolynomial;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

fn bit(n: usize, mode: usize) -> usize {
    1 << (n - mode)
}

/// `f_mode |x⟩` in the global order: the JW sign counts occupied modes
/// `1..mode`.
fn annihilate(n: usize, mode: usize, x: usize) -> Option<(usize, f64)> {
    let b = bit(n, mode);
    if x & b == 0 {
        return None;
    }
    let sign = if (x >> (n - mode + 1)).count_ones() % 2 == 1 {
        -1.0
    } else {
        1.0
    };
    Some((x ^ b, sign))
}

fn create(n: usize, mode: usize, x: usize) -> Option<(usize, f64)> {
    let b = bit(n, mode);
    if x & b != 0 {
        return None;
    }
    let sign = if (x >> (n - mode + 1)).count_ones() % 2 == 1 {
        -1.0
    } else {
        1.0
    };
    Some((x | b, sign))
}

/// Modes of the gate order that are set in local basis index `i`.
fn local_modes(order: &[usize], i: usize) -> impl DoubleEndedIterator<Item = usize> + '_ {
    let k = order.len();
    order
        .iter()
        .enumerate()
        .filter(move |(p, _)| i >> (k - 1 - p) & 1 == 1)
        .map(|(_, &m)| m)
}

/// Columns of the embedded gate: the local matrix unit `|i⟩⟨j|` acts on the
/// global space as `C_i P C_j†`, with `C_i` the ordered product of creators
/// building `|i⟩` from the local vacuum and `P` the support vacuum projector.
fn embedded_column(gate: &FermionGate, n: usize, x: usize, mut emit: impl FnMut(usize, Complex64)) {
    let order = gate.support().modes();
    let k = order.len();
    let j = order.iter().fold(0usize, |acc, &m| {
        (acc << 1) | usize::from(x & bit(n, m) != 0)
    });
    // C_j† = f_{a_last} ⋯ f_{a_first}: the first mode in the order acts first.
    let mut rest = x;
    let mut sign_j = 1.0;
    for m in local_modes(order, j) {
        let (y, s) = annihilate(n, m, rest).expect("bit is set");
        rest = y;
        sign_j *= s;
    }
    let u = gate.unitary().matrix();
    for i in 0..(1usize << k) {
        let v = u[(i, j)];
        if v == ZERO {
            continue;
        }
        let mut y = rest;
        let mut sign = sign_j;
        for m in local_modes(order, i).rev() {
            let (z, s) = create(n, m, y).expect("support emptied");
            y = z;
            sign *= s;
        }
        emit(y, v * sign);
    }
}

/// The gate as a global operator.
pub fn embed_gate(gate: &FermionGate, n: usize) -> Result<GlobalOperator> {
    check_cap(n)?;
    check_support(gate, n)?;
    let mut t = Vec::new();
    for x in 0..(1usize << n) {
        embedded_column(gate, n, x, |y, v| t.push((y, x, v)));
    }
    Ok(GlobalOperator::from_triplets(n, t))
}

fn check_support(gate: &FermionGate, n: usize) -> Result<()> {
    match gate.support().modes().iter().find(|&&m| m == 0 || m > n) {
        Some(&m) => Err(Error::ModeNotInOrder(m)),
        None => Ok(()),
    }
}

/// `ψ ← U ψ` without materializing the embedded gate.
pub fn apply_gate(psi: &mut Vec<Complex64>, n: usize, gate: &FermionGate) -> Result<()> {
    check_cap(n)?;
    check_support(gate, n)?;
    let mut out = vec![ZERO; psi.len()];
    for (x, &amp) in psi.iter().enumerate() {
        if amp == ZERO {
            continue;
        }
        embedded_column(gate, n, x, |y, v| out[y] += v * amp);
    }
    *psi = out;
    Ok(())
}

/// Basis vector of the circuit's reference occupation.
pub fn reference_state(c: &Circuit) -> Result<Vec<Complex64>> {
    let n = c.n_modes();
    check_cap(n)?;
    let idx = c.occupied_modes().iter().fold(0, |acc, &m| acc | bit(n, m));
    let mut psi = vec![ZERO; 1 << n];
    psi[idx] = Complex64::new(1.0, 0.0);
    Ok(psi)
}

/// `U_T ⋯ U_1 |ref⟩`.
pub fn statevector(c: &Circuit) -> Result<Vec<Complex64>> {
    let mut psi = reference_state(c)?;
    for g in c.gates() {
        apply_gate(&mut psi, c.n_modes(), g)?;
    }
    Ok(psi)
}

/// `⟨ψ|A|ψ⟩` from the full statevector and the global matrix of `A`.
pub fn global_expectation(c: &Circuit, observable: &FermionPolynomial) -> Result<f64> {
    let psi = statevector(c)?;
    let a = global_jwt(observable, c.n_modes())?;
    Ok(a.expectation(&psi).re)
}
