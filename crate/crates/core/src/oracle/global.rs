use std::collections::hash_map::{Entry, HashMap};

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::check_cap;
use crate::error::{Error, Result};
use crate::fermion::FermionPolynomial;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Sparse `2^n × 2^n` operator in compressed-row form, global order.
#[derive(Clone, Debug, PartialEq)]
pub struct GlobalOperator {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<Complex64>,
}

impl GlobalOperator {
    /// Builds from `(row, col, value)` triplets; duplicates are summed and
    /// exact zeros dropped.
    pub fn from_triplets(n: usize, mut triplets: Vec<(usize, usize, Complex64)>) -> Self {
        let dim = 1usize << n;
        triplets.sort_by_key(|&(r, c, _)| (r, c));
        let mut row_ptr = vec![0usize; dim + 1];
        let mut cols = Vec::with_capacity(triplets.len());
        let mut vals: Vec<Complex64> = Vec::with_capacity(triplets.len());
        let mut rows = Vec::with_capacity(triplets.len());
        for (r, c, v) in triplets {
            assert!(r < dim && c < dim, "index out of range");
            if rows.last() == Some(&r) && cols.last() == Some(&c) {
                *vals.last_mut().expect("non-empty") += v;
            } else {
                rows.push(r);
                cols.push(c);
                vals.push(v);
            }
        }
        let mut keep_cols = Vec::with_capacity(cols.len());
        let mut keep_vals = Vec::with_capacity(vals.len());
        for ((r, c), v) in rows.into_iter().zip(cols).zip(vals) {
            if v != ZERO {
                row_ptr[r + 1] += 1;
                keep_cols.push(c);
                keep_vals.push(v);
            }
        }
        for i in 0..dim {
            row_ptr[i + 1] += row_ptr[i];
        }
        Self {
            n,
            row_ptr,
            cols: keep_cols,
            vals: keep_vals,
        }
    }

    pub fn zero(n: usize) -> Self {
        Self::from_triplets(n, Vec::new())
    }

    pub fn identity(n: usize) -> Self {
        Self::from_triplets(
            n,
            (0..1usize << n)
                .map(|i| (i, i, Complex64::new(1.0, 0.0)))
                .collect(),
        )
    }

    pub fn n_modes(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        1 << self.n
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, Complex64)> + '_ {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        self.cols[span.clone()]
            .iter()
            .copied()
            .zip(self.vals[span].iter().copied())
    }

    pub fn entry(&self, r: usize, c: usize) -> Complex64 {
        self.row(r)
            .find(|&(cc, _)| cc == c)
            .map_or(ZERO, |(_, v)| v)
    }

    pub fn triplets(&self) -> Vec<(usize, usize, Complex64)> {
        (0..self.dim())
            .flat_map(|r| self.row(r).map(move |(c, v)| (r, c, v)))
            .collect()
    }

    pub fn to_dense(&self) -> DMatrix<Complex64> {
        let mut m = DMatrix::from_element(self.dim(), self.dim(), ZERO);
        for (r, c, v) in self.triplets() {
            m[(r, c)] = v;
        }
        m
    }

    pub fn adjoint(&self) -> Self {
        Self::from_triplets(
            self.n,
            self.triplets()
                .into_iter()
                .map(|(r, c, v)| (c, r, v.conj()))
                .collect(),
        )
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Self::from_triplets(
            self.n,
            self.triplets()
                .into_iter()
                .map(|(r, c, v)| (r, c, v * s))
                .collect(),
        )
    }

    pub fn add(&self, rhs: &Self) -> Self {
        assert_eq!(self.n, rhs.n, "mode count mismatch");
        let mut t = self.triplets();
        t.extend(rhs.triplets());
        Self::from_triplets(self.n, t)
    }

    pub fn matmul(&self, rhs: &Self) -> Self {
        assert_eq!(self.n, rhs.n, "mode count mismatch");
        let mut t = Vec::new();
        for r in 0..self.dim() {
            for (k, a) in self.row(r) {
                for (c, b) in rhs.row(k) {
                    t.push((r, c, a * b));
                }
            }
        }
        Self::from_triplets(self.n, t)
    }

    /// Kronecker product, `self` on the leading (more significant) modes.
    pub fn kron(&self, rhs: &Self) -> Self {
        let shift = rhs.n;
        let mut t = Vec::with_capacity(self.nnz() * rhs.nnz());
        for (r1, c1, v1) in self.triplets() {
            for (r2, c2, v2) in rhs.triplets() {
                t.push(((r1 << shift) | r2, (c1 << shift) | c2, v1 * v2));
            }
        }
        Self::from_triplets(self.n + rhs.n, t)
    }

    pub fn apply(&self, psi: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(psi.len(), self.dim(), "state dimension mismatch");
        (0..self.dim())
            .map(|r| self.row(r).map(|(c, v)| v * psi[c]).sum())
            .collect()
    }

    /// `⟨ψ|A|ψ⟩`.
    pub fn expectation(&self, psi: &[Complex64]) -> Complex64 {
        let a_psi = self.apply(psi);
        psi.iter().zip(&a_psi).map(|(p, q)| p.conj() * q).sum()
    }

    pub fn is_real(&self) -> bool {
        self.vals.iter().all(|v| v.im == 0.0)
    }

    pub fn hermiticity_defect(&self) -> f64 {
        let d = self.add(&self.adjoint().scale(Complex64::new(-1.0, 0.0)));
        d.vals.iter().fold(0.0, |acc: f64, v| acc.max(v.norm()))
    }
}

fn single(entries: &[(usize, usize, f64)]) -> GlobalOperator {
    GlobalOperator::from_triplets(
        1,
        entries
            .iter()
            .map(|&(r, c, v)| (r, c, Complex64::new(v, 0.0)))
            .collect(),
    )
}

/// `σ^z ⊗ ⋯ ⊗ σ^z ⊗ σ^± ⊗ 1 ⊗ ⋯ ⊗ 1` with the string on modes `1..mode`.
/// `σ^+ = |0⟩⟨1|` empties the mode (annihilation), `σ^- = |1⟩⟨0|` fills it.
pub fn global_ladder(n: usize, mode: usize, dagger: bool) -> Result<GlobalOperator> {
    check_cap(n)?;
    if mode == 0 || mode > n {
        return Err(Error::ModeNotInOrder(mode));
    }
    let sz = single(&[(0, 0, 1.0), (1, 1, -1.0)]);
    let id = single(&[(0, 0, 1.0), (1, 1, 1.0)]);
    let ladder = if dagger {
        single(&[(1, 0, 1.0)])
    } else {
        single(&[(0, 1, 1.0)])
    };
    let mut out = if mode == 1 {
        ladder.clone()
    } else {
        sz.clone()
    };
    for k in 2..=n {
        let factor = match k.cmp(&mode) {
            std::cmp::Ordering::Less => &sz,
            std::cmp::Ordering::Equal => &ladder,
            std::cmp::Ordering::Greater => &id,
        };
        out = out.kron(factor);
    }
    Ok(out)
}

/// Full-lattice matrix of `p` in the global order, strings included.
pub fn global_jwt(p: &FermionPolynomial, n: usize) -> Result<GlobalOperator> {
    check_cap(n)?;
    if let Some(&m) = p.modes().iter().find(|&&m| m == 0 || m > n) {
        return Err(Error::ModeNotInOrder(m));
    }
    let mut ladders = HashMap::new();
    let mut total = GlobalOperator::zero(n);
    for (mono, coeff) in p.terms() {
        let mut prod = GlobalOperator::identity(n);
        for op in mono.ops() {
            let key = (op.mode, op.dagger);
            if let Entry::Vacant(slot) = ladders.entry(key) {
                slot.insert(global_ladder(n, op.mode, op.dagger)?);
            }
            prod = prod.matmul(&ladders[&key]);
        }
        total = total.add(&prod.scale(coeff));
    }
    Ok(total)
}
