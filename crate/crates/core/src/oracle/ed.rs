use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{check_cap, global_jwt, GlobalOperator};
use crate::error::Result;
use crate::linalg;
use crate::model::{hamiltonian_polynomial, LatticeModel};

/// Mode counts up to this use a full dense eigensolve; above it, Lanczos.
pub const DENSE_LIMIT: usize = 10;

const LANCZOS_MAX_ITERS: usize = 300;
const LANCZOS_TOL: f64 = 1e-13;

/// Ground energy of the lattice Hamiltonian by exact diagonalization.
pub fn exact_ground_energy(m: &LatticeModel) -> Result<f64> {
    check_cap(m.n_modes())?;
    let h = global_jwt(&hamiltonian_polynomial(m), m.n_modes())?;
    ground_energy(&h)
}

/// Smallest eigenvalue of a hermitian global operator.
pub fn ground_energy(h: &GlobalOperator) -> Result<f64> {
    check_cap(h.n_modes())?;
    if h.n_modes() <= DENSE_LIMIT {
        Ok(linalg::min_eigenvalue_hermitian(&h.to_dense()))
    } else {
        Ok(lanczos_ground_energy(h))
    }
}

fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn norm(a: &[Complex64]) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

fn tridiagonal_min(alpha: &[f64], beta: &[f64]) -> f64 {
    let k = alpha.len();
    let mut t = DMatrix::<f64>::zeros(k, k);
    for i in 0..k {
        t[(i, i)] = alpha[i];
        if i + 1 < k {
            t[(i, i + 1)] = beta[i];
            t[(i + 1, i)] = beta[i];
        }
    }
    t.symmetric_eigenvalues().min()
}

/// Lanczos with full reorthogonalization from a fixed pseudo-random start.
pub fn lanczos_ground_energy(h: &GlobalOperator) -> f64 {
    let dim = h.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(0x1a2c_2057);
    let mut v: Vec<Complex64> = (0..dim)
        .map(|_| Complex64::new(rng.random::<f64>() - 0.5, 0.0))
        .collect();
    let nv = norm(&v);
    v.iter_mut().for_each(|z| *z /= nv);
    let mut basis: Vec<Vec<Complex64>> = vec![v];
    let (mut alpha, mut beta) = (Vec::new(), Vec::new());
    let mut last = f64::INFINITY;
    for j in 0..LANCZOS_MAX_ITERS.min(dim) {
        let mut w = h.apply(&basis[j]);
        alpha.push(dot(&basis[j], &w).re);
        for _ in 0..2 {
            for q in &basis {
                let c = dot(q, &w);
                w.iter_mut().zip(q).for_each(|(x, y)| *x -= c * y);
            }
        }
        let b = norm(&w);
        let estimate = tridiagonal_min(&alpha, &beta);
        if b < 1e-12 || (last - estimate).abs() <= LANCZOS_TOL * estimate.abs().max(1.0) {
            return estimate;
        }
        last = estimate;
        beta.push(b);
        w.iter_mut().for_each(|z| *z /= b);
        basis.push(w);
    }
    tridiagonal_min(&alpha, &beta[..alpha.len() - 1])
}
