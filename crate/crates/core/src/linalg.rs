//! Small dense helpers on complex matrices.

use matrixmultiply::CGemmOption;
use nalgebra::{DMatrix, Dyn, Matrix, Storage, StorageMut, SymmetricEigen};
use num_complex::Complex64;

use crate::fermion::parity_sectors;
use crate::fermion::{Grading, OrderedOperator};

/// How a factor enters a product.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Form {
    Plain,
    Adjoint,
}

type Mat<S> = Matrix<Complex64, Dyn, Dyn, S>;

/// `c ← β c + a' b'` with `a'`, `b'` the factors in the given forms. Views of
/// any stride are accepted; with `β = 0` the old contents of `c` are ignored.
pub fn gemm<SA, SB, SC>(a: &Mat<SA>, fa: Form, b: &Mat<SB>, fb: Form, beta: f64, c: &mut Mat<SC>)
where
    SA: Storage<Complex64, Dyn, Dyn>,
    SB: Storage<Complex64, Dyn, Dyn>,
    SC: StorageMut<Complex64, Dyn, Dyn>,
{
    let dims = |f: Form, (r, cc): (usize, usize)| if f == Form::Plain { (r, cc) } else { (cc, r) };
    let ((m, k), (_, n)) = (dims(fa, a.shape()), dims(fb, b.shape()));
    if m * n * k < PACKED_ABOVE {
        small_gemm(a, fa, b, fb, beta, c);
        return;
    }
    // The kernel has no conjugation flag: adjoint factors are conjugated
    // into a copy and read through transposed strides.
    let conj_a = (fa == Form::Adjoint).then(|| a.map(|z| z.conj()));
    let conj_b = (fb == Form::Adjoint).then(|| b.map(|z| z.conj()));
    let (m, k, pa, rsa, csa) = match &conj_a {
        None => (
            a.nrows(),
            a.ncols(),
            a.as_ptr(),
            a.strides().0,
            a.strides().1,
        ),
        Some(t) => (t.ncols(), t.nrows(), t.as_ptr(), t.nrows(), 1),
    };
    let (kb, n, pb, rsb, csb) = match &conj_b {
        None => (
            b.nrows(),
            b.ncols(),
            b.as_ptr(),
            b.strides().0,
            b.strides().1,
        ),
        Some(t) => (t.ncols(), t.nrows(), t.as_ptr(), t.nrows(), 1),
    };
    assert_eq!(k, kb, "inner dimensions differ");
    assert_eq!(c.shape(), (m, n), "output shape");
    if m == 0 || n == 0 {
        return;
    }
    if k == 0 {
        for z in c.iter_mut() {
            *z = if beta == 0.0 {
                Complex64::new(0.0, 0.0)
            } else {
                *z * beta
            };
        }
        return;
    }
    let (rsc, csc) = c.strides();
    // SAFETY: Complex64 is repr(C) over two f64, the shapes and strides
    // describe the three storages, and `c` is uniquely borrowed.
    unsafe {
        matrixmultiply::zgemm(
            CGemmOption::Standard,
            CGemmOption::Standard,
            m,
            k,
            n,
            [1.0, 0.0],
            pa.cast(),
            rsa as isize,
            csa as isize,
            pb.cast(),
            rsb as isize,
            csb as isize,
            [beta, 0.0],
            c.as_mut_ptr().cast(),
            rsc as isize,
            csc as isize,
        );
    }
}

/// Products below this many multiply-adds skip the packing kernel.
const PACKED_ABOVE: usize = 1 << 18;

fn small_gemm<SA, SB, SC>(a: &Mat<SA>, fa: Form, b: &Mat<SB>, fb: Form, beta: f64, c: &mut Mat<SC>)
where
    SA: Storage<Complex64, Dyn, Dyn>,
    SB: Storage<Complex64, Dyn, Dyn>,
    SC: StorageMut<Complex64, Dyn, Dyn>,
{
    let one = Complex64::new(1.0, 0.0);
    let beta = Complex64::new(beta, 0.0);
    match (fa, fb) {
        (Form::Plain, Form::Plain) => c.gemm(one, a, b, beta),
        (Form::Adjoint, Form::Plain) => c.gemm_ad(one, a, b, beta),
        (Form::Plain, Form::Adjoint) => c.gemm(one, a, &b.adjoint(), beta),
        (Form::Adjoint, Form::Adjoint) => c.gemm_ad(one, a, &b.adjoint(), beta),
    }
}

/// `a' b'` as a new matrix.
pub fn mul<SA, SB>(a: &Mat<SA>, fa: Form, b: &Mat<SB>, fb: Form) -> DMatrix<Complex64>
where
    SA: Storage<Complex64, Dyn, Dyn>,
    SB: Storage<Complex64, Dyn, Dyn>,
{
    let rows = if fa == Form::Plain {
        a.nrows()
    } else {
        a.ncols()
    };
    let cols = if fb == Form::Plain {
        b.ncols()
    } else {
        b.nrows()
    };
    let mut c = DMatrix::zeros(rows, cols);
    gemm(a, fa, b, fb, 0.0, &mut c);
    c
}

/// Largest entry modulus.
pub fn max_abs(m: &DMatrix<Complex64>) -> f64 {
    m.iter().fold(0.0, |acc: f64, z| acc.max(z.norm()))
}

/// `max |(m†m − 1)_ij|`.
pub fn unitarity_defect(m: &DMatrix<Complex64>) -> f64 {
    let n = m.ncols();
    let g = mul(m, Form::Adjoint, m, Form::Plain);
    let mut worst: f64 = 0.0;
    for c in 0..n {
        for r in 0..n {
            let target = if r == c { 1.0 } else { 0.0 };
            worst = worst.max((g[(r, c)] - Complex64::new(target, 0.0)).norm());
        }
    }
    worst
}

/// `exp(i h)` for a hermitian `h` through its eigendecomposition.
pub fn exp_i_hermitian(h: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    let herm = (h + h.adjoint()).scale(0.5);
    let eig = SymmetricEigen::new(herm);
    let v = &eig.eigenvectors;
    let phases: Vec<Complex64> = eig
        .eigenvalues
        .iter()
        .map(|&l| Complex64::new(0.0, l).exp())
        .collect();
    let mut vp = v.clone();
    for (j, ph) in phases.iter().enumerate() {
        for r in 0..vp.nrows() {
            vp[(r, j)] *= ph;
        }
    }
    mul(&vp, Form::Plain, v, Form::Adjoint)
}

/// `exp(i g)` for a parity-even hermitian operator, diagonalizing each parity
/// sector separately. The result is exactly block diagonal.
pub fn exp_i_even(g: &OrderedOperator) -> OrderedOperator {
    debug_assert_eq!(g.grading(), Grading::Even);
    let dim = g.dim();
    let (even, odd) = parity_sectors(dim);
    let mut out = DMatrix::from_element(dim, dim, Complex64::new(0.0, 0.0));
    for idx in [&even, &odd] {
        let block = DMatrix::from_fn(idx.len(), idx.len(), |r, c| g.matrix()[(idx[r], idx[c])]);
        let u = exp_i_hermitian(&block);
        for (r, &gr) in idx.iter().enumerate() {
            for (c, &gc) in idx.iter().enumerate() {
                out[(gr, gc)] = u[(r, c)];
            }
        }
    }
    OrderedOperator::new(g.order().clone(), out).expect("dimension preserved")
}

/// Spectral decomposition of a parity-even hermitian operator, sector by
/// sector, for evaluating `exp(isG)` at many `s`.
#[derive(Clone, Debug)]
pub struct EvenSpectral {
    dim: usize,
    sectors: Vec<(Vec<usize>, DMatrix<Complex64>, Vec<f64>)>,
}

impl EvenSpectral {
    pub fn new(g: &OrderedOperator) -> Self {
        debug_assert_eq!(g.grading(), Grading::Even);
        let dim = g.dim();
        let (even, odd) = parity_sectors(dim);
        let sectors = [even, odd]
            .into_iter()
            .map(|idx| {
                let block =
                    DMatrix::from_fn(idx.len(), idx.len(), |r, c| g.matrix()[(idx[r], idx[c])]);
                let herm = (&block + block.adjoint()).scale(0.5);
                let eig = SymmetricEigen::new(herm);
                let vals = eig.eigenvalues.iter().copied().collect();
                (idx, eig.eigenvectors, vals)
            })
            .collect();
        Self { dim, sectors }
    }

    /// `u · exp(isG)` for a parity-even `u`, sector by sector.
    pub fn rotate(&self, u: &DMatrix<Complex64>, s: f64) -> DMatrix<Complex64> {
        let mut out = DMatrix::from_element(self.dim, self.dim, Complex64::new(0.0, 0.0));
        for (idx, v, vals) in &self.sectors {
            let mut uv = mul(&gather(u, idx), Form::Plain, v, Form::Plain);
            for (j, &l) in vals.iter().enumerate() {
                let ph = Complex64::new(0.0, s * l).exp();
                uv.column_mut(j).iter_mut().for_each(|z| *z *= ph);
            }
            scatter(&mut out, idx, &mul(&uv, Form::Plain, v, Form::Adjoint));
        }
        out
    }

    /// `exp(isG)`, exactly block diagonal.
    pub fn exp_i(&self, s: f64) -> DMatrix<Complex64> {
        let mut out = DMatrix::from_element(self.dim, self.dim, Complex64::new(0.0, 0.0));
        for (idx, v, vals) in &self.sectors {
            let mut vp = v.clone();
            for (j, &l) in vals.iter().enumerate() {
                let ph = Complex64::new(0.0, s * l).exp();
                for r in 0..vp.nrows() {
                    vp[(r, j)] *= ph;
                }
            }
            let u = mul(&vp, Form::Plain, v, Form::Adjoint);
            for (r, &gr) in idx.iter().enumerate() {
                for (c, &gc) in idx.iter().enumerate() {
                    out[(gr, gc)] = u[(r, c)];
                }
            }
        }
        out
    }
}

fn gather(m: &DMatrix<Complex64>, idx: &[usize]) -> DMatrix<Complex64> {
    DMatrix::from_fn(idx.len(), idx.len(), |r, c| m[(idx[r], idx[c])])
}

fn scatter(out: &mut DMatrix<Complex64>, idx: &[usize], block: &DMatrix<Complex64>) {
    for (c, &gc) in idx.iter().enumerate() {
        for (r, &gr) in idx.iter().enumerate() {
            out[(gr, gc)] = block[(r, c)];
        }
    }
}

/// [`unitarity_defect`] of a parity-even matrix, one sector at a time.
pub fn even_unitarity_defect(u: &DMatrix<Complex64>) -> f64 {
    let (even, odd) = parity_sectors(u.nrows());
    unitarity_defect(&gather(u, &even)).max(unitarity_defect(&gather(u, &odd)))
}

/// [`reunitarize`] of a parity-even matrix, one sector at a time.
pub fn reunitarize_even(u: &mut DMatrix<Complex64>, tol: f64) {
    let (even, odd) = parity_sectors(u.nrows());
    for idx in [even, odd] {
        let mut block = gather(u, &idx);
        reunitarize(&mut block, tol);
        scatter(u, &idx, &block);
    }
}

/// Newton-Schulz polishing `u ← u (3 − u†u) / 2` until the unitarity defect
/// drops below `tol` (or a handful of sweeps have run).
pub fn reunitarize(u: &mut DMatrix<Complex64>, tol: f64) {
    let n = u.ncols();
    for _ in 0..8 {
        if unitarity_defect(u) <= tol {
            return;
        }
        let g = mul(&*u, Form::Adjoint, &*u, Form::Plain);
        let corr = DMatrix::<Complex64>::identity(n, n).scale(3.0) - g;
        *u = mul(&*u, Form::Plain, &corr, Form::Plain).scale(0.5);
    }
}

/// Smallest eigenvalue of a hermitian matrix, using the real symmetric solver
/// when every entry is real.
pub fn min_eigenvalue_hermitian(h: &DMatrix<Complex64>) -> f64 {
    if h.iter().all(|z| z.im == 0.0) {
        let re = h.map(|z| z.re);
        let sym = (&re + re.transpose()).scale(0.5);
        sym.symmetric_eigenvalues().min()
    } else {
        let herm = (h + h.adjoint()).scale(0.5);
        herm.symmetric_eigenvalues().min()
    }
}

/// All eigenvalues of a hermitian matrix, ascending.
pub fn eigenvalues_hermitian(h: &DMatrix<Complex64>) -> Vec<f64> {
    let herm = (h + h.adjoint()).scale(0.5);
    let mut v: Vec<f64> = herm.symmetric_eigenvalues().iter().copied().collect();
    v.sort_by(f64::total_cmp);
    v
}
