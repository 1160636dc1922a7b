use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fermion::{
    represent_polynomial, FermionPolynomial, LadderOp, ModeOrder, OrderedOperator,
};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Default generator degree: quartic on small supports, quadratic above.
pub fn default_degree(support_len: usize) -> usize {
    if support_len <= 4 {
        4
    } else {
        2
    }
}

/// One hermitian basis element `B` with `B³ = B`, stored sparsely in the
/// gate's order.
#[derive(Clone, Debug)]
pub struct BasisElement {
    poly: FermionPolynomial,
    entries: Vec<(usize, usize, Complex64)>,
    /// Diagonal of `B²`, a projector.
    square: Vec<f64>,
}

impl BasisElement {
    fn new(poly: FermionPolynomial, order: &ModeOrder) -> Result<Self> {
        let m = represent_polynomial(&poly, order)?.into_matrix();
        let dim = m.nrows();
        let mut entries = Vec::new();
        let mut square = vec![0.0; dim];
        for c in 0..dim {
            for r in 0..dim {
                let v = m[(r, c)];
                if v != ZERO {
                    entries.push((r, c, v));
                    square[c] += v.norm_sqr();
                }
            }
        }
        Ok(Self {
            poly,
            entries,
            square,
        })
    }

    pub fn poly(&self) -> &FermionPolynomial {
        &self.poly
    }

    pub fn entries(&self) -> &[(usize, usize, Complex64)] {
        &self.entries
    }

    /// `u · exp(isB) = u (1 + (cos s − 1) B² + i sin s B)`.
    pub fn rotate_right(&self, u: &DMatrix<Complex64>, s: f64) -> DMatrix<Complex64> {
        let mut out = u.clone();
        let damp = s.cos() - 1.0;
        for (c, &p) in self.square.iter().enumerate() {
            if p != 0.0 {
                let mut col = out.column_mut(c);
                col *= Complex64::new(1.0 + damp * p, 0.0);
            }
        }
        let is = Complex64::new(0.0, s.sin());
        for &(r, c, v) in &self.entries {
            let f = is * v;
            for row in 0..u.nrows() {
                out[(row, c)] += u[(row, r)] * f;
            }
        }
        out
    }
}

/// Even hermitian generators on a support: `m + m†` and `i(m − m†)` for
/// every normal-ordered `m = f†_A f_B` with `A ≠ B`, and `m` itself for
/// `A = B`, with `0 < |A| + |B| ≤ max_degree` even.
#[derive(Clone, Debug)]
pub struct GeneratorBasis {
    order: ModeOrder,
    elements: Vec<BasisElement>,
}

impl GeneratorBasis {
    pub fn new(order: &ModeOrder, max_degree: usize) -> Result<Self> {
        if max_degree < 2 {
            return Err(Error::InvalidOptions(format!(
                "generator degree {max_degree} is below 2"
            )));
        }
        let k = order.len();
        let subsets: Vec<usize> = (0..1usize << k).collect();
        let modes_of = |mask: usize| -> Vec<usize> {
            (0..k)
                .filter(|p| mask >> (k - 1 - p) & 1 == 1)
                .map(|p| order.modes()[p])
                .collect()
        };
        let one = Complex64::new(1.0, 0.0);
        let mut elements = Vec::new();
        for &a in &subsets {
            for &b in &subsets {
                let deg = (a.count_ones() + b.count_ones()) as usize;
                if deg == 0 || deg % 2 == 1 || deg > max_degree || a > b {
                    continue;
                }
                let ops = modes_of(a)
                    .into_iter()
                    .map(LadderOp::create)
                    .chain(modes_of(b).into_iter().rev().map(LadderOp::annihilate));
                let m = FermionPolynomial::term(one, ops);
                if a == b {
                    elements.push(BasisElement::new(m, order)?);
                } else {
                    let md = m.adjoint();
                    elements.push(BasisElement::new(&m + &md, order)?);
                    elements.push(BasisElement::new(
                        (&m - &md).scale(Complex64::new(0.0, 1.0)),
                        order,
                    )?);
                }
            }
        }
        Ok(Self {
            order: order.clone(),
            elements,
        })
    }

    pub fn order(&self) -> &ModeOrder {
        &self.order
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn elements(&self) -> &[BasisElement] {
        &self.elements
    }

    /// Dense `Σ_b c_b B_b`.
    pub fn combine(&self, coeffs: &[f64]) -> OrderedOperator {
        assert_eq!(coeffs.len(), self.len(), "one coefficient per element");
        let dim = self.order.dim();
        let mut m = DMatrix::from_element(dim, dim, ZERO);
        for (e, &c) in self.elements.iter().zip(coeffs) {
            if c != 0.0 {
                for &(r, col, v) in &e.entries {
                    m[(r, col)] += v * c;
                }
            }
        }
        OrderedOperator::new(self.order.clone(), m).expect("dimension matches order")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg;

    #[test]
    fn two_mode_basis_spans_even_algebra() {
        let b = GeneratorBasis::new(&ModeOrder::from([3, 7]), 4).unwrap();
        assert_eq!(b.len(), 7);
    }

    #[test]
    fn four_mode_counts() {
        let order = ModeOrder::from([1, 2, 3, 4]);
        assert_eq!(GeneratorBasis::new(&order, 2).unwrap().len(), 28);
        assert_eq!(GeneratorBasis::new(&order, 4).unwrap().len(), 98);
    }

    #[test]
    fn elements_are_hermitian_even_and_cube_to_themselves() {
        let order = ModeOrder::from([1, 2, 4]);
        for e in GeneratorBasis::new(&order, 4).unwrap().elements() {
            let g = represent_polynomial(e.poly(), &order).unwrap();
            assert!(e.poly().is_even());
            assert_eq!(g.hermiticity_defect(), 0.0);
            let m = g.matrix();
            assert!(linalg::max_abs(&(m * m * m - m)) < 1e-15);
        }
    }

    #[test]
    fn closed_form_rotation_matches_exponential() {
        let order = ModeOrder::from([1, 2, 3]);
        let basis = GeneratorBasis::new(&order, 2).unwrap();
        let u = DMatrix::<Complex64>::identity(8, 8);
        for e in basis.elements() {
            let s = 0.37;
            let g = represent_polynomial(e.poly(), &order).unwrap();
            let direct = linalg::exp_i_hermitian(&g.matrix().scale(s));
            assert!(linalg::max_abs(&(e.rotate_right(&u, s) - direct)) < 1e-14);
        }
    }
}
