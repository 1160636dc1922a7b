use nalgebra::DMatrix;
use num_complex::Complex64;

use super::{index_parity, FermionPolynomial, Grading, LadderOp, ModeOrder};
use crate::error::{Error, Result};
use crate::linalg::{self, Form};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Matrix of a fermionic operator in the occupation basis of a mode order.
#[derive(Clone, Debug, PartialEq)]
pub struct OrderedOperator {
    order: ModeOrder,
    matrix: DMatrix<Complex64>,
    grading: Grading,
}

impl OrderedOperator {
    /// Wraps `matrix`, classifying its grading from the exact zero pattern.
    pub fn new(order: ModeOrder, matrix: DMatrix<Complex64>) -> Result<Self> {
        let dim = order.dim();
        if matrix.nrows() != dim || matrix.ncols() != dim {
            return Err(Error::DimensionMismatch {
                modes: order.len(),
                found: matrix.nrows().max(matrix.ncols()),
            });
        }
        let grading = classify(&matrix);
        Ok(Self {
            order,
            matrix,
            grading,
        })
    }

    pub(crate) fn from_parts(
        order: ModeOrder,
        matrix: DMatrix<Complex64>,
        grading: Grading,
    ) -> Self {
        debug_assert_eq!(matrix.nrows(), order.dim());
        debug_assert!(
            grading == Grading::Mixed
                || classify(&matrix) == grading
                || matrix.iter().all(|z| *z == ZERO),
            "grading tag disagrees with matrix"
        );
        Self {
            order,
            matrix,
            grading,
        }
    }

    pub fn identity(order: ModeOrder) -> Self {
        let dim = order.dim();
        Self::from_parts(order, DMatrix::identity(dim, dim), Grading::Even)
    }

    /// 1×1 operator on the empty order.
    pub fn scalar(value: Complex64) -> Self {
        Self::from_parts(
            ModeOrder::empty(),
            DMatrix::from_element(1, 1, value),
            Grading::Even,
        )
    }

    pub fn order(&self) -> &ModeOrder {
        &self.order
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> DMatrix<Complex64> {
        self.matrix
    }

    pub fn grading(&self) -> Grading {
        self.grading
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// Matrix entry `⟨row|a|col⟩`.
    pub fn entry(&self, row: usize, col: usize) -> Complex64 {
        self.matrix[(row, col)]
    }

    pub fn adjoint(&self) -> Self {
        Self::from_parts(self.order.clone(), self.matrix.adjoint(), self.grading)
    }

    /// Value of a 1×1 operator.
    pub fn as_scalar(&self) -> Option<Complex64> {
        (self.order.is_empty()).then(|| self.matrix[(0, 0)])
    }

    /// Matrix product of two operators written in the same order.
    pub fn mul(&self, rhs: &OrderedOperator) -> Result<OrderedOperator> {
        if self.order != rhs.order {
            return Err(Error::ModeSetMismatch);
        }
        let grading = match (self.grading, rhs.grading) {
            (Grading::Mixed, _) | (_, Grading::Mixed) => Grading::Mixed,
            (a, b) if a == b => Grading::Even,
            _ => Grading::Odd,
        };
        let matrix = linalg::mul(&self.matrix, Form::Plain, &rhs.matrix, Form::Plain);
        Ok(Self::new_with_hint(self.order.clone(), matrix, grading))
    }

    fn new_with_hint(order: ModeOrder, matrix: DMatrix<Complex64>, hint: Grading) -> Self {
        if hint == Grading::Mixed {
            let grading = classify(&matrix);
            Self {
                order,
                matrix,
                grading,
            }
        } else {
            Self::from_parts(order, matrix, hint)
        }
    }

    pub fn trace(&self) -> Complex64 {
        self.matrix.trace()
    }

    /// Largest entry of `|a†a − 1|`.
    pub fn unitarity_defect(&self) -> f64 {
        crate::linalg::unitarity_defect(&self.matrix)
    }

    /// Largest entry of `|a − a†|`.
    pub fn hermiticity_defect(&self) -> f64 {
        crate::linalg::max_abs(&(&self.matrix - self.matrix.adjoint()))
    }
}

/// Exact parity classification. A zero matrix counts as even.
pub(crate) fn classify(m: &DMatrix<Complex64>) -> Grading {
    let mut even_ok = true;
    let mut odd_ok = true;
    for c in 0..m.ncols() {
        let pc = index_parity(c);
        for r in 0..m.nrows() {
            if m[(r, c)] != ZERO {
                if index_parity(r) == pc {
                    odd_ok = false;
                } else {
                    even_ok = false;
                }
            }
        }
        if !even_ok && !odd_ok {
            return Grading::Mixed;
        }
    }
    if even_ok {
        Grading::Even
    } else {
        Grading::Odd
    }
}

/// Applies one Jordan-Wigner ladder image to a basis index.
///
/// Returns the image index and the `σ^z`-string sign, or `None` when the
/// operator annihilates the state.
#[inline]
pub(crate) fn ladder_action(
    len: usize,
    position: usize,
    dagger: bool,
    index: usize,
) -> Option<(usize, f64)> {
    let mask = 1usize << (len - 1 - position);
    let occupied = index & mask != 0;
    if occupied == dagger {
        return None;
    }
    // occupied positions strictly before `position` are the high bits above mask
    let preceding = (index >> (len - position)).count_ones();
    let sign = if preceding % 2 == 0 { 1.0 } else { -1.0 };
    Some((index ^ mask, sign))
}

/// Positions of a monomial's factors in `order`, rightmost factor first.
pub(crate) fn factor_positions(ops: &[LadderOp], order: &ModeOrder) -> Result<Vec<(usize, bool)>> {
    ops.iter()
        .rev()
        .map(|op| {
            order
                .position(op.mode)
                .map(|p| (p, op.dagger))
                .ok_or(Error::ModeNotInOrder(op.mode))
        })
        .collect()
}

/// Action of a monomial (given as reversed factor positions) on a basis index.
#[inline]
pub(crate) fn monomial_action(
    len: usize,
    factors: &[(usize, bool)],
    index: usize,
) -> Option<(usize, f64)> {
    let mut state = index;
    let mut sign = 1.0;
    for &(pos, dagger) in factors {
        let (next, s) = ladder_action(len, pos, dagger, state)?;
        state = next;
        sign *= s;
    }
    Some((state, sign))
}

/// Jordan-Wigner image `σ^z ⊗ … ⊗ σ^z ⊗ σ^+ ⊗ 1 ⊗ …` of `f_mode` in `order`.
pub fn jwt_annihilator(order: &ModeOrder, mode: usize) -> Result<OrderedOperator> {
    let pos = order.position(mode).ok_or(Error::ModeNotInOrder(mode))?;
    let dim = order.dim();
    let mut m = DMatrix::from_element(dim, dim, ZERO);
    for col in 0..dim {
        if let Some((row, s)) = ladder_action(order.len(), pos, false, col) {
            m[(row, col)] = Complex64::new(s, 0.0);
        }
    }
    Ok(OrderedOperator::from_parts(order.clone(), m, Grading::Odd))
}

/// Local Jordan-Wigner representation of a polynomial in `order`.
pub fn represent_polynomial(p: &FermionPolynomial, order: &ModeOrder) -> Result<OrderedOperator> {
    let dim = order.dim();
    let len = order.len();
    let mut m = DMatrix::from_element(dim, dim, ZERO);
    let mut has_even = false;
    let mut has_odd = false;
    for (mono, coeff) in p.terms() {
        if mono.is_even() {
            has_even = true;
        } else {
            has_odd = true;
        }
        let factors = factor_positions(mono.ops(), order)?;
        for col in 0..dim {
            if let Some((row, s)) = monomial_action(len, &factors, col) {
                m[(row, col)] += coeff * s;
            }
        }
    }
    let grading = match (has_even, has_odd) {
        (_, false) => Grading::Even,
        (false, true) => Grading::Odd,
        (true, true) => Grading::Mixed,
    };
    Ok(OrderedOperator::new_with_hint(order.clone(), m, grading))
}

/// Sector indices sorted by parity: even-parity states first, each sector in
/// index order.
pub(crate) fn parity_sectors(dim: usize) -> (Vec<usize>, Vec<usize>) {
    (0..dim).partition(|&i| index_parity(i) == 0)
}

/// The even and odd diagonal blocks of a parity-even operator.
pub fn parity_blocks(a: &OrderedOperator) -> Result<(DMatrix<Complex64>, DMatrix<Complex64>)> {
    if a.grading != Grading::Even {
        return Err(Error::GradingViolation {
            expected: Grading::Even,
            found: a.grading,
        });
    }
    let (even, odd) = parity_sectors(a.dim());
    let block =
        |idx: &[usize]| DMatrix::from_fn(idx.len(), idx.len(), |r, c| a.matrix[(idx[r], idx[c])]);
    Ok((block(&even), block(&odd)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fermion::LadderOp;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn nonzeros(a: &OrderedOperator) -> Vec<(usize, usize, Complex64)> {
        let mut out = Vec::new();
        for r in 0..a.dim() {
            for col in 0..a.dim() {
                let v = a.entry(r, col);
                if v != ZERO {
                    out.push((r, col, v));
                }
            }
        }
        out
    }

    #[test]
    fn annihilator_single_mode() {
        let a = jwt_annihilator(&ModeOrder::from([1]), 1).unwrap();
        assert_eq!(nonzeros(&a), vec![(0, 1, c(1.0))]);
        assert_eq!(a.grading(), Grading::Odd);
    }

    #[test]
    fn annihilator_carries_string() {
        let a = jwt_annihilator(&ModeOrder::from([1, 2]), 2).unwrap();
        assert_eq!(
            nonzeros(&a),
            vec![(0b00, 0b01, c(1.0)), (0b10, 0b11, c(-1.0))]
        );
    }

    #[test]
    fn annihilator_missing_mode() {
        assert_eq!(
            jwt_annihilator(&ModeOrder::from([1, 2]), 5).unwrap_err(),
            Error::ModeNotInOrder(5)
        );
    }

    #[test]
    fn number_operator_is_projector() {
        let n = represent_polynomial(&FermionPolynomial::number(3), &ModeOrder::from([3])).unwrap();
        assert_eq!(
            n.matrix(),
            &DMatrix::from_diagonal(&nalgebra::dvector![c(0.0), c(1.0)])
        );
    }

    #[test]
    fn hopping_representation() {
        let h = represent_polynomial(&FermionPolynomial::hopping(1, 2), &ModeOrder::from([1, 2]))
            .unwrap();
        assert_eq!(
            nonzeros(&h),
            vec![(0b01, 0b10, c(1.0)), (0b10, 0b01, c(1.0))]
        );
        assert_eq!(h.grading(), Grading::Even);
    }

    #[test]
    fn unit_polynomial_is_identity() {
        let one =
            represent_polynomial(&FermionPolynomial::one(), &ModeOrder::from([1, 2])).unwrap();
        assert_eq!(one.matrix(), &DMatrix::identity(4, 4));
    }

    #[test]
    fn missing_mode_is_an_error() {
        let err =
            represent_polynomial(&FermionPolynomial::number(9), &ModeOrder::from([1])).unwrap_err();
        assert_eq!(err, Error::ModeNotInOrder(9));
    }

    #[test]
    fn mixed_polynomial_grading() {
        let p = FermionPolynomial::create(1) + FermionPolynomial::number(1);
        let a = represent_polynomial(&p, &ModeOrder::from([1])).unwrap();
        assert_eq!(a.grading(), Grading::Mixed);
        assert!(parity_blocks(&a).is_err());
    }

    #[test]
    fn blocks_of_identity_and_number() {
        let id = OrderedOperator::identity(ModeOrder::from([1, 2]));
        let (e, o) = parity_blocks(&id).unwrap();
        assert_eq!(e, DMatrix::identity(2, 2));
        assert_eq!(o, DMatrix::identity(2, 2));

        let n = represent_polynomial(&FermionPolynomial::number(3), &ModeOrder::from([3])).unwrap();
        let (e, o) = parity_blocks(&n).unwrap();
        assert_eq!(e, DMatrix::from_element(1, 1, c(0.0)));
        assert_eq!(o, DMatrix::from_element(1, 1, c(1.0)));
    }

    #[test]
    fn blocks_of_hopping() {
        let h = represent_polynomial(&FermionPolynomial::hopping(1, 2), &ModeOrder::from([1, 2]))
            .unwrap();
        let (e, o) = parity_blocks(&h).unwrap();
        assert_eq!(e, DMatrix::from_element(2, 2, c(0.0)));
        assert_eq!(
            o,
            DMatrix::from_row_slice(2, 2, &[c(0.0), c(1.0), c(1.0), c(0.0)])
        );
    }

    #[test]
    fn odd_operator_has_no_blocks() {
        let a = jwt_annihilator(&ModeOrder::from([1]), 1).unwrap();
        assert!(matches!(
            parity_blocks(&a),
            Err(Error::GradingViolation { .. })
        ));
    }

    #[test]
    fn monomial_order_matters() {
        // f†_1 f_2 vs f_2 f†_1 differ by sign
        let o = ModeOrder::from([1, 2]);
        let a = FermionPolynomial::term(c(1.0), [LadderOp::create(1), LadderOp::annihilate(2)]);
        let b = FermionPolynomial::term(c(1.0), [LadderOp::annihilate(2), LadderOp::create(1)]);
        let ra = represent_polynomial(&a, &o).unwrap();
        let rb = represent_polynomial(&b, &o).unwrap();
        assert_eq!(ra.matrix(), &(-rb.matrix()));
    }
}
