//! Dynamical reordering: moving operators between mode orders without ever
//! building a global string operator.
//!
//! Every primitive here acts on an [`OrderedOperator`] and returns the
//! representation of the *same* fermionic operator in a new order (or of its
//! partial trace / partial projection). The only sign-carrying ingredient is
//! the adjacent fermionic swap
//!
//! ```text
//! s = |00⟩⟨00| + |01⟩⟨10| + |10⟩⟨01| − |11⟩⟨11|
//! ```
//!
//! and every other move is composed from it: a general permutation is a
//! bubble-sort sequence of adjacent swaps, and the partial trace/projection of
//! an arbitrary mode first moves that mode to the front.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fermion::{classify, Grading, ModeOrder, OrderedOperator};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Unitarity tolerance for gates handed to [`conjugate`].
pub const UNITARITY_TOL: f64 = 1e-10;

/// The fixed 4×4 fermionic swap.
#[derive(Clone, Copy, Debug, Default)]
pub struct SwapMatrix;

impl SwapMatrix {
    pub fn matrix(&self) -> DMatrix<Complex64> {
        let one = Complex64::new(1.0, 0.0);
        let mut s = DMatrix::from_element(4, 4, ZERO);
        s[(0b00, 0b00)] = one;
        s[(0b01, 0b10)] = one;
        s[(0b10, 0b01)] = one;
        s[(0b11, 0b11)] = -one;
        s
    }
}

/// A signed permutation of basis indices: `|x⟩ ↦ sign[x] |image[x]⟩`.
#[derive(Clone, Debug, PartialEq)]
pub struct BasisPermutation {
    image: Vec<usize>,
    sign: Vec<f64>,
}

impl BasisPermutation {
    pub fn identity(dim: usize) -> Self {
        Self {
            image: (0..dim).collect(),
            sign: vec![1.0; dim],
        }
    }

    pub fn image(&self, x: usize) -> usize {
        self.image[x]
    }

    pub fn sign(&self, x: usize) -> f64 {
        self.sign[x]
    }

    pub fn dim(&self) -> usize {
        self.image.len()
    }

    /// Composes an adjacent swap of positions `(i, i+1)` after `self`.
    fn then_swap(&mut self, len: usize, i: usize) {
        let hi = 1usize << (len - 1 - i);
        let lo = hi >> 1;
        for (img, sg) in self.image.iter_mut().zip(self.sign.iter_mut()) {
            let a = *img & hi != 0;
            let b = *img & lo != 0;
            if a != b {
                *img ^= hi | lo;
            } else if a {
                *sg = -*sg;
            }
        }
    }

    /// `P m P†` for the signed permutation matrix `P`.
    pub fn conjugate_matrix(&self, m: &DMatrix<Complex64>) -> DMatrix<Complex64> {
        let dim = self.dim();
        let mut out = DMatrix::from_element(dim, dim, ZERO);
        for c in 0..dim {
            let (ic, sc) = (self.image[c], self.sign[c]);
            for r in 0..dim {
                let v = m[(r, c)];
                if v != ZERO {
                    out[(self.image[r], ic)] = v * (self.sign[r] * sc);
                }
            }
        }
        out
    }
}

/// Sequence of adjacent transpositions carrying `source` to `target`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ReorderPlan {
    source: ModeOrder,
    target: ModeOrder,
    transpositions: Vec<usize>,
}

impl ReorderPlan {
    /// Bubble-sort decomposition (deterministic, O(k²) swaps).
    pub fn bubble(source: &ModeOrder, target: &ModeOrder) -> Result<Self> {
        let rank = target_ranks(source, target)?;
        let mut cur: Vec<usize> = source.modes().iter().map(|m| rank(*m)).collect();
        let mut transpositions = Vec::new();
        let k = cur.len();
        for pass in 0..k {
            let mut swapped = false;
            for i in 0..k.saturating_sub(1 + pass) {
                if cur[i] > cur[i + 1] {
                    cur.swap(i, i + 1);
                    transpositions.push(i);
                    swapped = true;
                }
            }
            if !swapped {
                break;
            }
        }
        Ok(Self {
            source: source.clone(),
            target: target.clone(),
            transpositions,
        })
    }

    /// Alternative decomposition: fill target positions left to right,
    /// dragging each mode leftwards into place.
    pub fn selection(source: &ModeOrder, target: &ModeOrder) -> Result<Self> {
        let rank = target_ranks(source, target)?;
        let mut cur: Vec<usize> = source.modes().iter().map(|m| rank(*m)).collect();
        let mut transpositions = Vec::new();
        for want in 0..cur.len() {
            let mut at = cur.iter().position(|&r| r == want).expect("rank present");
            while at > want {
                cur.swap(at - 1, at);
                transpositions.push(at - 1);
                at -= 1;
            }
        }
        Ok(Self {
            source: source.clone(),
            target: target.clone(),
            transpositions,
        })
    }

    /// Plan from explicit positions; the target is whatever order results.
    pub fn from_transpositions(source: &ModeOrder, transpositions: Vec<usize>) -> Result<Self> {
        let mut modes = source.modes().to_vec();
        for &i in &transpositions {
            if i + 1 >= modes.len() {
                return Err(Error::PositionOutOfRange {
                    position: i,
                    len: modes.len(),
                });
            }
            modes.swap(i, i + 1);
        }
        Ok(Self {
            source: source.clone(),
            target: ModeOrder::new(modes)?,
            transpositions,
        })
    }

    pub fn source(&self) -> &ModeOrder {
        &self.source
    }

    pub fn target(&self) -> &ModeOrder {
        &self.target
    }

    pub fn transpositions(&self) -> &[usize] {
        &self.transpositions
    }

    /// The composed signed permutation of basis indices.
    pub fn basis_permutation(&self) -> BasisPermutation {
        let len = self.source.len();
        let mut p = BasisPermutation::identity(self.source.dim());
        for &i in &self.transpositions {
            p.then_swap(len, i);
        }
        p
    }
}

fn target_ranks<'a>(
    source: &ModeOrder,
    target: &'a ModeOrder,
) -> Result<impl Fn(usize) -> usize + 'a> {
    if !source.same_modes(target) {
        return Err(Error::NotAPermutation);
    }
    Ok(move |m: usize| target.position(m).expect("checked membership"))
}

fn reject_mixed(a: &OrderedOperator) -> Result<()> {
    if a.grading() == Grading::Mixed {
        Err(Error::MixedGrading)
    } else {
        Ok(())
    }
}

/// Exchanges positions `position` and `position + 1` (0-based) of the order:
/// `a ↦ (1⊗s⊗1) a (1⊗s⊗1)`.
pub fn adjacent_swap(a: &OrderedOperator, position: usize) -> Result<OrderedOperator> {
    let plan = ReorderPlan::from_transpositions(a.order(), vec![position])?;
    Ok(apply_plan(a, &plan))
}

/// Re-expresses `a` in `target`, a permutation of its order.
pub fn reorder(a: &OrderedOperator, target: &ModeOrder) -> Result<OrderedOperator> {
    if a.order() == target {
        return Ok(a.clone());
    }
    let plan = ReorderPlan::bubble(a.order(), target)?;
    Ok(apply_plan(a, &plan))
}

/// Applies a precomputed plan. Panics if the plan does not start at `a`'s order.
pub fn apply_plan(a: &OrderedOperator, plan: &ReorderPlan) -> OrderedOperator {
    assert_eq!(
        a.order(),
        plan.source(),
        "plan source differs from operator order"
    );
    let m = plan.basis_permutation().conjugate_matrix(a.matrix());
    OrderedOperator::from_parts(plan.target().clone(), m, a.grading())
}

/// Prepends `mode` to the order: `1⊗a` for even `a`, `σ^z⊗a` for odd `a`.
pub fn prepend_mode(a: &OrderedOperator, mode: usize) -> Result<OrderedOperator> {
    if a.order().contains(mode) {
        return Err(Error::DuplicateMode(mode));
    }
    reject_mixed(a)?;
    let d = a.dim();
    let lower = if a.grading() == Grading::Odd {
        -1.0
    } else {
        1.0
    };
    let mut m = DMatrix::from_element(2 * d, 2 * d, ZERO);
    m.view_mut((0, 0), (d, d)).copy_from(a.matrix());
    m.view_mut((d, d), (d, d))
        .copy_from(&a.matrix().scale(lower));
    let mut modes = Vec::with_capacity(a.order().len() + 1);
    modes.push(mode);
    modes.extend_from_slice(a.order().modes());
    Ok(OrderedOperator::from_parts(
        ModeOrder::new(modes)?,
        m,
        a.grading(),
    ))
}

/// Appends `mode` at the end of the order. No string passes the new mode, so
/// the image is `a⊗1` for any grading.
pub fn append_mode(a: &OrderedOperator, mode: usize) -> Result<OrderedOperator> {
    if a.order().contains(mode) {
        return Err(Error::DuplicateMode(mode));
    }
    let d = a.dim();
    let mut m = DMatrix::from_element(2 * d, 2 * d, ZERO);
    for c in 0..d {
        for r in 0..d {
            let v = a.matrix()[(r, c)];
            m[(2 * r, 2 * c)] = v;
            m[(2 * r + 1, 2 * c + 1)] = v;
        }
    }
    let mut modes = a.order().modes().to_vec();
    modes.push(mode);
    Ok(OrderedOperator::from_parts(
        ModeOrder::new(modes)?,
        m,
        a.grading(),
    ))
}

/// `u a u†` for a parity-even unitary `u` acting on the same modes as `a`.
pub fn conjugate(a: &OrderedOperator, u: &OrderedOperator) -> Result<OrderedOperator> {
    if u.grading() != Grading::Even {
        return Err(Error::GradingViolation {
            expected: Grading::Even,
            found: u.grading(),
        });
    }
    if !a.order().same_modes(u.order()) {
        return Err(Error::ModeSetMismatch);
    }
    let deviation = u.unitarity_defect();
    if deviation > UNITARITY_TOL {
        return Err(Error::NotUnitary { deviation });
    }
    let u = reorder(u, a.order())?;
    let m = u.matrix() * a.matrix() * u.matrix().adjoint();
    OrderedOperator::new(a.order().clone(), m)
}

/// Extends both operators to the union of their modes: `a`'s order first,
/// then `b`'s remaining modes in `b`'s relative order.
pub fn align_supports(
    a: &OrderedOperator,
    b: &OrderedOperator,
) -> Result<(OrderedOperator, OrderedOperator)> {
    reject_mixed(a)?;
    reject_mixed(b)?;
    let mut union = a.order().modes().to_vec();
    union.extend(
        b.order()
            .modes()
            .iter()
            .copied()
            .filter(|m| !a.order().contains(*m)),
    );
    let union = ModeOrder::new(union)?;
    Ok((embed(a, &union)?, embed(b, &union)?))
}

/// Prepends the missing modes of `target` and reorders into it.
pub(crate) fn embed(a: &OrderedOperator, target: &ModeOrder) -> Result<OrderedOperator> {
    let mut out = a.clone();
    for &m in target.modes().iter().rev() {
        if !a.order().contains(m) {
            out = prepend_mode(&out, m)?;
        }
    }
    reorder(&out, target)
}

/// Moves `mode` to the front, keeping the others in their relative order.
fn to_front(a: &OrderedOperator, mode: usize) -> Result<OrderedOperator> {
    if !a.order().contains(mode) {
        return Err(Error::ModeNotInOrder(mode));
    }
    let mut modes = vec![mode];
    modes.extend(a.order().modes().iter().copied().filter(|&m| m != mode));
    reorder(a, &ModeOrder::new(modes)?)
}

fn drop_front(order: &ModeOrder) -> ModeOrder {
    ModeOrder::new(order.modes()[1..].to_vec()).expect("sub-order of a valid order")
}

/// Fermionic partial trace over `mode`.
pub fn partial_trace(a: &OrderedOperator, mode: usize) -> Result<OrderedOperator> {
    reject_mixed(a)?;
    let front = to_front(a, mode)?;
    let half = front.dim() / 2;
    let m = front.matrix();
    let traced = m.view((0, 0), (half, half)) + m.view((half, half), (half, half));
    let grading = classify(&traced);
    Ok(OrderedOperator::from_parts(
        drop_front(front.order()),
        traced,
        grading,
    ))
}

/// Partial projection of `mode` onto the empty (`false`) or filled (`true`)
/// state followed by the partial trace; the raw block, not renormalized.
pub fn partial_project(
    a: &OrderedOperator,
    mode: usize,
    occupied: bool,
) -> Result<OrderedOperator> {
    let front = to_front(a, mode)?;
    let half = front.dim() / 2;
    let off = if occupied { half } else { 0 };
    let block = front.matrix().view((off, off), (half, half)).into_owned();
    let grading = classify(&block);
    Ok(OrderedOperator::from_parts(
        drop_front(front.order()),
        block,
        grading,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fermion::{jwt_annihilator, represent_polynomial, FermionPolynomial};

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn rep(p: &FermionPolynomial, order: &[usize]) -> OrderedOperator {
        represent_polynomial(p, &ModeOrder::from(order)).unwrap()
    }

    #[test]
    fn append_equals_prepend_then_reorder() {
        let odd = rep(&FermionPolynomial::create(2), &[2, 5]);
        let even = rep(&FermionPolynomial::hopping(2, 5), &[2, 5]);
        for a in [odd, even] {
            let appended = append_mode(&a, 9).unwrap();
            let via_front =
                reorder(&prepend_mode(&a, 9).unwrap(), &ModeOrder::from([2, 5, 9])).unwrap();
            assert_eq!(appended, via_front);
        }
    }

    #[test]
    fn swap_matrix_is_an_involution() {
        let s = SwapMatrix.matrix();
        assert_eq!(&s * &s, DMatrix::identity(4, 4));
        assert_eq!(s.adjoint(), s);
    }

    #[test]
    fn swap_identity() {
        let id = OrderedOperator::identity(ModeOrder::from([4, 7, 9]));
        let out = adjacent_swap(&id, 1).unwrap();
        assert_eq!(out.matrix(), id.matrix());
        assert_eq!(out.order(), &ModeOrder::from([4, 9, 7]));
    }

    #[test]
    fn swap_out_of_range() {
        let id = OrderedOperator::identity(ModeOrder::from([1, 2]));
        assert_eq!(
            adjacent_swap(&id, 1).unwrap_err(),
            Error::PositionOutOfRange {
                position: 1,
                len: 2
            }
        );
    }

    #[test]
    fn swap_hopping_half() {
        let p = FermionPolynomial::term(
            c(1.0),
            [
                crate::fermion::LadderOp::create(1),
                crate::fermion::LadderOp::annihilate(2),
            ],
        );
        let a = rep(&p, &[1, 2]);
        assert_eq!(a.entry(0b10, 0b01), c(1.0));
        let swapped = adjacent_swap(&a, 0).unwrap();
        assert_eq!(swapped, rep(&p, &[2, 1]));
        assert_eq!(swapped.entry(0b01, 0b10), c(1.0));
    }

    #[test]
    fn swap_density_density() {
        let p = FermionPolynomial::number(1) * FermionPolynomial::number(2);
        let a = rep(&p, &[1, 2]);
        let swapped = adjacent_swap(&a, 0).unwrap();
        assert_eq!(swapped.entry(0b11, 0b11), c(1.0));
        assert_eq!(swapped.matrix(), a.matrix());
    }

    #[test]
    fn reorder_identity_permutation() {
        let a = rep(&FermionPolynomial::hopping(1, 3), &[1, 2, 3]);
        let plan = ReorderPlan::bubble(a.order(), a.order()).unwrap();
        assert!(plan.transpositions().is_empty());
        assert_eq!(reorder(&a, a.order()).unwrap(), a);
    }

    #[test]
    fn reorder_reverse_matches_direct() {
        let p = FermionPolynomial::term(
            c(1.0),
            [
                crate::fermion::LadderOp::create(1),
                crate::fermion::LadderOp::annihilate(3),
            ],
        );
        let a = rep(&p, &[1, 2, 3]);
        let back = reorder(&a, &ModeOrder::from([3, 2, 1])).unwrap();
        assert_eq!(back, rep(&p, &[3, 2, 1]));
        let again = reorder(&back, a.order()).unwrap();
        assert_eq!(again, a);
    }

    #[test]
    fn reorder_rejects_non_permutation() {
        let a = OrderedOperator::identity(ModeOrder::from([1, 2]));
        assert_eq!(
            reorder(&a, &ModeOrder::from([1, 3])).unwrap_err(),
            Error::NotAPermutation
        );
    }

    #[test]
    fn prepend_even_number_operator() {
        let n = rep(&FermionPolynomial::number(3), &[3]);
        let out = prepend_mode(&n, 9).unwrap();
        assert_eq!(out, rep(&FermionPolynomial::number(3), &[9, 3]));
        let diag: Vec<Complex64> = (0..4).map(|i| out.entry(i, i)).collect();
        assert_eq!(diag, vec![c(0.0), c(1.0), c(0.0), c(1.0)]);
    }

    #[test]
    fn prepend_odd_gets_string() {
        let f = jwt_annihilator(&ModeOrder::from([3]), 3).unwrap();
        let out = prepend_mode(&f, 9).unwrap();
        assert_eq!(out, jwt_annihilator(&ModeOrder::from([9, 3]), 3).unwrap());
        assert_eq!(out.entry(0b10, 0b11), c(-1.0));
    }

    #[test]
    fn prepend_rejects_duplicates_and_mixed() {
        let n = rep(&FermionPolynomial::number(3), &[3]);
        assert_eq!(prepend_mode(&n, 3).unwrap_err(), Error::DuplicateMode(3));
        let mixed = rep(
            &(FermionPolynomial::create(3) + FermionPolynomial::number(3)),
            &[3],
        );
        assert_eq!(prepend_mode(&mixed, 1).unwrap_err(), Error::MixedGrading);
    }

    fn s12() -> FermionPolynomial {
        FermionPolynomial::one() - FermionPolynomial::number(1) - FermionPolynomial::number(2)
            + FermionPolynomial::hopping(1, 2)
    }

    #[test]
    fn conjugate_with_identity() {
        let a = rep(&FermionPolynomial::hopping(1, 2), &[1, 2]);
        let id = OrderedOperator::identity(ModeOrder::from([2, 1]));
        assert_eq!(conjugate(&a, &id).unwrap(), a);
    }

    #[test]
    fn fermionic_swap_exchanges_number_operators() {
        let u = rep(&s12(), &[1, 2]);
        assert_eq!(u.matrix(), &SwapMatrix.matrix());
        let n1 = rep(&FermionPolynomial::number(1), &[1, 2]);
        let out = conjugate(&n1, &u).unwrap();
        assert_eq!(out, rep(&FermionPolynomial::number(2), &[1, 2]));
    }

    #[test]
    fn conjugate_pair_rotation() {
        let pair = FermionPolynomial::term(
            c(1.0),
            [
                crate::fermion::LadderOp::create(1),
                crate::fermion::LadderOp::create(2),
            ],
        );
        let k = &pair - &pair.adjoint();
        let theta = std::f64::consts::FRAC_PI_4;
        // exp(θK) = exp(i·(−iθK)) with −iθK hermitian
        let h = rep(&k.scale(Complex64::new(0.0, -theta)), &[1, 2]);
        let u = crate::linalg::exp_i_even(&h);
        let n1 = rep(&FermionPolynomial::number(1), &[1, 2]);
        let out = conjugate(&n1, &u).unwrap();
        assert!((out.entry(0, 0) - c(0.5)).norm() < 1e-14);
    }

    #[test]
    fn conjugate_rejects_bad_gates() {
        let a = rep(&FermionPolynomial::number(1), &[1, 2]);
        let odd = jwt_annihilator(&ModeOrder::from([1, 2]), 1).unwrap();
        assert!(matches!(
            conjugate(&a, &odd),
            Err(Error::GradingViolation { .. })
        ));
        let not_unitary = rep(&FermionPolynomial::number(1), &[1, 2]);
        assert!(matches!(
            conjugate(&a, &not_unitary),
            Err(Error::NotUnitary { .. })
        ));
        let other = OrderedOperator::identity(ModeOrder::from([1, 3]));
        assert_eq!(conjugate(&a, &other).unwrap_err(), Error::ModeSetMismatch);
    }

    #[test]
    fn align_same_orders_is_noop() {
        let a = rep(&FermionPolynomial::hopping(1, 2), &[1, 2]);
        let b = rep(&FermionPolynomial::number(2), &[1, 2]);
        let (a2, b2) = align_supports(&a, &b).unwrap();
        assert_eq!((a2, b2), (a, b));
    }

    #[test]
    fn align_disjoint_number_operators() {
        let a = rep(&FermionPolynomial::number(1), &[1]);
        let b = rep(&FermionPolynomial::number(2), &[2]);
        let (a2, b2) = align_supports(&a, &b).unwrap();
        assert_eq!(a2.order(), &ModeOrder::from([1, 2]));
        assert_eq!(b2.order(), &ModeOrder::from([1, 2]));
        let ab = a2.mul(&b2).unwrap();
        let ba = b2.mul(&a2).unwrap();
        let direct = rep(
            &(FermionPolynomial::number(1) * FermionPolynomial::number(2)),
            &[1, 2],
        );
        assert_eq!(ab, direct);
        assert_eq!(ba, direct);
    }

    #[test]
    fn trace_of_identity_and_number() {
        let id = OrderedOperator::identity(ModeOrder::from([1, 2]));
        let t = partial_trace(&id, 1).unwrap();
        assert_eq!(t.matrix(), &DMatrix::identity(2, 2).scale(2.0));
        assert_eq!(t.order(), &ModeOrder::from([2]));

        let n1 = rep(&FermionPolynomial::number(1), &[1, 2]);
        let t = partial_trace(&n1, 1).unwrap();
        assert_eq!(t.matrix(), &DMatrix::identity(2, 2));
    }

    #[test]
    fn trace_missing_mode() {
        let id = OrderedOperator::identity(ModeOrder::from([1, 2]));
        assert_eq!(partial_trace(&id, 3).unwrap_err(), Error::ModeNotInOrder(3));
        assert_eq!(
            partial_project(&id, 3, false).unwrap_err(),
            Error::ModeNotInOrder(3)
        );
    }

    #[test]
    fn project_number_operator() {
        let n1 = rep(&FermionPolynomial::number(1), &[1, 2]);
        let p0 = partial_project(&n1, 1, false).unwrap();
        assert_eq!(p0.matrix(), &DMatrix::from_element(2, 2, c(0.0)));
        let p1 = partial_project(&n1, 1, true).unwrap();
        assert_eq!(p1.matrix(), &DMatrix::identity(2, 2));
    }

    #[test]
    fn sequential_projection_to_scalar() {
        let pair = FermionPolynomial::term(
            c(1.0),
            [
                crate::fermion::LadderOp::create(1),
                crate::fermion::LadderOp::create(2),
            ],
        );
        let p = &(&pair + &pair.adjoint())
            + &(FermionPolynomial::number(1) + FermionPolynomial::number(2));
        let a = rep(&p, &[1, 2]);
        let empty = partial_project(&partial_project(&a, 1, false).unwrap(), 2, false).unwrap();
        assert_eq!(empty.as_scalar(), Some(c(0.0)));
        let full = partial_project(&partial_project(&a, 1, true).unwrap(), 2, true).unwrap();
        assert_eq!(full.as_scalar(), Some(c(2.0)));
    }
}
