//! Occupation-number representation of a finite set of fermionic modes.
//!
//! A [`ModeOrder`] fixes which mode sits at which tensor position. Basis
//! states are `|i_1,…,i_k⟩ = (f†_{O_1})^{i_1}···(f†_{O_k})^{i_k}|ø⟩` and the
//! basis index is big-endian: position 0 of the order is the most significant
//! bit. The Jordan-Wigner image of an annihilator carries a `σ^z` string over
//! every preceding position, with `σ^z = diag(+1, −1)` on (empty, occupied).

mod operator;
mod polynomial;

pub(crate) use operator::{classify, parity_sectors};
pub use operator::{jwt_annihilator, parity_blocks, represent_polynomial, OrderedOperator};
pub use polynomial::{FermionPolynomial, LadderOp, Monomial};

use std::collections::HashSet;
use std::fmt;

use crate::error::{Error, Result};

/// Ordered sequence of distinct global mode labels.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct ModeOrder(Vec<usize>);

impl ModeOrder {
    pub fn new(modes: Vec<usize>) -> Result<Self> {
        let mut seen = HashSet::with_capacity(modes.len());
        for &m in &modes {
            if !seen.insert(m) {
                return Err(Error::DuplicateMode(m));
            }
        }
        Ok(Self(modes))
    }

    pub fn empty() -> Self {
        Self(Vec::new())
    }

    /// Modes sorted ascending; duplicates are removed.
    pub fn ascending<I: IntoIterator<Item = usize>>(modes: I) -> Self {
        let mut v: Vec<usize> = modes.into_iter().collect();
        v.sort_unstable();
        v.dedup();
        Self(v)
    }

    pub fn modes(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Hilbert space dimension `2^len`.
    pub fn dim(&self) -> usize {
        1usize << self.0.len()
    }

    pub fn position(&self, mode: usize) -> Option<usize> {
        self.0.iter().position(|&m| m == mode)
    }

    pub fn contains(&self, mode: usize) -> bool {
        self.0.contains(&mode)
    }

    /// Bit mask of `position` inside a basis index.
    #[inline]
    pub fn mask(&self, position: usize) -> usize {
        1usize << (self.0.len() - 1 - position)
    }

    /// True when both orders hold the same set of modes.
    pub fn same_modes(&self, other: &ModeOrder) -> bool {
        self.len() == other.len() && self.0.iter().all(|m| other.contains(*m))
    }

    pub fn is_ascending(&self) -> bool {
        self.0.windows(2).all(|w| w[0] < w[1])
    }
}

impl fmt::Debug for ModeOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.0)
    }
}

impl From<&[usize]> for ModeOrder {
    /// Panics on duplicate labels; use [`ModeOrder::new`] for fallible input.
    fn from(modes: &[usize]) -> Self {
        ModeOrder::new(modes.to_vec()).expect("duplicate mode label")
    }
}

impl<const N: usize> From<[usize; N]> for ModeOrder {
    fn from(modes: [usize; N]) -> Self {
        ModeOrder::from(&modes[..])
    }
}

/// One occupation-number basis state of a mode order.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct OccupationState {
    bits: Vec<bool>,
}

impl OccupationState {
    pub fn new(bits: Vec<bool>) -> Self {
        Self { bits }
    }

    /// State of `len` positions encoded by a big-endian basis index.
    pub fn from_index(index: usize, len: usize) -> Self {
        let bits = (0..len).map(|p| index >> (len - 1 - p) & 1 == 1).collect();
        Self { bits }
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn index(&self) -> usize {
        self.bits.iter().fold(0, |acc, &b| (acc << 1) | b as usize)
    }

    /// `(Σ bits) mod 2`.
    pub fn parity(&self) -> u8 {
        (self.bits.iter().filter(|&&b| b).count() % 2) as u8
    }
}

impl fmt::Display for OccupationState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("|")?;
        for &b in &self.bits {
            f.write_str(if b { "1" } else { "0" })?;
        }
        f.write_str("⟩")
    }
}

/// All `2^k` basis states of `order` in lexicographic (index) order.
pub fn enumerate_basis(order: &ModeOrder) -> Vec<OccupationState> {
    (0..order.dim())
        .map(|i| OccupationState::from_index(i, order.len()))
        .collect()
}

/// Parity-block structure of an operator matrix.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Grading {
    Even,
    Odd,
    Mixed,
}

#[inline]
pub(crate) fn index_parity(index: usize) -> u32 {
    index.count_ones() & 1
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn basis_single_mode() {
        let b = enumerate_basis(&ModeOrder::from([7]));
        assert_eq!(b.len(), 2);
        assert_eq!(b[0].bits(), &[false]);
        assert_eq!(b[1].bits(), &[true]);
    }

    #[test]
    fn basis_two_modes_lexicographic() {
        let b = enumerate_basis(&ModeOrder::from([2, 5]));
        let shown: Vec<String> = b.iter().map(|s| s.to_string()).collect();
        assert_eq!(shown, ["|00⟩", "|01⟩", "|10⟩", "|11⟩"]);
        for (i, s) in b.iter().enumerate() {
            assert_eq!(s.index(), i);
        }
    }

    #[test]
    fn basis_empty_order() {
        let b = enumerate_basis(&ModeOrder::empty());
        assert_eq!(b.len(), 1);
        assert!(b[0].bits().is_empty());
        assert_eq!(b[0].parity(), 0);
    }

    #[test]
    fn duplicate_modes_rejected() {
        assert_eq!(ModeOrder::new(vec![1, 2, 1]), Err(Error::DuplicateMode(1)));
    }

    #[test]
    fn parity_of_states() {
        let s = OccupationState::from_index(0b1011, 4);
        assert_eq!(s.bits(), &[true, false, true, true]);
        assert_eq!(s.parity(), 1);
    }
}
