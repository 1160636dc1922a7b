use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fermion::FermionPolynomial;

/// Spinless fermions on an open `width × height` grid:
///
/// ```text
/// H = t Σ_⟨j,k⟩ (f†_j f_k + f†_k f_j) + Σ_j n_j + u Σ_⟨j,k⟩ n_j n_k
/// ```
///
/// Site `(x, y)` (0-based) carries mode `y·width + x + 1`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LatticeModel {
    pub width: usize,
    pub height: usize,
    pub t: f64,
    pub u: f64,
}

/// One Hamiltonian term with the modes it is represented on.
#[derive(Clone, Debug, PartialEq)]
pub struct HamiltonianTerm {
    pub poly: FermionPolynomial,
    pub support: Vec<usize>,
}

impl LatticeModel {
    pub fn new(width: usize, height: usize, t: f64, u: f64) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidLattice(format!(
                "{width}x{height} has no sites"
            )));
        }
        if !t.is_finite() || !u.is_finite() {
            return Err(Error::InvalidLattice("non-finite coupling".into()));
        }
        Ok(Self {
            width,
            height,
            t,
            u,
        })
    }

    pub fn n_modes(&self) -> usize {
        self.width * self.height
    }

    pub fn label(&self, x: usize, y: usize) -> usize {
        y * self.width + x + 1
    }

    /// Nearest-neighbour bonds `(j, k)` with `j < k`, row by row.
    pub fn bonds(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::with_capacity(2 * self.n_modes());
        for y in 0..self.height {
            for x in 0..self.width {
                if x + 1 < self.width {
                    out.push((self.label(x, y), self.label(x + 1, y)));
                }
                if y + 1 < self.height {
                    out.push((self.label(x, y), self.label(x, y + 1)));
                }
            }
        }
        out
    }

    /// The same model with width and height exchanged.
    pub fn transposed(&self) -> Self {
        Self {
            width: self.height,
            height: self.width,
            ..*self
        }
    }

    pub fn bond_term(&self, j: usize, k: usize) -> FermionPolynomial {
        let c = |v: f64| Complex64::new(v, 0.0);
        FermionPolynomial::hopping(j, k).scale(c(self.t))
            + (FermionPolynomial::number(j) * FermionPolynomial::number(k)).scale(c(self.u))
    }
}

/// One term per bond (hopping and interaction together), then one on-site
/// number term per mode.
pub fn build_hamiltonian(m: &LatticeModel) -> Vec<HamiltonianTerm> {
    let mut terms: Vec<HamiltonianTerm> = m
        .bonds()
        .into_iter()
        .map(|(j, k)| HamiltonianTerm {
            poly: m.bond_term(j, k),
            support: vec![j, k],
        })
        .collect();
    terms.extend((1..=m.n_modes()).map(|j| HamiltonianTerm {
        poly: FermionPolynomial::number(j),
        support: vec![j],
    }));
    terms
}

/// Sum of all terms.
pub fn hamiltonian_polynomial(m: &LatticeModel) -> FermionPolynomial {
    build_hamiltonian(m)
        .into_iter()
        .fold(FermionPolynomial::zero(), |acc, t| acc + t.poly)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn term_counts() {
        let count = |w, h| {
            let m = LatticeModel::new(w, h, 1.0, 0.5).unwrap();
            let terms = build_hamiltonian(&m);
            (terms.len() - m.n_modes(), m.n_modes())
        };
        assert_eq!(count(1, 2), (1, 2));
        assert_eq!(count(2, 2), (4, 4));
        assert_eq!(count(3, 3), (12, 9));
        assert_eq!(count(4, 3), (2 * 12 - 4 - 3, 12));
    }

    #[test]
    fn single_bond_terms() {
        let m = LatticeModel::new(1, 2, 1.0, 0.0).unwrap();
        let terms = build_hamiltonian(&m);
        assert_eq!(terms[0].poly, FermionPolynomial::hopping(1, 2));
        assert_eq!(terms[0].support, vec![1, 2]);
        assert_eq!(terms[1].poly, FermionPolynomial::number(1));
        assert_eq!(terms[2].poly, FermionPolynomial::number(2));
        for t in &terms {
            assert!(t.poly.is_even());
            assert!(t.poly.hermiticity_defect() == 0.0);
        }
    }

    #[test]
    fn labels_are_row_major() {
        let m = LatticeModel::new(3, 2, 0.0, 0.0).unwrap();
        assert_eq!(m.label(0, 0), 1);
        assert_eq!(m.label(2, 0), 3);
        assert_eq!(m.label(0, 1), 4);
        assert_eq!(
            m.bonds(),
            vec![(1, 2), (1, 4), (2, 3), (2, 5), (3, 6), (4, 5), (5, 6)]
        );
    }

    #[test]
    fn empty_lattice_rejected() {
        assert!(LatticeModel::new(0, 3, 1.0, 0.0).is_err());
    }
}
