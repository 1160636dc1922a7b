use nalgebra::DMatrix;

use super::{BlockShape, LatticeModel};
use crate::error::{Error, Result};
use crate::fermion::{represent_polynomial, ModeOrder};
use crate::linalg;
use crate::oracle::{check_cap, exact_ground_energy};

/// Ground energy at `u = 0`: the sum of the negative levels of the
/// single-particle matrix `t·A + 1`, `A` the grid adjacency.
pub fn free_fermion_energy(m: &LatticeModel) -> Result<f64> {
    if m.u != 0.0 {
        return Err(Error::InteractingModel(m.u));
    }
    let n = m.n_modes();
    let mut h = DMatrix::<f64>::identity(n, n);
    for (j, k) in m.bonds() {
        h[(j - 1, k - 1)] = m.t;
        h[(k - 1, j - 1)] = m.t;
    }
    let mut levels: Vec<f64> = h.symmetric_eigenvalues().iter().copied().collect();
    levels.sort_by(f64::total_cmp);
    Ok(levels.iter().filter(|&&e| e < 0.0).sum())
}

/// Lower bound from `H = Σ_blocks H_b + Σ_cut h_bond`: each block keeps its
/// interior bonds and on-site terms, and every bond between blocks is a
/// separate two-mode problem.
pub fn anderson_bound(m: &LatticeModel, block: BlockShape) -> Result<f64> {
    if m.width % block.width != 0 || m.height % block.height != 0 {
        return Err(Error::InvalidLattice(format!(
            "{}x{} lattice is not tiled by {block} blocks",
            m.width, m.height
        )));
    }
    check_cap(block.sites())?;
    let sub = LatticeModel::new(block.width, block.height, m.t, m.u)?;
    let n_blocks = (m.width / block.width) * (m.height / block.height);
    let block_energy = exact_ground_energy(&sub)?;
    let cut = m.bonds().len() - n_blocks * sub.bonds().len();
    let bond = m.bond_term(1, 2);
    let bond_energy = linalg::min_eigenvalue_hermitian(
        represent_polynomial(&bond, &ModeOrder::from([1, 2]))?.matrix(),
    );
    Ok(n_blocks as f64 * block_energy + cut as f64 * bond_energy)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_site_free_energy() {
        for t in [-1.0, 0.0, 2.0] {
            assert_eq!(
                free_fermion_energy(&LatticeModel::new(1, 1, t, 0.0).unwrap()).unwrap(),
                0.0
            );
        }
    }

    #[test]
    fn plaquette_levels() {
        let e = free_fermion_energy(&LatticeModel::new(2, 2, -0.6, 0.0).unwrap()).unwrap();
        assert!((e + 0.2).abs() < 1e-14);
        let e = free_fermion_energy(&LatticeModel::new(2, 2, 0.3, 0.0).unwrap()).unwrap();
        assert_eq!(e, 0.0);
    }

    #[test]
    fn interacting_model_rejected() {
        let m = LatticeModel::new(2, 2, -0.6, 0.5).unwrap();
        assert_eq!(
            free_fermion_energy(&m).unwrap_err(),
            Error::InteractingModel(0.5)
        );
    }

    #[test]
    fn trivial_bound_is_zero() {
        let m = LatticeModel::new(4, 2, 0.0, 0.0).unwrap();
        assert_eq!(
            anderson_bound(&m, BlockShape::new(2, 1).unwrap()).unwrap(),
            0.0
        );
    }

    #[test]
    fn plaquette_bound_below_exact() {
        let m = LatticeModel::new(2, 2, -0.6, 0.0).unwrap();
        let v = anderson_bound(&m, BlockShape::new(2, 1).unwrap()).unwrap();
        // dimers stay empty (lowest level 1 − 0.6 > 0); two cut bonds at −0.6
        assert!((v + 1.2).abs() < 1e-12);
        assert!(v <= -0.2);
    }

    #[test]
    fn oversized_block_hits_the_cap() {
        let m = LatticeModel::new(5, 5, 1.0, 0.0).unwrap();
        let err = anderson_bound(&m, BlockShape::new(5, 5).unwrap()).unwrap_err();
        assert!(err.is_resource_limit());
    }
}
