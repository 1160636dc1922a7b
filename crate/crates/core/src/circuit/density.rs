use nalgebra::DMatrix;
use num_complex::Complex64;

use super::contract::{ContractionOptions, PreparedCircuit};
use super::Circuit;
use crate::error::{Error, Result};
use crate::fermion::{index_parity, ModeOrder, OrderedOperator};

/// Reduced density matrix of `|ψ⟩` on `modes`, in ascending mode order.
///
/// Entry `ρ[j, i] = ⟨ψ| |i⟩⟨j| |ψ⟩` for basis states of equal parity; the
/// opposite-parity entries vanish by superselection.
pub fn reduced_density(
    c: &Circuit,
    modes: &[usize],
    options: ContractionOptions,
) -> Result<OrderedOperator> {
    if modes.is_empty() {
        return Err(Error::EmptySupport);
    }
    if modes.len() > options.width_cap {
        return Err(Error::WidthCapExceeded {
            width: modes.len(),
            cap: options.width_cap,
        });
    }
    let order = ModeOrder::new(modes.to_vec())?;
    let order = ModeOrder::ascending(order.modes().iter().copied());
    let prepared = PreparedCircuit::new(c, options);
    let dim = order.dim();
    let mut rho = DMatrix::from_element(dim, dim, Complex64::new(0.0, 0.0));
    for i in 0..dim {
        for j in 0..dim {
            if index_parity(i) != index_parity(j) {
                continue;
            }
            let mut e = DMatrix::from_element(dim, dim, Complex64::new(0.0, 0.0));
            e[(i, j)] = Complex64::new(1.0, 0.0);
            let op = OrderedOperator::new(order.clone(), e)?;
            let (v, _) = prepared.expectation_operator(&op)?;
            rho[(j, i)] = v;
        }
    }
    OrderedOperator::new(order, rho)
}
