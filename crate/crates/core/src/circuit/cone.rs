use std::collections::BTreeSet;

use super::Circuit;
use crate::error::{Error, Result};

/// One included gate with the active modes around it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConeStep {
    pub gate: usize,
    pub before: BTreeSet<usize>,
    pub after: BTreeSet<usize>,
}

/// Gates that survive cancellation against their conjugates, last gate first.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CausalCone {
    pub steps: Vec<ConeStep>,
    pub active: BTreeSet<usize>,
}

impl CausalCone {
    /// Included gate indices in reverse time order.
    pub fn gates(&self) -> Vec<usize> {
        self.steps.iter().map(|s| s.gate).collect()
    }

    /// Largest active set reached.
    pub fn width(&self) -> usize {
        self.active.len()
    }
}

/// Walks the gates from the last to the first; a gate joins the cone iff it
/// touches the current active set, which then grows by its support.
pub fn causal_cone(c: &Circuit, observable_support: &[usize]) -> Result<CausalCone> {
    if observable_support.is_empty() {
        return Err(Error::EmptySupport);
    }
    if let Some(&m) = observable_support
        .iter()
        .find(|&&m| m == 0 || m > c.n_modes())
    {
        return Err(Error::ModeNotInOrder(m));
    }
    let mut active: BTreeSet<usize> = observable_support.iter().copied().collect();
    let mut steps = Vec::new();
    for (idx, gate) in c.gates().iter().enumerate().rev() {
        if gate.support().modes().iter().any(|m| active.contains(m)) {
            let before = active.clone();
            active.extend(gate.support().modes().iter().copied());
            steps.push(ConeStep {
                gate: idx,
                before,
                after: active.clone(),
            });
        }
    }
    Ok(CausalCone { steps, active })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::FermionGate;
    use crate::fermion::FermionPolynomial;
    use num_complex::Complex64;

    fn gate(j: usize, k: usize, t: u64) -> FermionGate {
        FermionGate::from_generator(
            FermionPolynomial::hopping(j, k).scale(Complex64::new(0.4, 0.0)),
            t,
        )
        .unwrap()
    }

    #[test]
    fn disjoint_gate_cancels() {
        let c = Circuit::vacuum(4, vec![gate(1, 2, 1), gate(3, 4, 2)]).unwrap();
        assert_eq!(causal_cone(&c, &[1]).unwrap().gates(), vec![0]);
    }

    #[test]
    fn both_gates_in_reverse_time() {
        let c = Circuit::vacuum(4, vec![gate(1, 2, 1), gate(3, 4, 2)]).unwrap();
        let cone = causal_cone(&c, &[2, 3]).unwrap();
        assert_eq!(cone.gates(), vec![1, 0]);
        assert_eq!(cone.active, BTreeSet::from([1, 2, 3, 4]));
    }

    #[test]
    fn brick_layer() {
        let c = Circuit::vacuum(4, vec![gate(1, 2, 1), gate(3, 4, 1), gate(2, 3, 2)]).unwrap();
        let cone = causal_cone(&c, &[1]).unwrap();
        assert_eq!(cone.gates(), vec![0]);
        let cone = causal_cone(&c, &[2]).unwrap();
        assert_eq!(cone.gates(), vec![2, 1, 0]);
    }

    #[test]
    fn empty_support_is_an_error() {
        let c = Circuit::vacuum(2, vec![]).unwrap();
        assert_eq!(causal_cone(&c, &[]).unwrap_err(), Error::EmptySupport);
    }
}
