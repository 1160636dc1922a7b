//! Fermionic unitary circuits and their local contraction.
//!
//! A [`Circuit`] prepares `|ψ⟩ = U_T ⋯ U_1 |ref⟩` from a product reference
//! state. Expectation values `⟨ψ|A|ψ⟩` are computed by carrying `A` backwards
//! through the gates of its causal cone (`A ← U_t† A U_t`, last gate first),
//! dropping every mode onto its reference occupation as soon as no earlier
//! gate touches it.

mod cone;
mod contract;
mod density;
mod gate;

pub use cone::{causal_cone, CausalCone, ConeStep};
pub use contract::{
    contract_expectation, contract_expectation_with, contract_operator, ContractionOptions,
    ContractionStats, PreparedCircuit, Strategy, DEFAULT_WIDTH_CAP,
};
pub(crate) use contract::{observable_operator, TermPlan};
pub use density::reduced_density;
pub use gate::FermionGate;

use crate::error::{Error, Result};

/// Time-ordered parity-preserving gates on modes `1..=n_modes` acting on a
/// product reference state.
#[derive(Clone, Debug)]
pub struct Circuit {
    n_modes: usize,
    gates: Vec<FermionGate>,
    reference: Vec<bool>,
}

impl Circuit {
    /// Gates are stably sorted by time. Gates sharing a time step must act on
    /// disjoint modes; `occupied` lists the modes filled in the reference.
    pub fn new(n_modes: usize, mut gates: Vec<FermionGate>, occupied: &[usize]) -> Result<Self> {
        gates.sort_by_key(FermionGate::time);
        for g in &gates {
            if let Some(&m) = g.support().modes().iter().find(|&&m| m == 0 || m > n_modes) {
                return Err(Error::InvalidCircuit(format!(
                    "gate at time {} touches mode {m} outside 1..={n_modes}",
                    g.time()
                )));
            }
        }
        for w in gates.windows(2) {
            if w[0].time() == w[1].time() && w[0].support().modes().iter().any(|&m| w[1].touches(m))
            {
                return Err(Error::InvalidCircuit(format!(
                    "overlapping gates share time step {}",
                    w[0].time()
                )));
            }
        }
        let mut reference = vec![false; n_modes];
        for &m in occupied {
            if m == 0 || m > n_modes {
                return Err(Error::InvalidCircuit(format!(
                    "reference mode {m} out of range"
                )));
            }
            reference[m - 1] = true;
        }
        Ok(Self {
            n_modes,
            gates,
            reference,
        })
    }

    pub fn vacuum(n_modes: usize, gates: Vec<FermionGate>) -> Result<Self> {
        Self::new(n_modes, gates, &[])
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    pub fn gates(&self) -> &[FermionGate] {
        &self.gates
    }

    pub fn gate(&self, index: usize) -> &FermionGate {
        &self.gates[index]
    }

    pub fn is_occupied(&self, mode: usize) -> bool {
        self.reference[mode - 1]
    }

    pub fn occupied_modes(&self) -> Vec<usize> {
        (1..=self.n_modes)
            .filter(|&m| self.reference[m - 1])
            .collect()
    }

    /// Same gates on another reference state.
    pub fn with_reference(&self, occupied: &[usize]) -> Result<Self> {
        Self::new(self.n_modes, self.gates.clone(), occupied)
    }

    /// Replaces gate `index` by a gate with identical support and time.
    pub fn replace_gate(&mut self, index: usize, gate: FermionGate) -> Result<()> {
        let old = &self.gates[index];
        if old.support() != gate.support() {
            return Err(Error::ModeSetMismatch);
        }
        self.gates[index] = gate.with_time(old.time());
        Ok(())
    }
}
