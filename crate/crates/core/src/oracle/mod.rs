//! Dense reference implementation in the fixed global order `(1, …, n)`.
//!
//! Everything here builds full `2^n`-dimensional objects with explicit
//! Jordan-Wigner strings, the expensive way. It exists to check the local
//! machinery, and refuses to run beyond [`ORACLE_CAP`] modes.

mod ed;
mod global;
mod state;

pub use ed::{exact_ground_energy, ground_energy, lanczos_ground_energy, DENSE_LIMIT};
pub use global::{global_jwt, global_ladder, GlobalOperator};
pub use state::{apply_gate, embed_gate, global_expectation, reference_state, statevector};

use crate::error::{Error, Result};

/// Largest mode count the oracle accepts.
pub const ORACLE_CAP: usize = 14;

pub(crate) fn check_cap(n: usize) -> Result<()> {
    if n > ORACLE_CAP {
        Err(Error::OracleCapExceeded {
            modes: n,
            cap: ORACLE_CAP,
        })
    } else {
        Ok(())
    }
}
